"""Hot inner loops, each with a numba and a pure-numpy implementation.

The module-level functions dispatch to :data:`BACKEND`. Both implementations
stay importable through :data:`numba_kernels` and :data:`numpy_kernels` so the
benchmark and the tests can compare them side by side.
"""
from types import SimpleNamespace

import numpy as np

from mdgesture._jit import HAVE_NUMBA, USE_NUMBA, njit

# ---------------------------------------------------------------- numba path


@njit
def _nb_pairwise_l1(A, B):
    na, nd = A.shape
    nb = B.shape[0]
    out = np.empty((na, nb))
    for i in range(na):
        for j in range(nb):
            s = 0.0
            for k in range(nd):
                s += abs(A[i, k] - B[j, k])
            out[i, j] = s
    return out


@njit
def _nb_pairwise_l2(A, B):
    na, nd = A.shape
    nb = B.shape[0]
    out = np.empty((na, nb))
    for i in range(na):
        for j in range(nb):
            s = 0.0
            for k in range(nd):
                d = A[i, k] - B[j, k]
                s += d * d
            out[i, j] = np.sqrt(s)
    return out


@njit
def _nb_directed_mean(pa, pb):
    acc = 0.0
    for i in range(pa.shape[0]):
        best = np.inf
        for j in range(pb.shape[0]):
            dx = pa[i, 0] - pb[j, 0]
            dy = pa[i, 1] - pb[j, 1]
            d = dx * dx + dy * dy
            if d < best:
                best = d
        acc += np.sqrt(best)
    return acc / pa.shape[0]


@njit
def _nb_pairwise_mhd(pts_a, off_a, pts_b, off_b):
    na = off_a.shape[0] - 1
    nb = off_b.shape[0] - 1
    out = np.empty((na, nb))
    for i in range(na):
        pa = pts_a[off_a[i]:off_a[i + 1]]
        for j in range(nb):
            pb = pts_b[off_b[j]:off_b[j + 1]]
            out[i, j] = max(_nb_directed_mean(pa, pb), _nb_directed_mean(pb, pa))
    return out


@njit
def _nb_edge_crossing(band, thresholds, active):
    # band[:, 0] is the outermost bin; returns the first index (from the edge)
    # at which the running energy reaches the threshold, -1 when none does.
    n_frames, n_bins = band.shape
    out = np.full(n_frames, -1, dtype=np.int64)
    for n in range(n_frames):
        if not active[n]:
            continue
        acc = 0.0
        for k in range(n_bins):
            acc += band[n, k]
            if acc >= thresholds[n]:
                out[n] = k
                break
    return out


@njit
def _nb_assign(points, centroids):
    n = points.shape[0]
    K = centroids.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dist2 = np.empty(n)
    for i in range(n):
        best = np.inf
        arg = 0
        for c in range(K):
            s = 0.0
            for d in range(points.shape[1]):
                t = points[i, d] - centroids[c, d]
                s += t * t
            if s < best:
                best = s
                arg = c
        labels[i] = arg
        dist2[i] = best
    return labels, dist2


@njit
def _nb_pegasos(Z, Y, order, lam):
    n_cls, n_feat = Y.shape[0], Z.shape[1]
    W = np.zeros((n_cls, n_feat))
    for t in range(order.shape[0]):
        i = order[t]
        eta = 1.0 / (lam * (t + 1))
        shrink = 1.0 - eta * lam
        for c in range(n_cls):
            m = 0.0
            for f in range(n_feat):
                m += W[c, f] * Z[i, f]
            y = Y[c, i]
            for f in range(n_feat):
                W[c, f] *= shrink
            if y * m < 1.0:
                for f in range(n_feat):
                    W[c, f] += eta * y * Z[i, f]
    return W


# ---------------------------------------------------------------- numpy path


def _np_pairwise_l1(A, B):
    out = np.empty((A.shape[0], B.shape[0]))
    for i in range(A.shape[0]):
        out[i] = np.abs(B - A[i]).sum(axis=1)
    return out


def _np_pairwise_l2(A, B):
    out = np.empty((A.shape[0], B.shape[0]))
    for i in range(A.shape[0]):
        diff = B - A[i]
        out[i] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return out


def _np_directed_mean(pa, pb):
    d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2)
    return np.sqrt(d2.min(axis=1)).mean()


def _np_pairwise_mhd(pts_a, off_a, pts_b, off_b):
    na, nb = len(off_a) - 1, len(off_b) - 1
    out = np.empty((na, nb))
    for i in range(na):
        pa = pts_a[off_a[i]:off_a[i + 1]]
        for j in range(nb):
            pb = pts_b[off_b[j]:off_b[j + 1]]
            out[i, j] = max(_np_directed_mean(pa, pb), _np_directed_mean(pb, pa))
    return out


def _np_edge_crossing(band, thresholds, active):
    running = np.cumsum(band, axis=1)
    hit = running >= thresholds[:, None]
    idx = np.argmax(hit, axis=1).astype(np.int64)
    idx[~hit.any(axis=1)] = -1
    idx[~active] = -1
    return idx


def _np_assign(points, centroids):
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1).astype(np.int64)
    return labels, d2[np.arange(len(points)), labels]


def _np_pegasos(Z, Y, order, lam):
    W = np.zeros((Y.shape[0], Z.shape[1]))
    for t, i in enumerate(order):
        eta = 1.0 / (lam * (t + 1))
        x = Z[i]
        y = Y[:, i]
        violated = y * (W @ x) < 1.0
        W *= 1.0 - eta * lam
        W[violated] += eta * y[violated, None] * x
    return W


numpy_kernels = SimpleNamespace(
    name="numpy",
    pairwise_l1=_np_pairwise_l1,
    pairwise_l2=_np_pairwise_l2,
    pairwise_mhd=_np_pairwise_mhd,
    edge_crossing=_np_edge_crossing,
    assign=_np_assign,
    pegasos=_np_pegasos,
)

numba_kernels = SimpleNamespace(
    name="numba",
    pairwise_l1=_nb_pairwise_l1,
    pairwise_l2=_nb_pairwise_l2,
    pairwise_mhd=_nb_pairwise_mhd,
    edge_crossing=_nb_edge_crossing,
    assign=_nb_assign,
    pegasos=_nb_pegasos,
) if HAVE_NUMBA else None

BACKEND = numba_kernels if USE_NUMBA else numpy_kernels


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def pairwise_l1(A, B):
    return BACKEND.pairwise_l1(_f64(A), _f64(B))


def pairwise_l2(A, B):
    return BACKEND.pairwise_l2(_f64(A), _f64(B))


def pack_point_sets(sets):
    """Flatten a list of (m_i, 2) arrays into ``(points, offsets)``."""
    sizes = [len(s) for s in sets]
    offsets = np.zeros(len(sets) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(sizes)
    points = np.concatenate([_f64(s).reshape(-1, 2) for s in sets]) if sets else np.empty((0, 2))
    return _f64(points), offsets


def pairwise_mhd(sets_a, sets_b):
    pa, oa = pack_point_sets(sets_a)
    pb, ob = pack_point_sets(sets_b)
    return BACKEND.pairwise_mhd(pa, oa, pb, ob)


def edge_crossing(band, thresholds, active):
    return BACKEND.edge_crossing(_f64(band), _f64(thresholds), np.ascontiguousarray(active, dtype=np.bool_))


def assign(points, centroids):
    return BACKEND.assign(_f64(points), _f64(centroids))


def pegasos(Z, Y, order, lam):
    return BACKEND.pegasos(_f64(Z), _f64(Y), np.ascontiguousarray(order, dtype=np.int64), float(lam))
