"""Run configuration: ``section.key=value`` lines with ``#`` comments."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from mdgesture.classify import METRICS, KnnConfig
from mdgesture.errors import BadConfig
from mdgesture.pipelines import FeatureSettings
from mdgesture.signal import DEFAULT_SAMPLE_RATE_HZ, StftConfig
from mdgesture.synth import SynthConfig

CLASSIFIERS = ("knn", "svm")

# key -> (type, default)
_SCHEMA: dict[str, tuple[type, object]] = {
    "stft.L": (int, 2048),
    "stft.K": (int, 4096),
    "stft.hop": (int, 64),
    "envelope.n_out": (int, 128),
    "envelope.normalize": (bool, False),
    "knn.k": (int, 1),
    "knn.metric": (str, "L1"),
    "eval.train_frac": (float, 0.7),
    "eval.trials": (int, 100),
    "eval.seed": (int, 42),
    "eval.classifier": (str, "knn"),
    "synth.n_per_class": (int, 50),
    "synth.snr_db": (float, 20.0),
    "synth.jitter": (float, 0.3),
    "synth.onset_jitter_s": (float, 0.05),
    "synth.seed": (int, 42),
    "synth.variants": (int, 1),
    "synth.duration_s": (float, 1.0),
    "sparse.P": (int, 10),
    "sparse.time_step": (int, 1024),
    "sparse.freq_step": (float, 25.0),
    "sparse.scale": (float, 512.0),
    "pca.d": (int, 30),
    "svm.epochs": (int, 200),
    "svm.lam": (float, 1e-3),
    "group.tau": (float, 0.85),
    "group.d": (int, 10),
    "io.sample_rate_hz": (float, DEFAULT_SAMPLE_RATE_HZ),
}

KEYS = tuple(_SCHEMA)


def _convert(key: str, text: str, where: str):
    typ = _SCHEMA[key][0]
    if typ is bool:
        low = text.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise BadConfig(f"{where}: {key} expects true/false, got {text!r}")
    try:
        if typ is int:
            return int(text)
        if typ is float:
            return float(text)
    except ValueError:
        raise BadConfig(f"{where}: {key} expects {typ.__name__}, got {text!r}") from None
    return text


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=lambda: {k: d for k, (_, d) in _SCHEMA.items()})

    def __post_init__(self):
        self.validate()

    def __getitem__(self, key: str):
        return self.values[key]

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "RunConfig":
        vals = {k: d for k, (_, d) in _SCHEMA.items()}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            where = f"{source}:{lineno}"
            if "=" not in line:
                raise BadConfig(f"{where}: expected section.key=value, got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in _SCHEMA:
                raise BadConfig(f"{where}: unknown key {key!r}")
            vals[key] = _convert(key, value, where)
        return cls(vals)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise BadConfig(f"cannot read config {path}: {exc}") from exc
        except UnicodeDecodeError as exc:
            raise BadConfig(f"{path}: not UTF-8") from exc
        return cls.from_text(text, str(path))

    def with_overrides(self, **kv) -> "RunConfig":
        vals = dict(self.values)
        for key, value in kv.items():
            if key not in _SCHEMA:
                raise BadConfig(f"unknown key {key!r}")
            vals[key] = _convert(key, str(value), "override")
        return RunConfig(vals)

    def dump(self) -> str:
        return "".join(f"{k}={_fmt(self.values[k])}\n" for k in KEYS)

    def write(self, path) -> None:
        Path(path).write_text(self.dump(), encoding="utf-8")

    # module configs; each constructor re-checks its own invariants
    def stft(self) -> StftConfig:
        return StftConfig(self["stft.L"], self["stft.K"], self["stft.hop"])

    def features(self) -> FeatureSettings:
        return FeatureSettings(self.stft(), self["envelope.n_out"], self["sparse.P"],
                               self["sparse.time_step"], self["sparse.freq_step"], self["sparse.scale"],
                               self["envelope.normalize"])

    def knn(self) -> KnnConfig:
        # normalized envelopes are already in units of fs/2
        scale = 1.0 if self["envelope.normalize"] else self["io.sample_rate_hz"] / 2
        return KnnConfig(self["knn.k"], self["knn.metric"], scale)

    def synth(self) -> SynthConfig:
        return SynthConfig(self["synth.n_per_class"], self["synth.snr_db"], self["synth.jitter"],
                           self["synth.seed"], self["io.sample_rate_hz"], self["synth.duration_s"],
                           self["synth.variants"], self["synth.onset_jitter_s"])

    def validate(self) -> None:
        v = self.values
        unknown = set(v) - set(_SCHEMA)
        if unknown:
            raise BadConfig(f"unknown keys {sorted(unknown)}")
        try:
            self.stft()
            self.synth()
        except BadConfig:
            raise
        except (ValueError, TypeError) as exc:
            raise BadConfig(str(exc)) from exc
        if v["envelope.n_out"] < 2:
            raise BadConfig("envelope.n_out must be >= 2")
        if v["knn.k"] < 1:
            raise BadConfig("knn.k must be >= 1")
        if v["knn.metric"] not in METRICS:
            raise BadConfig(f"knn.metric must be one of {METRICS}")
        if not 0 < v["eval.train_frac"] < 1:
            raise BadConfig("eval.train_frac must lie in (0, 1)")
        if v["eval.trials"] < 1:
            raise BadConfig("eval.trials must be >= 1")
        if v["eval.classifier"] not in CLASSIFIERS:
            raise BadConfig(f"eval.classifier must be one of {CLASSIFIERS}")
        if v["sparse.P"] < 1:
            raise BadConfig("sparse.P must be >= 1")
        if v["sparse.time_step"] < 1 or v["sparse.freq_step"] <= 0 or v["sparse.scale"] <= 0:
            raise BadConfig("sparse grid steps and scale must be positive")
        if v["pca.d"] < 1 or v["group.d"] < 1:
            raise BadConfig("pca.d and group.d must be >= 1")
        if v["svm.epochs"] < 1 or v["svm.lam"] <= 0:
            raise BadConfig("svm.epochs must be >= 1 and svm.lam > 0")
        if not 0 <= v["group.tau"] <= 1:
            raise BadConfig("group.tau must lie in [0, 1]")
        if v["io.sample_rate_hz"] <= 0:
            raise BadConfig("io.sample_rate_hz must be positive")
