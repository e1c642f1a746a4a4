"""Experiment configuration: one JSON document, validated with field paths."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

SUITES = ("identities", "bounds", "norms")
TRIAL_MODES = ("perturbation", "independent_r")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class ProtocolParams:
    smoothness: int = 5
    even_scale: float = 1.0
    odd_scale: float = 0.5


@dataclass(frozen=True)
class TrialParams:
    epsilon: tuple[float, ...] = (0.1,)
    mode: str = "perturbation"


@dataclass(frozen=True)
class ExperimentConfig:
    dim: int = 4
    beta: tuple[float, ...] = (1.0,)
    duration: float = 1.0
    slices: int = 64
    master_seed: int = 0
    trials: int = 10
    lambda_amplitude: float = 0.3
    suites: tuple[str, ...] = SUITES
    workers: int = 1
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    trial: TrialParams = field(default_factory=TrialParams)
    outputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("beta", "suites"):
            d[key] = list(d[key])
        d["trial"]["epsilon"] = list(d["trial"]["epsilon"])
        return d

    def replace(self, **overrides) -> ExperimentConfig:
        doc = self.to_dict()
        doc.update({k: v for k, v in overrides.items() if v is not None})
        return parse_config(doc)


def _int(doc, key, path, minimum):
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(path, f"expected an integer, got {v!r}")
    if v < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {v}")
    return v


def _float(v, path, positive=False, nonnegative=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    v = float(v)
    if positive and not v > 0:
        raise ConfigError(path, f"must be > 0, got {v}")
    if nonnegative and v < 0:
        raise ConfigError(path, f"must be >= 0, got {v}")
    return v


def _float_list(v, path, **kw):
    items = list(v) if isinstance(v, (list, tuple)) else [v]
    if not items:
        raise ConfigError(path, "must not be empty")
    return tuple(_float(x, f"{path}[{i}]", **kw) for i, x in enumerate(items))


def _known(doc: dict, allowed, path: str):
    if not isinstance(doc, dict):
        raise ConfigError(path or "config", "expected an object")
    extra = sorted(set(doc) - set(allowed))
    if extra:
        raise ConfigError(f"{path}.{extra[0]}" if path else extra[0], "unknown field")


def parse_config(doc: dict) -> ExperimentConfig:
    base = ExperimentConfig()
    top = {f: getattr(base, f) for f in ExperimentConfig.__dataclass_fields__}
    _known(doc, top, "")
    merged = {**top, **doc}
    proto_doc = merged["protocol"] if isinstance(merged["protocol"], dict) else asdict(merged["protocol"])
    trial_doc = merged["trial"] if isinstance(merged["trial"], dict) else asdict(merged["trial"])
    _known(proto_doc, ProtocolParams.__dataclass_fields__, "protocol")
    _known(trial_doc, TrialParams.__dataclass_fields__, "trial")
    proto = {**asdict(ProtocolParams()), **proto_doc}
    trial = {**asdict(TrialParams()), **trial_doc}

    suites = merged["suites"]
    if isinstance(suites, str):
        suites = [suites]
    if not isinstance(suites, (list, tuple)) or not suites:
        raise ConfigError("suites", "expected a non-empty list")
    if "all" in suites:
        suites = list(SUITES)
    for i, s in enumerate(suites):
        if s not in SUITES:
            raise ConfigError(f"suites[{i}]", f"unknown suite {s!r}")
    if trial["mode"] not in TRIAL_MODES:
        raise ConfigError("trial.mode", f"expected one of {TRIAL_MODES}, got {trial['mode']!r}")
    if not isinstance(merged["outputs"], dict):
        raise ConfigError("outputs", "expected an object")

    return ExperimentConfig(
        dim=_int(merged, "dim", "dim", 2),
        beta=_float_list(merged["beta"], "beta", positive=True),
        duration=_float(merged["duration"], "duration", positive=True),
        slices=_int(merged, "slices", "slices", 1),
        master_seed=_int(merged, "master_seed", "master_seed", 0),
        trials=_int(merged, "trials", "trials", 1),
        lambda_amplitude=_float(merged["lambda_amplitude"], "lambda_amplitude"),
        suites=tuple(s for s in SUITES if s in suites),
        workers=_int(merged, "workers", "workers", 1),
        protocol=ProtocolParams(
            smoothness=_int(proto, "smoothness", "protocol.smoothness", 2),
            even_scale=_float(proto["even_scale"], "protocol.even_scale", nonnegative=True),
            odd_scale=_float(proto["odd_scale"], "protocol.odd_scale", nonnegative=True),
        ),
        trial=TrialParams(
            epsilon=_float_list(trial["epsilon"], "trial.epsilon", nonnegative=True),
            mode=trial["mode"],
        ),
        outputs=dict(merged["outputs"]),
    )


def load_config(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from exc
    return parse_config(doc)
