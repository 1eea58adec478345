"""Experiment manifests and result records (JSON).

Manifest schema::

    {
      "task": "joint" | "chsh" | "scan" | "mi" | "nosignal" | "sample" | "curve" | "verify",
      "models": [{"name": "hall", "params": {}}, ...],
      "settings": {"pairs": [[a, b], ...]}
               or {"grid": {"start": x0, "stop": x1, "count": n, "endpoint": false}},
      "degrees": false,
      "trials": 1000000,
      "seed": 20180414,
      "options": {...},          # task-specific knobs, e.g. grid_n, probes
      "tolerances": {...},       # overrides of DEFAULT_TOLERANCES
      "output": {"path": null, "format": "json"}
    }

The digest of a manifest is the SHA-256 of its canonical JSON form (sorted
keys, no whitespace), so a manifest that is written out and read back keeps
its digest.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .models import BUILTIN_MODELS, MODEL_FACTORIES

TASKS = ("joint", "chsh", "scan", "mi", "nosignal", "sample", "curve", "verify")
OUTPUT_FORMATS = ("json", "csv")

SEED_ENV = "RETROBELL_SEED"
FALLBACK_SEED = 20180414

DEFAULT_TOLERANCES = {
    "equivalence_simplistic": 1e-12,
    "equivalence_hall": 1e-10,
    "baseline_min_tv": 1e-3,
    "normalization": 1e-10,
    "no_signaling": 1e-10,
    "signaling_min": 0.01,
    "chsh": 1e-6,
    "mi_bound": 0.07,
    "mc_sigma": 3.0,
    "chi2_alpha": 1e-3,
}


class ManifestError(ValueError):
    """A manifest that cannot be executed as written."""


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return FALLBACK_SEED
    try:
        return int(raw, 0)
    except ValueError:
        raise ManifestError(f"{SEED_ENV}={raw!r} is not an integer") from None


@dataclass
class ModelSpec:
    name: str
    params: dict = field(default_factory=dict)

    def build(self):
        try:
            return MODEL_FACTORIES[self.name](**self.params)
        except KeyError:
            raise ManifestError(f"unknown model {self.name!r}") from None
        except TypeError as exc:
            raise ManifestError(f"bad parameters for model {self.name!r}: {exc}") from None


@dataclass
class ExperimentManifest:
    task: str
    models: list[ModelSpec] | None = None
    settings: dict = field(default_factory=dict)
    degrees: bool = False
    trials: int = 0
    seed: int = field(default_factory=default_seed)
    options: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    output: dict = field(default_factory=lambda: {"path": None, "format": "json"})

    def __post_init__(self):
        if self.models is None:
            names = BUILTIN_MODELS if self.task == "verify" else ("qm",)
            self.models = [ModelSpec(n) for n in names]
        self.validate()

    def validate(self) -> None:
        if self.task not in TASKS:
            raise ManifestError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if not self.models:
            raise ManifestError("at least one model is required")
        for spec in self.models:
            if spec.name not in MODEL_FACTORIES:
                raise ManifestError(f"unknown model {spec.name!r}")
            if not isinstance(spec.params, dict):
                raise ManifestError("model params must be an object")
        if not isinstance(self.trials, int) or self.trials < 0:
            raise ManifestError("trials must be a nonnegative integer")
        if self.task == "sample" and self.trials < 1:
            raise ManifestError("task 'sample' needs trials >= 1")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ManifestError("seed must be an integer in [0, 2**64)")
        for key, tol in self.tolerances.items():
            if key not in DEFAULT_TOLERANCES:
                raise ManifestError(f"unknown tolerance {key!r}")
            if not isinstance(tol, (int, float)) or not tol > 0:
                raise ManifestError(f"tolerance {key!r} must be > 0")
        if self.output.get("format", "json") not in OUTPUT_FORMATS:
            raise ManifestError(f"output format must be one of {OUTPUT_FORMATS}")
        self.setting_pairs()  # raises on a malformed settings block

    @property
    def model(self) -> ModelSpec:
        return self.models[0]

    def tolerance(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def _angle(self, x) -> float:
        if not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ManifestError(f"angle {x!r} is not a finite number")
        return math.radians(x) if self.degrees else float(x)

    def axis(self) -> list[float]:
        """The grid axis in radians (grid settings only)."""
        grid = self.settings.get("grid")
        if not isinstance(grid, dict):
            raise ManifestError("settings need a 'grid' block here")
        count = grid.get("count")
        if not isinstance(count, int) or count < 1:
            raise ManifestError("grid count must be a positive integer")
        start = self._angle(grid.get("start", 0.0))
        stop = self._angle(grid.get("stop", 180.0 if self.degrees else math.pi))
        endpoint = bool(grid.get("endpoint", False))
        return [float(x) for x in np.linspace(start, stop, count, endpoint=endpoint)]

    def setting_pairs(self) -> list[tuple[float, float]]:
        """Explicit (a, b) pairs in radians; a grid expands to all pairs."""
        if not self.settings:
            return []
        if not isinstance(self.settings, dict):
            raise ManifestError("settings must be an object")
        if "pairs" in self.settings:
            pairs = self.settings["pairs"]
            if not isinstance(pairs, list) or not all(isinstance(p, list) and len(p) == 2 for p in pairs):
                raise ManifestError("settings.pairs must be a list of [a, b]")
            return [(self._angle(a), self._angle(b)) for a, b in pairs]
        if "grid" in self.settings:
            ax = self.axis()
            return [(a, b) for a in ax for b in ax]
        raise ManifestError("settings need 'pairs' or 'grid'")

    # -- serialisation --------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Any) -> "ExperimentManifest":
        if not isinstance(data, dict):
            raise ManifestError("manifest must be a JSON object")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ManifestError(f"unknown manifest fields: {sorted(unknown)}")
        if "task" not in data:
            raise ManifestError("manifest is missing 'task'")
        kw = dict(data)
        if "models" in kw:
            models = kw["models"]
            if not isinstance(models, list):
                raise ManifestError("models must be a list")
            specs = []
            for m in models:
                if isinstance(m, str):
                    specs.append(ModelSpec(m))
                elif isinstance(m, dict) and "name" in m:
                    specs.append(ModelSpec(m["name"], m.get("params", {})))
                else:
                    raise ManifestError(f"bad model entry {m!r}")
            kw["models"] = specs
        if "output" in kw:
            kw["output"] = {"path": None, "format": "json", **kw["output"]}
        return cls(**kw)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentManifest":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"manifest is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ExperimentManifest":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ManifestError(f"cannot read manifest: {exc}") from None
        return cls.from_json(text)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class Check:
    """One asserted comparison: ``value`` against ``expected`` within ``tolerance``."""

    name: str
    passed: bool
    value: Any
    expected: Any
    tolerance: float
    comparison: str
    detail: dict = field(default_factory=dict)


@dataclass
class ResultRecord:
    manifest_digest: str
    task: str
    inputs: dict
    values: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    wall_time: float = 0.0
    version: str = __version__

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        d["checks"] = sorted(d["checks"], key=lambda c: c["name"])
        if not timing:
            d.pop("wall_time")
        return _jsonable(d)

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True, indent=2, allow_nan=True) + "\n"

    def canonical(self) -> str:
        """The record without its wall-clock time; identical runs give identical text."""
        return self.to_json(timing=False)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    return x
