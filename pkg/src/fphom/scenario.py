"""Scenario configuration: one experiment fully described, JSON in and out.

A scenario pins the domain box, dimension, grid resolution, the eps and
delta sweeps, the eta rule, the coefficient, the data, the horizon and step,
and solver/output controls.  The loader validates eagerly and raises
ScenarioError with a readable message; the CLI maps that to exit code 2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .coefficients import CoefficientSpec
from .geometry import Ball, BoxShape, EtaRule, Shape
from .pde_core import Grid


class ScenarioError(ValueError):
    pass


# data fields (initial datum / source), by name
DATA_FIELDS: dict[str, Callable[..., np.ndarray]] = {
    "one": lambda *m: np.ones(np.broadcast(*m).shape),
    "cos1": lambda *m: np.cos(np.pi * np.asarray(m[0])),
    "bump": lambda *m: 1.0 + 0.5 * np.cos(np.pi * np.asarray(m[0])),
    "cos1cos2": lambda *m: np.cos(np.pi * np.asarray(m[0])) * np.cos(np.pi * np.asarray(m[1])),
    "x1": lambda *m: np.asarray(m[0]) + 0.0,
}


@dataclass(frozen=True)
class FieldSpec:
    """Spatial data field: a constant or a registered expression, optionally
    multiplied by a monomial time factor t**time_power."""

    kind: str = "constant"  # 'constant' | 'expr'
    value: float = 0.0
    name: str = "one"
    scale: float = 1.0
    time_power: int = 0

    def __post_init__(self):
        if self.kind not in ("constant", "expr"):
            raise ScenarioError(f"unknown field kind {self.kind!r}")
        if self.kind == "expr" and self.name not in DATA_FIELDS:
            raise ScenarioError(f"unknown data field {self.name!r}; known: {sorted(DATA_FIELDS)}")
        if self.time_power < 0:
            raise ScenarioError("time_power must be nonnegative")

    def spatial(self, grid: Grid) -> np.ndarray:
        if self.kind == "constant":
            return np.full(grid.shape, float(self.value))
        return self.scale * DATA_FIELDS[self.name](*grid.meshgrid())

    def as_source(self, grid: Grid):
        """None for a zero field, a static array, or a callable of t."""
        if self.kind == "constant" and self.value == 0.0:
            return None
        base = self.spatial(grid)
        if self.time_power == 0:
            return base
        return lambda t: base * t**self.time_power

    def is_zero(self) -> bool:
        return self.kind == "constant" and self.value == 0.0


def _shape_from_json(d: dict) -> Shape:
    if not isinstance(d, dict) or "type" not in d:
        raise ScenarioError("shape needs a 'type' field ('ball' or 'box')")
    if d["type"] == "ball":
        return Ball(rho=float(d.get("rho", 0.25)))
    if d["type"] == "box":
        hw = d.get("half_width")
        if hw is None:
            raise ScenarioError("box shape needs 'half_width'")
        return BoxShape(half_width=tuple(float(w) for w in hw))
    raise ScenarioError(f"unknown shape type {d['type']!r}")


def _shape_to_json(s: Shape) -> dict:
    if isinstance(s, Ball):
        return {"type": "ball", "rho": s.rho}
    if isinstance(s, BoxShape):
        return {"type": "box", "half_width": list(s.half_width)}
    raise ScenarioError("implicit shapes are not serializable")


def _coeff_from_json(d: dict) -> CoefficientSpec:
    kind = d.get("kind", "constant")
    if kind == "constant":
        return CoefficientSpec(kind="constant", value=float(d.get("value", 1.0)))
    if kind == "separable":
        return CoefficientSpec(kind="separable", a=d.get("a", "one"), p=d.get("p", "one"))
    if kind == "tabulated":
        return CoefficientSpec(kind="tabulated", table=np.asarray(d["table"], dtype=float))
    raise ScenarioError(f"unknown coefficient kind {kind!r}")


def _coeff_to_json(c: CoefficientSpec) -> dict:
    if c.kind == "constant":
        return {"kind": "constant", "value": c.value}
    if c.kind == "separable":
        return {"kind": "separable", "a": c.a, "p": c.p}
    return {"kind": "tabulated", "table": np.asarray(c.table).tolist()}


def _field_from_json(d: Any) -> FieldSpec:
    if d is None:
        return FieldSpec(kind="constant", value=0.0)
    if isinstance(d, (int, float)):
        return FieldSpec(kind="constant", value=float(d))
    if isinstance(d, dict):
        if d.get("kind", "constant") == "constant":
            return FieldSpec(kind="constant", value=float(d.get("value", 0.0)))
        return FieldSpec(
            kind="expr",
            name=d.get("name", "one"),
            scale=float(d.get("scale", 1.0)),
            time_power=int(d.get("time_power", 0)),
        )
    raise ScenarioError("field spec must be null, a number, or an object")


def _field_to_json(f: FieldSpec) -> Any:
    if f.kind == "constant":
        return {"kind": "constant", "value": f.value}
    return {"kind": "expr", "name": f.name, "scale": f.scale, "time_power": f.time_power}


@dataclass
class OneDConfig:
    alpha: float = 1.0
    beta1: float = 16.0
    beta2: float = 1.0
    T: float = 0.05
    h: float = 1.0 / 256
    dt: float = 1e-4


@dataclass
class BlowupConfig:
    alpha: float = 1.0
    j_max: int = 3
    h: float = 1.0 / 512
    dt: float = 1e-4
    window: float = 2.0


@dataclass
class ScenarioConfig:
    """Everything one run needs; see docs/scenario_schema.md for the JSON."""

    n: int = 3
    domain_side: float = 1.0
    resolution: int = 48          # cells per axis; nodes = resolution + 1
    eps_list: list[float] = field(default_factory=lambda: [0.5, 0.25, 1.0 / 6, 0.125])
    delta_list: list[float] = field(default_factory=lambda: [1e-1, 1e-2, 1e-3])
    eta_rule: EtaRule = field(default_factory=lambda: EtaRule(c=1.0, p=2.0))
    shape: Shape = field(default_factory=lambda: Ball(0.25))
    coefficient: CoefficientSpec = field(default_factory=CoefficientSpec)
    u0: FieldSpec = field(default_factory=lambda: FieldSpec(kind="constant", value=1.0))
    f: FieldSpec = field(default_factory=lambda: FieldSpec(kind="constant", value=0.0))
    T: float = 0.25
    n_steps: int = 400
    store_every: int | None = None
    tol: float = 1e-10
    jacobi: bool = True
    unresolved_policy: str = "drop"
    regime_override: str | None = None
    workers: int = 1
    quadrature_order: int = 64
    oned: OneDConfig = field(default_factory=OneDConfig)
    blowup: BlowupConfig = field(default_factory=BlowupConfig)

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ScenarioError("dimension must be 1, 2 or 3")
        if self.resolution < 4:
            raise ScenarioError("resolution too small")
        if not self.T > 0 or self.n_steps < 1:
            raise ScenarioError("need T > 0 and n_steps >= 1")
        if any(e <= 0 for e in self.eps_list):
            raise ScenarioError("eps values must be positive")
        if sorted(self.eps_list, reverse=True) != list(self.eps_list):
            raise ScenarioError("eps list must be sorted decreasing")
        if any(not 0 < d <= 1 for d in self.delta_list):
            raise ScenarioError("delta values must lie in (0, 1]")
        if sorted(self.delta_list, reverse=True) != list(self.delta_list):
            raise ScenarioError("delta list must be sorted decreasing")
        if self.unresolved_policy not in ("error", "drop"):
            raise ScenarioError("unresolved_policy must be 'error' or 'drop'")
        if self.workers < 1:
            raise ScenarioError("workers must be >= 1")

    def grid(self) -> Grid:
        return Grid(
            shape=(self.resolution + 1,) * self.n,
            spacing=self.domain_side / self.resolution,
        )

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "domain_side": self.domain_side,
            "resolution": self.resolution,
            "eps_list": list(self.eps_list),
            "delta_list": list(self.delta_list),
            "eta_rule": {"c": self.eta_rule.c, "p": self.eta_rule.p},
            "shape": _shape_to_json(self.shape),
            "coefficient": _coeff_to_json(self.coefficient),
            "u0": _field_to_json(self.u0),
            "f": _field_to_json(self.f),
            "T": self.T,
            "n_steps": self.n_steps,
            "store_every": self.store_every,
            "tol": self.tol,
            "jacobi": self.jacobi,
            "unresolved_policy": self.unresolved_policy,
            "regime_override": self.regime_override,
            "workers": self.workers,
            "quadrature_order": self.quadrature_order,
            "oned": vars(self.oned).copy(),
            "blowup": vars(self.blowup).copy(),
        }


def scenario_from_json(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ScenarioError("scenario JSON must be an object")
    known = {
        "n", "domain_side", "resolution", "eps_list", "delta_list", "eta_rule",
        "shape", "coefficient", "u0", "f", "T", "n_steps", "store_every", "tol",
        "jacobi", "unresolved_policy", "regime_override", "workers",
        "quadrature_order", "oned", "blowup",
    }
    unknown = set(data) - known
    if unknown:
        raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")
    kw: dict[str, Any] = {}
    for key in ("n", "resolution", "n_steps", "workers", "quadrature_order"):
        if key in data:
            kw[key] = int(data[key])
    for key in ("domain_side", "T", "tol"):
        if key in data:
            kw[key] = float(data[key])
    for key in ("jacobi",):
        if key in data:
            kw[key] = bool(data[key])
    for key in ("unresolved_policy", "regime_override"):
        if key in data:
            kw[key] = data[key]
    if "store_every" in data and data["store_every"] is not None:
        kw["store_every"] = int(data["store_every"])
    if "eps_list" in data:
        kw["eps_list"] = [float(x) for x in data["eps_list"]]
    if "delta_list" in data:
        kw["delta_list"] = [float(x) for x in data["delta_list"]]
    if "eta_rule" in data:
        er = data["eta_rule"]
        try:
            kw["eta_rule"] = EtaRule(c=float(er["c"]), p=float(er.get("p", 0.0)))
        except (KeyError, TypeError) as exc:
            raise ScenarioError(f"bad eta_rule: {exc}")
    if "shape" in data:
        kw["shape"] = _shape_from_json(data["shape"])
    if "coefficient" in data:
        kw["coefficient"] = _coeff_from_json(data["coefficient"])
    if "u0" in data:
        kw["u0"] = _field_from_json(data["u0"])
    if "f" in data:
        kw["f"] = _field_from_json(data["f"])
    if "oned" in data:
        kw["oned"] = OneDConfig(**data["oned"])
    if "blowup" in data:
        kw["blowup"] = BlowupConfig(**data["blowup"])
    try:
        return ScenarioConfig(**kw)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(str(exc))


def load_scenario(path) -> ScenarioConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON in {path}: {exc}")
    return scenario_from_json(data)


def save_scenario(config: ScenarioConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
