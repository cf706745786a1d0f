"""Min-max feature scaling fit on training curves only.

Pre-training on polymer-scale curves and fine-tuning on metal-scale curves
only share a feature space because every input (strain, each process
parameter) and the stress target are scaled to [0, 1] over the training split.
Values outside the training range scale outside [0, 1]; that is permitted.
Process parameters are matched by POSITION, so curves from datasets with
different parameter names can share one scaler set as long as the arity
matches (or is padded to match).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import RawCurve
from .errors import DataValidationError


@dataclass(frozen=True)
class FeatureScaler:
    """Min-max scaler for one feature; constant features map to 0."""

    name: str
    vmin: float
    vmax: float

    @property
    def degenerate(self) -> bool:
        return self.vmax <= self.vmin

    def scale(self, values):
        values = np.asarray(values, dtype=float)
        if self.degenerate:
            return np.zeros_like(values)
        return (values - self.vmin) / (self.vmax - self.vmin)

    def unscale(self, values):
        values = np.asarray(values, dtype=float)
        if self.degenerate:
            return np.full_like(values, self.vmin)
        return values * (self.vmax - self.vmin) + self.vmin

    def to_dict(self) -> dict:
        return {"name": self.name, "min": self.vmin, "max": self.vmax}

    @staticmethod
    def from_dict(d: dict) -> "FeatureScaler":
        return FeatureScaler(name=str(d["name"]), vmin=float(d["min"]), vmax=float(d["max"]))


@dataclass(frozen=True)
class CurveScalers:
    """Scalers for the strain input, each positional parameter, and the stress target."""

    strain: FeatureScaler
    params: tuple[FeatureScaler, ...]
    stress: FeatureScaler

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def input_dim(self) -> int:
        return 1 + len(self.params)

    def to_dict(self) -> dict:
        return {
            "strain": self.strain.to_dict(),
            "params": [p.to_dict() for p in self.params],
            "stress": self.stress.to_dict(),
        }

    @staticmethod
    def from_dict(d: dict) -> "CurveScalers":
        return CurveScalers(
            strain=FeatureScaler.from_dict(d["strain"]),
            params=tuple(FeatureScaler.from_dict(p) for p in d["params"]),
            stress=FeatureScaler.from_dict(d["stress"]),
        )


def padded_param_values(curve: RawCurve, arity: int, pad: bool = False) -> np.ndarray:
    """Positional parameter vector of length ``arity``, zero-padded if allowed."""
    values = curve.param_values()
    if len(values) == arity:
        return values
    if len(values) < arity and pad:
        return np.concatenate([values, np.zeros(arity - len(values))])
    raise DataValidationError(
        f"sample {curve.sample_id!r} has {len(values)} parameters, expected {arity}"
        + ("" if pad else " (padding disabled)")
    )


def fit_scalers(
    train_curves: list[RawCurve],
    arity: int | None = None,
    pad: bool = False,
    param_names: list[str] | None = None,
) -> CurveScalers:
    """Per-feature min-max over the training curves only.

    ``arity`` fixes the positional parameter count; by default it is the
    maximum arity among the curves. Parameter names are recorded for audit
    from the first curve that supplies each position.
    """
    if not train_curves:
        raise DataValidationError("fit_scalers requires at least one training curve")
    if arity is None:
        arity = max(len(c.params) for c in train_curves)

    strain_min = min(float(np.min(c.strain)) for c in train_curves)
    strain_max = max(float(np.max(c.strain)) for c in train_curves)
    stress_min = min(float(np.min(c.stress)) for c in train_curves)
    stress_max = max(float(np.max(c.stress)) for c in train_curves)

    if param_names is None:
        param_names = [f"param_{i}" for i in range(arity)]
        for curve in train_curves:
            for i, name in enumerate(curve.params):
                if i < arity:
                    param_names[i] = name
            break
    columns = np.array([padded_param_values(c, arity, pad) for c in train_curves])
    param_scalers = tuple(
        FeatureScaler(param_names[i], float(np.min(columns[:, i])), float(np.max(columns[:, i])))
        for i in range(arity)
    )
    return CurveScalers(
        strain=FeatureScaler("strain", strain_min, strain_max),
        params=param_scalers,
        stress=FeatureScaler("stress", stress_min, stress_max),
    )
