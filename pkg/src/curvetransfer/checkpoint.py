"""Model checkpoint: weights, scalers, dimensions, and provenance, as JSON.

Floats are emitted with Python's shortest-round-trip repr, so a load/save
cycle preserves every weight bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataValidationError
from .scaling import CurveScalers
from .seqnet import PARAM_NAMES, ModelParams, OptimizerState

FORMAT_VERSION = 1

STAGES = ("pretrained", "finetuned")


@dataclass
class ModelCheckpoint:
    """Trained model bundle: parameters, feature scalers, and provenance."""

    params: ModelParams
    scalers: CurveScalers
    sequence_length: int
    seed: int
    source_dataset: str
    stage: str
    optimizer_state: OptimizerState | None = None

    @property
    def input_dim(self) -> int:
        return self.params.input_dim

    @property
    def hidden_dim(self) -> int:
        return self.params.hidden_dim

    def to_dict(self) -> dict:
        doc = {
            "format_version": FORMAT_VERSION,
            "input_dim": self.params.input_dim,
            "hidden_dim": self.params.hidden_dim,
            "sequence_length": self.sequence_length,
            "seed": self.seed,
            "provenance": {"source_dataset": self.source_dataset, "stage": self.stage},
            "feature_scalers": self.scalers.to_dict(),
            "weights": {name: getattr(self.params, name).tolist() for name in PARAM_NAMES},
        }
        if self.optimizer_state is not None and self.optimizer_state.kind == "adam":
            doc["optimizer_state"] = {
                "kind": self.optimizer_state.kind,
                "step": self.optimizer_state.step,
                "m": {k: v.tolist() for k, v in self.optimizer_state.m.items()},
                "v": {k: v.tolist() for k, v in self.optimizer_state.v.items()},
            }
        return doc

    @staticmethod
    def from_dict(doc: dict) -> "ModelCheckpoint":
        version = doc.get("format_version")
        if version != FORMAT_VERSION:
            raise DataValidationError(f"unsupported checkpoint format_version: {version}")
        weights = doc["weights"]
        arrays = {name: np.asarray(weights[name], dtype=float) for name in PARAM_NAMES}
        params = ModelParams(
            input_dim=int(doc["input_dim"]), hidden_dim=int(doc["hidden_dim"]), **arrays
        )
        opt_state = None
        if "optimizer_state" in doc:
            raw = doc["optimizer_state"]
            opt_state = OptimizerState(
                kind=str(raw["kind"]),
                step=int(raw["step"]),
                m={k: np.asarray(v, dtype=float) for k, v in raw["m"].items()},
                v={k: np.asarray(v, dtype=float) for k, v in raw["v"].items()},
            )
        provenance = doc.get("provenance", {})
        return ModelCheckpoint(
            params=params,
            scalers=CurveScalers.from_dict(doc["feature_scalers"]),
            sequence_length=int(doc["sequence_length"]),
            seed=int(doc["seed"]),
            source_dataset=str(provenance.get("source_dataset", "")),
            stage=str(provenance.get("stage", "")),
            optimizer_state=opt_state,
        )


def save_checkpoint(checkpoint: ModelCheckpoint, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(checkpoint.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path: str | Path) -> ModelCheckpoint:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataValidationError(f"cannot read checkpoint {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataValidationError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return ModelCheckpoint.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DataValidationError):
            raise
        raise DataValidationError(f"{path}: malformed checkpoint: {exc}") from exc
