"""Curve and dataset handling: CSV/manifest ingestion, validation, normalization, resampling.

A dataset is a named collection of tensile test records. Each record holds one
measured (strain, stress) sequence plus the constant process parameters the
sample was fabricated with. Curves are normalized per curve (each axis divided
by its own maximum) and resampled onto a common evenly spaced strain grid
before any similarity computation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataValidationError

DEFAULT_GRID_N = 120

CSV_HEADER = ["strain", "stress"]

ROLES = ("source", "target")


@dataclass(frozen=True)
class RawCurve:
    """One sample's measured stress-strain record plus its process parameters.

    strain is dimensionless (mm/mm), stress is in MPa. ``params`` is an
    ordered name -> value map whose keys must match the owning dataset's
    parameter schema exactly.
    """

    sample_id: str
    strain: np.ndarray
    stress: np.ndarray
    params: dict[str, float] = field(default_factory=dict)

    def n_points(self) -> int:
        return len(self.strain)

    def param_values(self) -> np.ndarray:
        return np.array(list(self.params.values()), dtype=float)


@dataclass(frozen=True)
class ParamField:
    name: str
    unit: str = "-"


@dataclass
class Dataset:
    """Named collection of curves sharing one process-parameter schema."""

    name: str
    role: str
    param_schema: list[ParamField]
    curves: list[RawCurve]

    def __post_init__(self):
        if self.role not in ROLES:
            raise DataValidationError(
                f"dataset {self.name!r}: role must be one of {ROLES}, got {self.role!r}"
            )
        schema_names = [p.name for p in self.param_schema]
        if len(set(schema_names)) != len(schema_names):
            raise DataValidationError(f"dataset {self.name!r}: duplicate parameter names in schema")
        seen: set[str] = set()
        for curve in self.curves:
            if curve.sample_id in seen:
                raise DataValidationError(
                    f"dataset {self.name!r}: duplicate sample_id {curve.sample_id!r}"
                )
            seen.add(curve.sample_id)
            if list(curve.params.keys()) != schema_names:
                raise DataValidationError(
                    f"dataset {self.name!r}, sample {curve.sample_id!r}: parameters "
                    f"{list(curve.params)} do not match schema {schema_names}"
                )

    def sample_ids(self) -> list[str]:
        return [c.sample_id for c in self.curves]

    def curve_by_id(self, sample_id: str) -> RawCurve:
        for curve in self.curves:
            if curve.sample_id == sample_id:
                return curve
        raise KeyError(f"dataset {self.name!r} has no sample {sample_id!r}")


@dataclass(frozen=True)
class GridCurve:
    """A normalized curve resampled onto the common N-point strain grid.

    ``grid`` is evenly spaced in [0, 1] with grid[0] == 0 and grid[-1] == 1;
    ``stress_norm`` holds the interpolated normalized stress at each grid point.
    """

    sample_id: str
    grid: np.ndarray
    stress_norm: np.ndarray

    def __len__(self) -> int:
        return len(self.grid)


def validate_curve(curve: RawCurve) -> RawCurve:
    """Clean one raw curve so downstream normalization is well defined.

    Points are sorted by strain, consecutive duplicate strain values are merged
    by averaging their stresses, and negative stress readings are clamped to 0.
    The result has strictly increasing strain.

    Raises
    ------
    DataValidationError
        On non-finite values, mismatched sequence lengths, or fewer than two
        distinct strain values after merging.
    """
    strain = np.asarray(curve.strain, dtype=float)
    stress = np.asarray(curve.stress, dtype=float)
    if strain.ndim != 1 or stress.ndim != 1 or len(strain) != len(stress):
        raise DataValidationError(
            f"sample {curve.sample_id!r}: strain and stress must be 1-D sequences of equal length"
        )
    if len(strain) < 2:
        raise DataValidationError(f"sample {curve.sample_id!r}: need at least 2 points")
    if not (np.all(np.isfinite(strain)) and np.all(np.isfinite(stress))):
        raise DataValidationError(f"sample {curve.sample_id!r}: non-finite strain or stress value")

    order = np.argsort(strain, kind="stable")
    strain = strain[order]
    stress = stress[order]

    # Merge runs of equal strain by averaging their stresses.
    uniq, inverse, counts = np.unique(strain, return_inverse=True, return_counts=True)
    if len(uniq) != len(strain):
        merged = np.bincount(inverse, weights=stress) / counts
        strain, stress = uniq, merged
    if len(strain) < 2:
        raise DataValidationError(
            f"sample {curve.sample_id!r}: fewer than 2 distinct strain values after merging"
        )

    stress = np.maximum(stress, 0.0)
    return RawCurve(curve.sample_id, strain, stress, dict(curve.params))


def normalize_curve(curve: RawCurve) -> tuple[np.ndarray, np.ndarray]:
    """Divide strain and stress by their own maxima so both axes span [0, 1].

    Requires a validated curve with positive strain and stress maxima; the
    maxima map to exactly 1.
    """
    max_strain = float(np.max(curve.strain))
    max_stress = float(np.max(curve.stress))
    if max_strain <= 0.0:
        raise DataValidationError(
            f"sample {curve.sample_id!r}: max strain is {max_strain}, cannot normalize"
        )
    if max_stress <= 0.0:
        raise DataValidationError(
            f"sample {curve.sample_id!r}: max stress is {max_stress} (flat curve), cannot normalize"
        )
    return curve.strain / max_strain, curve.stress / max_stress


def resample_to_grid(
    strain_norm: np.ndarray,
    stress_norm: np.ndarray,
    n: int = DEFAULT_GRID_N,
    sample_id: str = "",
) -> GridCurve:
    """Linearly interpolate normalized stress onto an n-point grid over [0, 1].

    Grid points below the smallest strain carry the first stress value
    (constant-left extension); points above the largest strain carry the last.
    """
    if n < 2:
        raise DataValidationError(f"grid size must be >= 2, got {n}")
    strain_norm = np.asarray(strain_norm, dtype=float)
    stress_norm = np.asarray(stress_norm, dtype=float)
    if np.any(np.diff(strain_norm) <= 0):
        raise DataValidationError(f"sample {sample_id!r}: strain must be strictly increasing")
    grid = np.linspace(0.0, 1.0, n)
    values = np.interp(grid, strain_norm, stress_norm)
    return GridCurve(sample_id=sample_id, grid=grid, stress_norm=values)


def grid_curve(curve: RawCurve, n: int = DEFAULT_GRID_N) -> GridCurve:
    """Validate, normalize, and resample one raw curve in a single step."""
    cleaned = validate_curve(curve)
    strain_norm, stress_norm = normalize_curve(cleaned)
    return resample_to_grid(strain_norm, stress_norm, n, sample_id=curve.sample_id)


def _read_curve_csv(path: Path, sample_id: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != CSV_HEADER:
                raise DataValidationError(
                    f"{path}: expected header {','.join(CSV_HEADER)!r}, got {header}"
                )
            strain, stress = [], []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != 2:
                    raise DataValidationError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
                try:
                    strain.append(float(row[0]))
                    stress.append(float(row[1]))
                except ValueError as exc:
                    raise DataValidationError(f"{path}:{lineno}: malformed number: {exc}") from exc
    except OSError as exc:
        raise DataValidationError(f"sample {sample_id!r}: cannot read curve file {path}: {exc}") from exc
    return np.array(strain), np.array(stress)


def load_dataset(manifest_path: str | Path) -> Dataset:
    """Load and validate a dataset from a JSON manifest.

    The manifest is an object ``{name, role, param_schema: [{name, unit}],
    samples: [{id, file, params: {name: value}}]}`` with curve-file paths
    relative to the manifest. Every referenced CSV is parsed and cleaned via
    :func:`validate_curve`.
    """
    manifest_path = Path(manifest_path)
    try:
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise DataValidationError(f"cannot read manifest {manifest_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataValidationError(f"{manifest_path}: invalid JSON: {exc}") from exc

    for key in ("name", "role", "param_schema", "samples"):
        if key not in manifest:
            raise DataValidationError(f"{manifest_path}: manifest missing key {key!r}")

    schema = [ParamField(str(p["name"]), str(p.get("unit", "-"))) for p in manifest["param_schema"]]
    schema_names = [p.name for p in schema]

    curves = []
    base = manifest_path.parent
    for sample in manifest["samples"]:
        for key in ("id", "file", "params"):
            if key not in sample:
                raise DataValidationError(f"{manifest_path}: sample entry missing key {key!r}")
        sample_id = str(sample["id"])
        declared = sample["params"]
        extra = set(declared) - set(schema_names)
        missing = set(schema_names) - set(declared)
        if extra:
            raise DataValidationError(
                f"{manifest_path}: sample {sample_id!r} declares parameters {sorted(extra)} "
                f"absent from schema {schema_names}"
            )
        if missing:
            raise DataValidationError(
                f"{manifest_path}: sample {sample_id!r} missing parameters {sorted(missing)}"
            )
        params = {name: float(declared[name]) for name in schema_names}
        strain, stress = _read_curve_csv(base / sample["file"], sample_id)
        curves.append(validate_curve(RawCurve(sample_id, strain, stress, params)))

    return Dataset(str(manifest["name"]), str(manifest["role"]), schema, curves)


def save_dataset(dataset: Dataset, out_dir: str | Path) -> Path:
    """Write a dataset as manifest.json plus one CSV per sample; returns the manifest path.

    Output round-trips through :func:`load_dataset`.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    samples = []
    for curve in dataset.curves:
        fname = f"{curve.sample_id}.csv"
        with open(out_dir / fname, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for eps, sig in zip(curve.strain, curve.stress):
                writer.writerow([repr(float(eps)), repr(float(sig))])
        samples.append({"id": curve.sample_id, "file": fname, "params": dict(curve.params)})
    manifest = {
        "name": dataset.name,
        "role": dataset.role,
        "param_schema": [{"name": p.name, "unit": p.unit} for p in dataset.param_schema],
        "samples": samples,
    }
    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path
