"""Dataset ingestion, normalization, splits, and synthetic generators.

All randomness flows through numpy's default_rng (PCG64), seeded
explicitly, so every split and every generated dataset is reproducible
across platforms.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, DimensionError, SchemaError

__all__ = [
    "Dataset",
    "load_csv",
    "write_csv",
    "l2_normalize",
    "one_class_split",
    "synth",
    "SYNTH_KINDS",
]

SYNTH_KINDS = ("gaussian", "arbitrary", "ring", "ring3d")


@dataclass
class Dataset:
    features: np.ndarray                      # (n, d) float64, all finite
    labels: np.ndarray | None = None          # (n,) strings, or None
    source: str = ""
    normalized: bool = False

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise DataError(
                f"dataset needs a nonempty 2-D feature matrix, got shape {self.features.shape}"
            )
        if not np.isfinite(self.features).all():
            raise DataError("dataset features contain non-finite values")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=object)
            if self.labels.shape != (self.features.shape[0],):
                raise DataError(
                    f"labels length {self.labels.shape} does not match "
                    f"{self.features.shape[0]} rows"
                )

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


def load_csv(
    path,
    label_column: int | str | None = None,
    delimiter: str = ",",
    has_header: bool = False,
) -> Dataset:
    """Read a numeric CSV into a Dataset.

    label_column may be a 0-based index or, when has_header is set, a
    column name. Unparseable fields and ragged rows raise DataError with
    the offending line number; rows that parse to non-finite values are
    dropped with a warning listing their indices.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise DataError(f"{path}: no data rows")

    header: list[str] | None = None
    if has_header:
        header = [cell.strip() for cell in rows[0]]
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: header only, no data rows")

    ncols = len(rows[0])
    label_idx: int | None = None
    if label_column is not None:
        if isinstance(label_column, str):
            if header is None:
                raise SchemaError(
                    f"label column {label_column!r} given by name but the file has no header"
                )
            try:
                label_idx = header.index(label_column)
            except ValueError:
                raise SchemaError(
                    f"label column {label_column!r} not in header {header}"
                ) from None
        else:
            label_idx = int(label_column)
            if label_idx < 0:
                label_idx += ncols
            if not (0 <= label_idx < ncols):
                raise SchemaError(
                    f"label column index {label_column} out of range for {ncols} columns"
                )

    feats: list[list[float]] = []
    labels: list[str] = []
    for lineno, row in enumerate(rows, start=2 if has_header else 1):
        if len(row) != ncols:
            raise DataError(
                f"{path}: line {lineno} has {len(row)} fields, expected {ncols}"
            )
        vals: list[float] = []
        for ci, cell in enumerate(row):
            if ci == label_idx:
                labels.append(cell.strip())
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise DataError(
                    f"{path}: line {lineno}, column {ci}: cannot parse {cell.strip()!r} as a number"
                ) from None
        feats.append(vals)

    x = np.asarray(feats, dtype=np.float64)
    if x.shape[1] == 0:
        raise DataError(f"{path}: no feature columns left")
    finite = np.isfinite(x).all(axis=1)
    if not finite.all():
        bad = np.flatnonzero(~finite)
        warnings.warn(
            f"{path}: dropped {bad.size} row(s) with non-finite values "
            f"(row indices {bad.tolist()})",
            stacklevel=2,
        )
        x = x[finite]
        if label_idx is not None:
            labels = [lab for lab, ok in zip(labels, finite) if ok]
        if x.shape[0] == 0:
            raise DataError(f"{path}: every row was non-finite")

    return Dataset(
        features=x,
        labels=np.asarray(labels, dtype=object) if label_idx is not None else None,
        source=str(path),
    )


def write_csv(dataset: Dataset, path, label_last: bool = True) -> None:
    """Write features (and labels, if present) as CSV. Floats are written
    with repr so a load_csv round trip is bit-exact."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for i in range(dataset.n):
            row = [repr(float(v)) for v in dataset.features[i]]
            if dataset.labels is not None:
                if label_last:
                    row.append(str(dataset.labels[i]))
                else:
                    row.insert(0, str(dataset.labels[i]))
            writer.writerow(row)


def l2_normalize(x: np.ndarray) -> np.ndarray:
    """Scale every row to unit Euclidean norm. Zero rows are left alone and
    counted in a warning."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"l2_normalize expects a 2-D array, got shape {x.shape}")
    norms = np.linalg.norm(x, axis=1)
    out = x.copy()
    nz = norms > 0.0
    out[nz] = out[nz] / norms[nz, None]
    zeros = int((~nz).sum())
    if zeros:
        warnings.warn(f"l2_normalize: {zeros} zero row(s) left unnormalized", stacklevel=2)
    return out


def one_class_split(
    dataset: Dataset, target: str, ratio: float = 0.7, seed: int = 0
) -> tuple[Dataset, Dataset]:
    """Split for one-class evaluation: the training set holds
    floor(ratio * n_target) rows of the target label, chosen by a seeded
    permutation; the test set holds every remaining row (leftover target
    rows plus all other labels), in original row order."""
    if dataset.labels is None:
        raise DataError("one_class_split needs a labeled dataset")
    if not (0.0 < ratio < 1.0):
        raise DataError(f"split ratio must be in (0, 1), got {ratio}")
    labels = dataset.labels
    pos = np.flatnonzero(labels == target)
    if pos.size == 0:
        raise DataError(f"target label {target!r} not present in the dataset")
    n_train = int(np.floor(ratio * pos.size))
    if n_train < 1:
        raise DataError(
            f"target label {target!r} has too few rows ({pos.size}) for ratio {ratio}"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(pos.size)
    train_idx = np.sort(pos[perm[:n_train]])
    rest = np.ones(dataset.n, dtype=bool)
    rest[train_idx] = False
    test_idx = np.flatnonzero(rest)
    train = Dataset(
        features=dataset.features[train_idx],
        labels=labels[train_idx],
        source=f"{dataset.source}[train]",
        normalized=dataset.normalized,
    )
    test = Dataset(
        features=dataset.features[test_idx],
        labels=labels[test_idx],
        source=f"{dataset.source}[test]",
        normalized=dataset.normalized,
    )
    return train, test


def synth(kind: str, n: int, seed: int = 0, **params) -> Dataset:
    """Generate a synthetic positive-class dataset.

    Kinds:
      gaussian  -- d-dimensional normal; params d (2), mean (0), cov (1.0
                   scalar variance or a full covariance matrix)
      arbitrary -- 1-D curve pairs (x, sqrt(x) * (x + s*u)) with
                   x ~ Uniform(0, 2], s a random sign, u ~ Uniform[0, 1);
                   draw order is x, then signs, then u
      ring      -- planar annulus; params r_in (0.7), r_out (1.0)
      ring3d    -- the same annulus with a uniform vertical thickness;
                   params r_in, r_out, height (0.3)
    """
    if kind not in SYNTH_KINDS:
        raise DataError(f"unknown synthetic kind {kind!r}; choose from {SYNTH_KINDS}")
    if n < 1:
        raise DataError(f"synth needs n >= 1, got {n}")
    rng = np.random.default_rng(seed)

    if kind == "gaussian":
        d = int(params.pop("d", 2))
        mean = params.pop("mean", 0.0)
        cov = params.pop("cov", 1.0)
        _reject_extras(kind, params)
        mean = np.broadcast_to(np.asarray(mean, dtype=np.float64), (d,))
        cov_arr = np.asarray(cov, dtype=np.float64)
        if cov_arr.ndim == 0:
            x = mean + np.sqrt(float(cov_arr)) * rng.standard_normal((n, d))
        else:
            if cov_arr.shape != (d, d):
                raise DimensionError(
                    f"covariance must be scalar or {d}x{d}, got shape {cov_arr.shape}"
                )
            x = rng.multivariate_normal(mean, cov_arr, size=n, method="cholesky")
    elif kind == "arbitrary":
        _reject_extras(kind, params)
        # 2 - U[0, 2) lands in the half-open interval (0, 2].
        x1 = 2.0 - rng.uniform(0.0, 2.0, size=n)
        signs = np.sign(rng.standard_normal(n))
        signs[signs == 0.0] = 1.0
        u = rng.uniform(0.0, 1.0, size=n)
        x2 = np.sqrt(x1) * (x1 + signs * u)
        x = np.column_stack([x1, x2])
    elif kind == "ring":
        r_in = float(params.pop("r_in", 0.7))
        r_out = float(params.pop("r_out", 1.0))
        _reject_extras(kind, params)
        _check_ring(r_in, r_out)
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
        radius = rng.uniform(r_in, r_out, size=n)
        x = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    else:  # ring3d
        r_in = float(params.pop("r_in", 0.7))
        r_out = float(params.pop("r_out", 1.0))
        height = float(params.pop("height", 0.3))
        _reject_extras(kind, params)
        _check_ring(r_in, r_out)
        if height <= 0.0:
            raise DataError(f"ring3d height must be positive, got {height}")
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
        radius = rng.uniform(r_in, r_out, size=n)
        z = rng.uniform(-height / 2.0, height / 2.0, size=n)
        x = np.column_stack([radius * np.cos(theta), radius * np.sin(theta), z])

    return Dataset(features=x, labels=None, source=f"synth:{kind}:seed={seed}")


def _reject_extras(kind: str, params: dict) -> None:
    if params:
        raise DataError(f"unknown parameters for synth kind {kind!r}: {sorted(params)}")


def _check_ring(r_in: float, r_out: float) -> None:
    if not (0.0 < r_in < r_out):
        raise DataError(f"ring radii must satisfy 0 < r_in < r_out, got {r_in}, {r_out}")
