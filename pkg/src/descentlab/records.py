"""CurvePoint rows and their CSV encoding, shared by the sweep and MLP code."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import SchemaMismatch

CSV_COLUMNS = (
    "experiment",
    "seed",
    "capacity",
    "num_params",
    "lambda",
    "R",
    "train_mse",
    "test_mse",
    "train_error_rate",
    "test_error_rate",
    "weight_l2",
    "epochs_trained",
    "wall_time_ms",
    "error",
)

_INT_COLUMNS = {"seed", "capacity", "num_params"}
_FLOAT_COLUMNS = {
    "lambda", "R", "train_mse", "test_mse", "train_error_rate",
    "test_error_rate", "weight_l2", "wall_time_ms",
}


@dataclass(frozen=True)
class CurvePoint:
    """One measured point on an error-vs-capacity curve.

    ``error`` is empty for successful points; failed points keep their grid
    coordinates, carry NaN metrics and a reason string.
    """

    experiment: str
    seed: int
    capacity: int
    num_params: int
    lam: float
    R: float
    train_mse: float
    test_mse: float
    train_error_rate: float
    test_error_rate: float
    weight_l2: float
    epochs_trained: int | None = None
    wall_time_ms: float = 0.0
    error: str = ""

    @property
    def ok(self):
        return not self.error

    def row(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return [_format(d[c]) for c in CSV_COLUMNS]

    @classmethod
    def failed(cls, experiment, seed, capacity, num_params, lam, R, reason):
        nan = math.nan
        return cls(experiment, seed, capacity, num_params, lam, R, nan, nan, nan, nan, nan, None, 0.0, reason)


def feature_num_params(D, K, include_bias=True):
    return (D + (1 if include_bias else 0)) * K


def mlp_num_params(P, h, K):
    return h * P + h + K * h + K


def _format(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)  # shortest round-trip decimal
    return str(v)


def write_points(path, points):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for p in points:
            w.writerow(p.row())


def read_points(path):
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise SchemaMismatch(f"{path}: header {header} does not match {list(CSV_COLUMNS)}")
        points = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            if len(raw) != len(CSV_COLUMNS):
                raise SchemaMismatch(f"{path}:{lineno}: expected {len(CSV_COLUMNS)} fields, got {len(raw)}")
            rec = dict(zip(CSV_COLUMNS, raw))
            try:
                kwargs = {}
                for c in CSV_COLUMNS:
                    v = rec[c]
                    if c in _INT_COLUMNS:
                        v = int(v)
                    elif c in _FLOAT_COLUMNS:
                        v = float(v)
                    elif c == "epochs_trained":
                        v = int(v) if v else None
                    kwargs["lam" if c == "lambda" else c] = v
            except ValueError as exc:
                raise SchemaMismatch(f"{path}:{lineno}: {exc}") from None
            points.append(CurvePoint(**kwargs))
    return points


assert [f.name for f in fields(CurvePoint)] == ["lam" if c == "lambda" else c for c in CSV_COLUMNS]
