"""Rectangular conditioning grids and scalar fields defined on them.

Undefined cells are NaN in memory and empty in CSV output.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParameterError, SchemaError

__all__ = ["Grid", "SensitivityField"]


@dataclass(frozen=True, eq=False)
class Grid:
    """Tensor lattice of conditioning points; points are listed row-major."""

    axes: tuple[np.ndarray, ...]

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float).reshape(-1) for a in self.axes)
        if not axes or any(a.size == 0 for a in axes):
            raise ParameterError("grid needs at least one non-empty axis")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def uniform(cls, n: int, dim: int = 2, lower: float = 0.0, upper: float = 1.0) -> Grid:
        return cls(tuple(np.linspace(lower, upper, n) for _ in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.axes)

    @property
    def n_points(self) -> int:
        return int(np.prod(self.shape))

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.column_stack([m.reshape(-1) for m in mesh])

    def same_as(self, other: Grid) -> bool:
        return self.shape == other.shape and all(np.array_equal(a, b) for a, b in zip(self.axes, other.axes))

    def header(self) -> list[str]:
        if self.dim == 2:
            return ["x", "y"]
        return [f"s{i + 1}" for i in range(self.dim)]


def _fmt(v: float) -> str:
    return "" if np.isnan(v) else repr(float(v))


@dataclass(eq=False)
class SensitivityField:
    name: str
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.shape)

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def write_csv(self, target) -> None:
        """Write ``x,y,value`` rows (``s1..sk,value`` unless k == 2), row-major."""
        if isinstance(target, (str, Path)):
            with open(target, "w", newline="", encoding="utf-8") as fh:
                self.write_csv(fh)
            return
        writer = csv.writer(target, lineterminator="\n")
        writer.writerow(self.grid.header() + ["value"])
        for pt, v in zip(self.grid.points(), self.flat()):
            writer.writerow([repr(float(c)) for c in pt] + [_fmt(v)])

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    @classmethod
    def read_csv(cls, path, name: str | None = None) -> SensitivityField:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][-1] != "value":
            raise SchemaError(f"{path}: expected a header ending in 'value'")
        k = len(rows[0]) - 1
        body = rows[1:]
        coords = np.array([[float(c) for c in r[:k]] for r in body])
        vals = np.array([float(r[k]) if r[k] != "" else np.nan for r in body])
        axes = tuple(np.unique(coords[:, i]) for i in range(k))
        grid = Grid(axes)
        if grid.n_points != len(body) or not np.array_equal(grid.points(), coords):
            raise SchemaError(f"{path}: rows do not form a row-major rectangular grid")
        return cls(name or Path(path).stem, grid, vals)
