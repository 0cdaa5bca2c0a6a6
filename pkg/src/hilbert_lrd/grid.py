"""Finite weighted grids standing in for a sigma-finite measure space.

Functions on the grid are plain 1-d numpy arrays (length m), kernels on
the product space are m x m arrays (row = first argument, column = second
argument).  All inner products and norms carry the quadrature weights.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridSpace",
    "uniform_grid",
    "inner_product_l2",
    "norm_l2",
    "hs_inner_kernel",
    "norm_l2_kernel",
    "tensor",
]

# beyond this many summands, reductions switch to a pairwise scheme so that
# accumulated rounding stays well below Monte Carlo tolerances
_PAIRWISE_CUTOFF = 10**6


def _reduce(terms: np.ndarray) -> float:
    flat = np.ravel(terms)
    if flat.size < _PAIRWISE_CUTOFF:
        return float(np.sum(flat))
    # fixed-shape pairwise folding: deterministic regardless of caller
    while flat.size > 1:
        if flat.size % 2:
            flat = np.concatenate([flat, [0.0]])
        flat = flat[0::2] + flat[1::2]
    return float(flat[0])


@dataclass(frozen=True)
class GridSpace:
    """Ordered point labels with positive quadrature masses."""

    points: tuple = field(default_factory=tuple)
    weights: np.ndarray = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-d array")
        if not np.all(w > 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be positive and finite")
        if len(self.points) != w.size:
            raise ValueError("points and weights disagree in length")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "points", tuple(self.points))

    @property
    def m(self) -> int:
        return self.weights.size

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def to_json(self) -> str:
        return json.dumps({"points": list(self.points), "weights": self.weights.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "GridSpace":
        obj = json.loads(text)
        return cls(points=tuple(obj["points"]), weights=np.asarray(obj["weights"], dtype=float))


def uniform_grid(m: int) -> GridSpace:
    """Default discretization: m equally weighted sites on [0, 1]."""
    if m < 1:
        raise ValueError("m must be >= 1")
    pts = tuple((i + 0.5) / m for i in range(m))
    return GridSpace(points=pts, weights=np.full(m, 1.0 / m))


def _check_function(f: np.ndarray, space: GridSpace) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (space.m,):
        raise ValueError(f"function shape {f.shape} does not match grid size {space.m}")
    return f


def _check_kernel(K: np.ndarray, space: GridSpace) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.shape != (space.m, space.m):
        raise ValueError(f"kernel shape {K.shape} does not match grid size {space.m}")
    return K


def inner_product_l2(f: np.ndarray, g: np.ndarray, space: GridSpace) -> float:
    f = _check_function(f, space)
    g = _check_function(g, space)
    return _reduce(f * g * space.weights)


def norm_l2(f: np.ndarray, space: GridSpace) -> float:
    return float(np.sqrt(max(inner_product_l2(f, f, space), 0.0)))


def hs_inner_kernel(K1: np.ndarray, K2: np.ndarray, space: GridSpace) -> float:
    """L2(Y x Y) pairing of two kernels, i.e. the Hilbert-Schmidt pairing
    of the integral operators they induce."""
    K1 = _check_kernel(K1, space)
    K2 = _check_kernel(K2, space)
    w = space.weights
    return _reduce(K1 * K2 * np.outer(w, w))


def norm_l2_kernel(K: np.ndarray, space: GridSpace) -> float:
    return float(np.sqrt(max(hs_inner_kernel(K, K, space), 0.0)))


def tensor(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Rank-one kernel (f (x) g)(r, s) = f(r) g(s)."""
    return np.outer(np.asarray(f, dtype=float), np.asarray(g, dtype=float))
