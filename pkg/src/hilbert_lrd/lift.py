"""Finite-dimensional second-regime statements via the spectral lift.

A symmetric matrix T_op with eigenvalues in (1/4, 1/2) plays the role of
the memory operator: U T_op U^T = diag(d) for orthogonal U.  The ambient
process X_n = sum_j (j+1)^(T_op - I) eps_{n-j} coincides with U^T Z_n
where Z is the diagonalized process with sitewise exponents d, so every
second-regime object can be computed componentwise and conjugated back.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .estimator import xi_multiplier
from .model import InnovationModel, MemoryProfile
from .process import ProcessConfig, SamplePath, simulate

__all__ = [
    "SelfAdjointModel",
    "LiftedPath",
    "build_model",
    "simulate_lifted",
    "delta_scale",
    "lift_rosenblatt",
]


@dataclass(frozen=True)
class SelfAdjointModel:
    """T_op = U^T diag(d) U with orthogonal U (rows = eigenvectors)."""

    T_op: np.ndarray
    U: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        U, T_op, d = self.U, self.T_op, self.d
        m = d.size
        if np.abs(U @ U.T - np.eye(m)).max() > 1e-10:
            raise ValueError("U is not orthogonal")
        if np.abs(U @ T_op @ U.T - np.diag(d)).max() > 1e-10:
            raise ValueError("U does not diagonalize T_op to d")

    @property
    def dim(self) -> int:
        return self.d.size

    @property
    def profile(self) -> MemoryProfile:
        return MemoryProfile(self.d)


def build_model(T_op: np.ndarray) -> SelfAdjointModel:
    """Eigendecompose a symmetric matrix; eigenvalues sorted descending."""
    T_op = np.asarray(T_op, dtype=float)
    if T_op.ndim != 2 or T_op.shape[0] != T_op.shape[1]:
        raise ValueError("T_op must be square")
    if np.abs(T_op - T_op.T).max() > 1e-10:
        raise ValueError("T_op is not symmetric")
    vals, vecs = np.linalg.eigh(T_op)
    order = np.argsort(vals)[::-1]
    d = vals[order]
    U = vecs[:, order].T
    return SelfAdjointModel(T_op=T_op, U=U, d=d)


@dataclass(frozen=True)
class LiftedPath:
    """Ambient path x = z U (rowwise x_n = U^T z_n) plus the diagonalized
    path it came from."""

    model: SelfAdjointModel
    z_path: SamplePath
    x: np.ndarray


def simulate_lifted(
    model: SelfAdjointModel,
    innovations_eigen: InnovationModel,
    N: int,
    J: int,
    seed: int,
    H: int = 0,
    check_direct: bool = False,
) -> LiftedPath:
    """Simulate the diagonalized process Z and map it down, x_n = U^T z_n.

    check_direct=True recomputes the path by explicit matrix powers
    (j+1)^(T_op - I) = expm((T_op - I) log(j+1)) applied to the ambient
    innovations and asserts entrywise agreement to 1e-8 (small N, J only).
    """
    cfg = ProcessConfig(profile=model.profile, innovations=innovations_eigen, N=N, J=J, seed=seed, H=H)
    z_path = simulate(cfg)
    x = z_path.x @ model.U
    if check_direct:
        m = model.dim
        eye = np.eye(m)
        direct = np.zeros_like(x)
        steps = x.shape[0]
        for j in range(J + 1):
            Mj = sla.expm((model.T_op - eye) * np.log(j + 1.0)) if j > 0 else eye
            # ambient innovation at time t is U^T (eigen innovation at t)
            amb = z_path.eps[J - j : J - j + steps] @ model.U
            direct += amb @ Mj.T
        if np.abs(direct - x).max() > 1e-8:
            raise AssertionError("matrix-power path disagrees with the lifted path")
    return LiftedPath(model=model, z_path=z_path, x=x)


def delta_scale(fluct, model: SelfAdjointModel, N: int):
    """Delta_N^U applied to each lag matrix: conjugate into the eigenbasis,
    multiply entrywise by N^(1 - d_i - d_j), conjugate back.

    Accepts a single m x m matrix or a sequence of them.
    """
    mult = xi_multiplier(model.profile, N)
    single = isinstance(fluct, np.ndarray) and fluct.ndim == 2
    mats = [fluct] if single else list(fluct)
    out = []
    for F in mats:
        G = model.U @ F @ model.U.T
        out.append(model.U.T @ (mult * G) @ model.U)
    return out[0] if single else tuple(out)


def lift_rosenblatt(sample: np.ndarray, model: SelfAdjointModel) -> np.ndarray:
    """Map an eigenbasis Rosenblatt draw to the ambient basis:
    U^T sample U."""
    sample = np.asarray(sample, dtype=float)
    if sample.shape != (model.dim, model.dim):
        raise ValueError("sample shape does not match the model dimension")
    return model.U.T @ sample @ model.U
