"""First-regime limiting covariance operator, block by block.

The limit covariance pairs two test kernels S, T through

    <Sigma^(p,q)(T), S> = sum_m <Gamma_{m+p-q} T Gamma_m, S>
                        + sum_m <Gamma_{m+q} T Gamma_{m-p}, S>
                        + <A_q((Lambda - Phi)(A_p(T))), S>

with Gamma_{-k} = Gamma_k^T and both series over all integers m.  (The
scalar Gaussian specialization p = q = 0, S = T = 1 reduces to the
classical sum 2 sum_{k in Z} gamma_k^2, which pins the two-sided index
set.)  Operator products are measure-weighted kernel compositions
(A o B)(r,s) = sum_t A(r,t) w_t B(t,s).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridSpace, hs_inner_kernel
from .model import DomainError, InnovationModel, MemoryProfile, Regime, classify_regime, sample_innovation
from .process import _coef_sum, gamma_sequence, population_autocov

__all__ = [
    "gamma_operator",
    "apply_A",
    "apply_lambda",
    "apply_phi",
    "SigmaPairingResult",
    "sigma_pairing",
]

gamma_operator = population_autocov


def apply_A(p: int, T: np.ndarray, profile: MemoryProfile, M_series: int = 10**4) -> np.ndarray:
    """A_p(T)(r,s) = sum_j u_{j+p}(r) T(r,s) u_j(s): for multiplication
    coefficients the series collapses to an entrywise multiplier, the
    tail-corrected coefficient sum."""
    if p < 0:
        raise ValueError("p must be >= 0")
    T = np.asarray(T, dtype=float)
    return T * _coef_sum(profile, p, M_series, tail=True)


def apply_lambda(
    T: np.ndarray,
    innovations: InnovationModel,
    space: GridSpace,
    mode: str = "Wick",
    R: int = 10**6,
    rng: np.random.Generator | None = None,
    return_stderr: bool = False,
):
    """Lambda(T) = E <eps (x) eps, T> (eps (x) eps).

    Wick mode (Gaussian law only) evaluates the fourth-moment expansion

        Lambda(T) = <sigma, T> sigma + sigma W T W sigma + sigma W T^T W sigma

    with W the diagonal of grid masses.  MonteCarlo mode averages the
    defining expression over R draws and optionally reports the entrywise
    standard error; it is the validation oracle for the Wick form and the
    only route for non-Gaussian laws.
    """
    T = np.asarray(T, dtype=float)
    sigma = innovations.sigma
    w = space.weights
    if mode == "Wick":
        if innovations.law != "Gaussian":
            raise ValueError("Wick mode requires Gaussian innovations")
        sw = sigma * w[None, :]  # sigma W
        val = hs_inner_kernel(sigma, T, space) * sigma + sw @ T @ sw.T + sw @ T.T @ sw.T
        return (val, np.zeros_like(val)) if return_stderr else val
    if mode != "MonteCarlo":
        raise ValueError(f"unknown mode {mode!r}")
    if rng is None:
        rng = np.random.Generator(np.random.Philox(key=0))
    acc = np.zeros_like(sigma)
    acc2 = np.zeros_like(sigma)
    done = 0
    batch = max(1, min(R, 10**5 // max(1, sigma.shape[0] ** 2) * 100))
    while done < R:
        b = min(batch, R - done)
        eps = sample_innovation(innovations, rng, size=b)
        outer = eps[:, :, None] * eps[:, None, :]
        pair = np.einsum("brs,rs,r,s->b", outer, T, w, w)
        term = pair[:, None, None] * outer
        acc += term.sum(axis=0)
        acc2 += (term**2).sum(axis=0)
        done += b
    mean = acc / R
    if return_stderr:
        var = acc2 / R - mean**2
        return mean, np.sqrt(np.clip(var, 0.0, None) / R)
    return mean


def apply_phi(T: np.ndarray, innovations: InnovationModel, space: GridSpace) -> np.ndarray:
    """Phi(T) = <C, T + T^*> C + <C, T> C with C the innovation covariance
    kernel; exact in finite dimensions."""
    T = np.asarray(T, dtype=float)
    C = innovations.sigma
    coef = 2.0 * hs_inner_kernel(C, T, space) + hs_inner_kernel(C, T.T, space)
    return coef * C


@dataclass(frozen=True)
class SigmaPairingResult:
    value: float
    tail_estimate: float
    M_used: int


def _series_sum(
    G: np.ndarray, off1: int, off2: int, T: np.ndarray, S: np.ndarray, space: GridSpace, M: int
) -> tuple[float, float]:
    """sum_{m in Z} <Gamma_{m+off1} T Gamma_{m+off2}, S> truncated at
    |m| <= M, plus a power-law tail estimate read off the last octave of
    terms (integral comparison on both ends of the index line).

    G holds Gamma_k for k = 0..K; negative indices use the transpose.
    """
    w = space.weights
    K = G.shape[0] - 1
    if M + max(abs(off1), abs(off2)) > K:
        raise ValueError("Gamma sequence too short for the requested series length")
    # Gamma over a symmetric index range, transposes for negative lags
    full = np.concatenate([np.swapaxes(G[:0:-1], 1, 2), G], axis=0)  # index k -> full[k + K]
    mm = np.arange(-M, M + 1)
    A = full[mm + off1 + K]
    B = full[mm + off2 + K]
    WTW = w[:, None] * T * w[None, :]
    WSW = w[:, None] * S * w[None, :]
    terms = np.einsum("kab,bc,kcd,ad->k", A, WTW, B, WSW, optimize=True)
    total = float(terms.sum())
    tail = 0.0
    for t_hi, t_mid in ((abs(terms[-1]), abs(terms[M + M // 2])), (abs(terms[0]), abs(terms[M - M // 2]))):
        if t_hi <= 0 or t_mid <= 0:
            continue
        alpha = np.log(t_mid / t_hi) / np.log(2.0)
        tail += t_hi * M / (alpha - 1.0) if alpha > 1.0 else float("inf")
    return total, tail


def sigma_pairing(
    p: int,
    q: int,
    S: np.ndarray,
    T: np.ndarray,
    profile: MemoryProfile,
    innovations: InnovationModel,
    space: GridSpace,
    M_series: int = 10**4,
    M_cap: int = 2 * 10**5,
    rel_tol: float = 1e-6,
    lambda_mode: str | None = None,
    lambda_R: int = 10**6,
    rng: np.random.Generator | None = None,
) -> SigmaPairingResult:
    """<Sigma^(p,q)(T), S>, the (p,q) block of the limiting covariance
    paired against test kernels.

    The two Gamma series run over all integers (Gamma_{-k} = Gamma_k^T)
    and are truncated at M_series, doubling up to M_cap until the running
    tail estimate drops below rel_tol of the accumulated value; the
    remaining tail estimate is reported alongside the value.
    """
    if classify_regime(profile) is not Regime.FIRST:
        raise DomainError("sigma_pairing requires a first-regime profile")
    S = np.asarray(S, dtype=float)
    T = np.asarray(T, dtype=float)
    if lambda_mode is None:
        lambda_mode = "Wick" if innovations.law == "Gaussian" else "MonteCarlo"
    M = M_series
    while True:
        K = M + max(abs(p - q), q, p) + 1
        G = gamma_sequence(profile, innovations, K)
        s1, t1 = _series_sum(G, p - q, 0, T, S, space, M)
        s2, t2 = _series_sum(G, q, -p, T, S, space, M)
        tail = t1 + t2
        if tail <= rel_tol * max(abs(s1 + s2), 1e-300) or M >= M_cap:
            break
        M = min(2 * M, M_cap)
    ApT = apply_A(p, T, profile, M_series=M)
    inner = apply_lambda(ApT, innovations, space, mode=lambda_mode, R=lambda_R, rng=rng) - apply_phi(
        ApT, innovations, space
    )
    fourth = hs_inner_kernel(apply_A(q, inner, profile, M_series=M), S, space)
    return SigmaPairingResult(value=s1 + s2 + fourth, tail_estimate=tail, M_used=M)
