"""Simulation of the function-valued linear process and its autocovariance.

The process is X_n(r) = sum_{j>=0} (j+1)^(d(r)-1) eps_{n-j}(r) with i.i.d.
innovation fields eps.  ``simulate`` cuts the sum at a truncation depth J
with a certified tail bound and keeps the innovations so that downstream
code can replay exact decompositions of the estimation error.

``StationaryGaussianSampler`` draws from the exact stationary Gaussian law
given the autocovariance sequence (circulant embedding).  It exists as a
verification oracle for limit-theorem experiments, where truncated
moving-average paths converge too slowly to probe asymptotic constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, signal

from .model import DomainError, InnovationModel, MemoryProfile, coefficient_u, sample_innovation

__all__ = [
    "ProcessConfig",
    "SamplePath",
    "simulate",
    "truncation_bound",
    "default_truncation",
    "population_autocov",
    "population_autocov_truncated",
    "gamma_sequence",
    "StationaryGaussianSampler",
]

_MAX_CELLS = 2 * 10**9  # refuse allocations beyond ~16 GB of f64


@dataclass(frozen=True)
class ProcessConfig:
    profile: MemoryProfile
    innovations: InnovationModel
    N: int
    J: int
    seed: int
    H: int = 0  # extra trailing steps so lags up to H are available

    def __post_init__(self):
        if self.N < 1 or self.J < 1 or self.H < 0:
            raise ValueError("require N >= 1, J >= 1, H >= 0")
        if self.profile.m != self.innovations.m:
            raise ValueError("profile and innovations disagree on grid size")


@dataclass(frozen=True)
class SamplePath:
    """Realized path plus the innovations that produced it.

    x has N + H rows for time points 1 .. N+H.  eps has N + H + J rows for
    time points 1-J .. N+H; eps row (t - 1 + J) is the innovation at time t.
    """

    config: ProcessConfig
    x: np.ndarray
    eps: np.ndarray

    @property
    def N(self) -> int:
        return self.config.N

    def eps_at(self, t: int) -> np.ndarray:
        return self.eps[t - 1 + self.config.J]


def simulate(config: ProcessConfig, method: str = "auto") -> SamplePath:
    """Generate a truncated moving-average path, deterministically in seed.

    method: "direct" (reference double loop, bit-stable), "fft"
    (scipy.signal.fftconvolve) or "auto" (fft once N*J is large).
    """
    N, J, H, m = config.N, config.J, config.H, config.profile.m
    steps = N + H
    if (steps + J) * m > _MAX_CELLS:
        raise MemoryError(f"refusing to allocate {(steps + J) * m} path cells")
    rng = np.random.Generator(np.random.Philox(key=config.seed))
    eps = sample_innovation(config.innovations, rng, size=steps + J)
    u = coefficient_u(np.arange(J + 1), config.profile)  # (J+1, m)
    if method == "auto":
        method = "fft" if steps * J * m > 10**7 else "direct"
    if method == "direct":
        x = np.zeros((steps, m))
        for j in range(J + 1):
            # time n uses eps_{n-j}, stored at row n-j-1+J
            x += u[j] * eps[J - j : J - j + steps]
    elif method == "fft":
        full = signal.fftconvolve(eps, u, mode="full", axes=0)
        # row t of eps is time t+1-J; x_n = (u * eps)_n lands at row n-1+J+... :
        # full[k] = sum_j u[j] eps[k-j]; time n is eps row n-1+J, so x_n = full[n-1+J]
        x = full[J : J + steps]
    else:
        raise ValueError(f"unknown method {method!r}")
    return SamplePath(config=config, x=x, eps=eps)


def truncation_bound(profile: MemoryProfile, J: int, sigma_sup: float) -> float:
    """Integral-comparison bound on the per-site truncation MSE
    sum_{j>J} sigma_sup^2 (j+1)^(2d-2) <= sigma_sup^2 J^(2 max d - 1) / (1 - 2 max d)."""
    if J < 1:
        raise ValueError("J must be >= 1")
    dmax = float(profile.d.max())
    if dmax >= 0.5:
        raise DomainError("truncation bound requires max d < 1/2")
    return sigma_sup**2 * J ** (2 * dmax - 1.0) / (1.0 - 2 * dmax)


def default_truncation(profile: MemoryProfile, innovations: InnovationModel) -> int:
    """Smallest J with truncation_bound below 1e-3 of the weakest site
    variance."""
    sigma_sup = float(np.sqrt(np.abs(innovations.sigma).max()))
    target = 1e-3 * float(np.diag(innovations.sigma).min())
    dmax = float(profile.d.max())
    if target <= 0:
        raise DomainError("sigma has a zero-variance site")
    # invert the bound for J
    J = (target * (1.0 - 2 * dmax) / sigma_sup**2) ** (1.0 / (2 * dmax - 1.0))
    return max(1, int(math.ceil(J)))


def _coef_sum(profile: MemoryProfile, h: int, J_pop: int, tail: bool = True) -> np.ndarray:
    """S_h(r, s) = sum_{j>=0} (j+h+1)^(d(r)-1) (j+1)^(d(s)-1), partial sum
    to J_pop plus an integral-comparison tail correction."""
    d = profile.d
    j = np.arange(J_pop + 1, dtype=float)
    A = (j[:, None] + h + 1.0) ** (d[None, :] - 1.0)
    B = (j[:, None] + 1.0) ** (d[None, :] - 1.0)
    S = np.einsum("jr,js->rs", A, B)
    if not tail:
        return S
    # midpoint-rule tail: sum_{j>J} f(j) ~ int_{J+1/2}^inf f(x) dx
    x0 = J_pop + 0.5
    cache = {}
    m = d.size
    T = np.empty((m, m))
    for r in range(m):
        for s in range(m):
            key = (d[r], d[s])
            if key not in cache:
                dr, ds = key

                def integrand(t):
                    x = x0 / t
                    return (x + h + 1.0) ** (dr - 1.0) * (x + 1.0) ** (ds - 1.0) * x0 / t**2

                val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-9, limit=200)
                cache[key] = val
            T[r, s] = cache[key]
    return S + T


def population_autocov(
    profile: MemoryProfile,
    innovations: InnovationModel,
    h: int,
    J_pop: int = 10**5,
) -> np.ndarray:
    """gamma_h(r, s) = sigma(r, s) sum_j (j+h+1)^(d(r)-1) (j+1)^(d(s)-1),
    with a tail correction keeping the relative error below ~1e-6."""
    if h < 0:
        raise ValueError("h must be >= 0")
    return innovations.sigma * _coef_sum(profile, h, J_pop, tail=True)


def population_autocov_truncated(
    profile: MemoryProfile, innovations: InnovationModel, h: int, J: int
) -> np.ndarray:
    """Exact mean of the sample autocovariance under truncation depth J:
    sigma(r, s) sum_{j=0}^{J-h} u_{j+h}(r) u_j(s)."""
    if h < 0 or h > J:
        raise ValueError("require 0 <= h <= J")
    u = coefficient_u(np.arange(J + 1), profile)
    S = np.einsum("jr,js->rs", u[h:], u[: J + 1 - h])
    return innovations.sigma * S


def gamma_sequence(
    profile: MemoryProfile,
    innovations: InnovationModel,
    K: int,
    J_pop: int = 2**21,
) -> np.ndarray:
    """Autocovariances gamma_k for k = 0..K as an array (K+1, m, m),
    computed by FFT cross-correlation of the coefficient sequences with a
    first-order integral tail correction (J_pop >> K)."""
    d = profile.d
    m = d.size
    out = np.empty((K + 1, m, m))
    j = np.arange(J_pop, dtype=float)
    cols = {}
    for r in range(m):
        key = d[r]
        if key not in cols:
            cols[key] = (j + 1.0) ** (key - 1.0)
    for r in range(m):
        a = cols[d[r]]
        for s in range(m):
            b = cols[d[s]]
            # c_k = sum_{j} a_{j+k} b_j for k = 0..K
            corr = signal.fftconvolve(a, b[::-1], mode="full")
            c = corr[J_pop - 1 : J_pop + K]
            drs = d[r] + d[s]
            k = np.arange(K + 1, dtype=float)
            # int_{J_pop - 1/2}^inf (x+k+1)^(d_r-1) (x+1)^(d_s-1) dx to first order
            x0 = J_pop - 0.5
            tail = x0 ** (drs - 1.0) / (1.0 - drs) * (1.0 + (drs - 1.0) * ((d[r] - 1) * (k + 1) + (d[s] - 1)) / (drs * x0))
            out[:, r, s] = c + tail
    return out * innovations.sigma[None, :, :]


class StationaryGaussianSampler:
    """Exact draws from the stationary Gaussian law with a prescribed
    scalar autocovariance sequence, via circulant embedding.

    Each call to ``sample`` returns a (batch, len(gamma)) array of
    independent paths.  Raises DomainError when the circulant embedding is not
    nonnegative definite beyond floating-point noise.
    """

    def __init__(self, gamma: np.ndarray):
        gamma = np.asarray(gamma, dtype=float)
        if gamma.ndim != 1 or gamma.size < 2:
            raise ValueError("gamma must be a 1-d sequence of length >= 2")
        self.N = gamma.size - 1
        c = np.concatenate([gamma, gamma[-2:0:-1]])
        lam = np.fft.fft(c).real
        tol = 1e-8 * lam.max()
        if lam.min() < -tol:
            raise DomainError(f"circulant embedding not psd (min eig {lam.min():.3e})")
        self._lam = np.clip(lam, 0.0, None)

    def sample(self, rng: np.random.Generator, batch: int = 1) -> np.ndarray:
        M = self._lam.size
        n_pairs = (batch + 1) // 2
        # complex xi with E|xi|^2 = 2 makes Re and Im of the FFT independent
        # paths, each with the prescribed autocovariance
        xi = rng.standard_normal((n_pairs, M)) + 1j * rng.standard_normal((n_pairs, M))
        w = np.fft.fft(xi * np.sqrt(self._lam / M), axis=1)
        paths = np.concatenate([w.real[:, : self.N + 1], w.imag[:, : self.N + 1]])
        return paths[:batch]
