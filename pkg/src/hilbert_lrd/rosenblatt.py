"""The limiting kernel of the second regime and its double-integral sampler.

The kernel is

    f^(r,s)(x1, x2) = int_0^1 (v - x1)_+^(d(r)-1) (v - x2)_+^(d(s)-1) dv

and the limit law is the off-diagonal double integral of f against a
family of spatially correlated Gaussian random measures W^(r) with
E W^(r)(dx) W^(s)(dx) = sigma(r, s) dx.  Closed-form L2(R^2) pairings of
the kernel follow from reducing the x-integrals to beta integrals:

    int (v-x)_+^(a-1) (u-x)_+^(b-1) dx = |u-v|^(a+b-1) B(a, 1-a-b)

for u > v, which gives

    <f^(r,s), f^(r',s')> = [c(r,r') c(s,s') + c(r',r) c(s',s)] / ((D-1) D)

with c(r,s) = B(d(r), 1-d(r)-d(s)) and D = d(r)+d(s)+d(r')+d(s').  In
particular ||f^(r,s)||^2 = 2 c(r) c(s) / ((2 d(r,s) - 1) 2 d(r,s)) with
d(r,s) = d(r)+d(s) and c(r) = c(r,r).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .model import DomainError, InnovationModel, MemoryProfile, memory_c

__all__ = [
    "RosenblattKernelSpec",
    "SpecialKernel",
    "RosenblattSample",
    "kernel_f",
    "kernel_f_batch",
    "kernel_inner_closed_form",
    "kernel_norm_closed_form",
    "kernel_norm_quadrature",
    "build_special_kernel",
    "sample_rosenblatt",
    "special_kernel_norm2",
    "second_moment",
    "cross_moment",
    "second_moment_matrix",
    "sigma_weighted_norm2",
    "admissibility_bound",
]


@dataclass(frozen=True)
class RosenblattKernelSpec:
    """Memory profile plus integrator correlation, both on the same grid.

    Only second-regime profiles are admissible: every d must lie in
    (1/4, 1/2) so that the kernel is square integrable.
    """

    profile: MemoryProfile
    innovations: InnovationModel

    def __post_init__(self):
        if self.profile.m != self.innovations.m:
            raise ValueError("profile and innovations disagree on grid size")
        d = self.profile.d
        if not (np.all(d > 0.25) and np.all(d < 0.5)):
            raise DomainError("Rosenblatt kernel requires all d in (1/4, 1/2)")


def kernel_f(x1: float, x2: float, d_r: float, d_s: float) -> float:
    """Pointwise kernel value by adaptive quadrature (relative error ~1e-9
    away from the singular diagonal).

    Returns 0 when the support (max(x1, x2, 0), 1] is empty and +inf when
    x1 == x2 in [0, 1) with d_r + d_s <= 1 (a measure-zero blow-up that no
    quadrature rule samples).
    """
    lo = max(x1, x2, 0.0)
    if lo >= 1.0:
        return 0.0
    if x1 == x2 and x1 >= 0.0 and d_r + d_s <= 1.0:
        return float("inf")
    # the integrand behaves like (v - lo)^(a - 1) at the lower endpoint;
    # substituting v = lo + (1 - lo) t^(1/a) removes the singularity exactly
    a = 1.0
    if x1 == lo:
        a += d_r - 1.0
    if x2 == lo:
        a += d_s - 1.0

    span = 1.0 - lo

    def integrand(t):
        v = lo + span * t ** (1.0 / a)
        w1 = (v - x1) ** (d_r - 1.0)
        w2 = (v - x2) ** (d_s - 1.0)
        return w1 * w2 * span / a * t ** (1.0 / a - 1.0)

    val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-10, limit=200)
    return float(val)


def kernel_f_batch(x1: np.ndarray, x2: np.ndarray, d_r: float, d_s: float, nodes: int = 64) -> np.ndarray:
    """Vectorized kernel evaluation on arrays of points (matching shapes).

    Uses fixed Gauss-Legendre after the same endpoint substitution as
    ``kernel_f``; points on the singular diagonal map to +inf.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    out = np.zeros(np.broadcast(x1, x2).shape)
    x1, x2 = np.broadcast_arrays(x1, x2)
    lo = np.maximum(np.maximum(x1, x2), 0.0)
    active = lo < 1.0
    sing = active & (x1 == x2) & (x1 >= 0.0) & (d_r + d_s <= 1.0)
    out[sing] = np.inf
    work = active & ~sing
    if not np.any(work):
        return out
    x1w, x2w, low = x1[work], x2[work], lo[work]
    a = 1.0 + np.where(x1w == low, d_r - 1.0, 0.0) + np.where(x2w == low, d_s - 1.0, 0.0)
    span = 1.0 - low
    t, wts = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (t + 1.0)
    wts = 0.5 * wts
    acc = np.zeros(x1w.shape)
    for tk, wk in zip(t, wts):
        v = low + span * tk ** (1.0 / a)
        f = (v - x1w) ** (d_r - 1.0) * (v - x2w) ** (d_s - 1.0)
        acc += wk * f * span / a * tk ** (1.0 / a - 1.0)
    out[work] = acc
    return out


def kernel_inner_closed_form(d_r: float, d_s: float, d_rp: float, d_sp: float) -> float:
    """<f^(r,s), f^(r',s')> over L2(R^2) in closed form."""
    D = d_r + d_s + d_rp + d_sp
    if D <= 1.0:
        raise DomainError("kernel pairing requires total memory sum > 1")
    return (memory_c(d_r, d_rp) * memory_c(d_s, d_sp) + memory_c(d_rp, d_r) * memory_c(d_sp, d_s)) / ((D - 1.0) * D)


def kernel_norm_closed_form(d_r: float, d_s: float) -> float:
    """||f^(r,s)||^2 over L2(R^2): 2 c(r) c(s) / ((2 d(r,s) - 1) 2 d(r,s))."""
    drs = d_r + d_s
    if 2.0 * drs <= 1.0:
        raise DomainError("kernel norm requires d(r) + d(s) > 1/2")
    return 2.0 * memory_c(d_r, d_r) * memory_c(d_s, d_s) / ((2.0 * drs - 1.0) * 2.0 * drs)


def _overlap(a: float, w: float) -> float:
    """F_a(w) = int_0^inf z^(a-1) (z + w)^(a-1) dz by quadrature, w > 0."""
    inner = integrate.quad(lambda t: t ** (a - 1.0) * (1.0 + t) ** (a - 1.0), 0.0, 1.0, epsabs=0.0, epsrel=1e-10)[0]
    outer = integrate.quad(lambda t: t ** (-2.0 * a) * (1.0 + t) ** (a - 1.0), 0.0, 1.0, epsabs=0.0, epsrel=1e-10)[0]
    return w ** (2.0 * a - 1.0) * (inner + outer)


def kernel_norm_quadrature(d_r: float, d_s: float) -> float:
    """Independent quadrature oracle for ||f^(r,s)||^2.

    Expanding the square and carrying out both x-integrals numerically
    leaves int_0^1 int_0^1 F_{d_r}(|u-v|) F_{d_s}(|u-v|) du dv, which is
    evaluated with adaptive quadrature; no beta identities are used.
    """
    if 2.0 * (d_r + d_s) <= 1.0:
        raise DomainError("kernel norm requires d(r) + d(s) > 1/2")
    cr = _overlap(d_r, 1.0)
    cs = _overlap(d_s, 1.0)
    # F_a(w) = F_a(1) w^(2a-1), so the remaining double integral is
    # 2 int_0^1 (1-w) w^(2 d_r + 2 d_s - 2) dw, still done numerically
    val = integrate.quad(
        lambda w: 2.0 * (1.0 - w) * w ** (2.0 * (d_r + d_s) - 2.0),
        0.0,
        1.0,
        epsabs=0.0,
        epsrel=1e-10,
    )[0]
    return cr * cs * val


@dataclass(frozen=True)
class SpecialKernel:
    """Step-kernel approximation over uniform bins of [-L, 1].

    coeffs has shape (M, M, m, m); the diagonal blocks i1 == i2 are zero
    by construction (the double integral is off-diagonal)."""

    edges: np.ndarray
    coeffs: np.ndarray
    L: float
    clamped: bool = False

    @property
    def M(self) -> int:
        return self.edges.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])


def build_special_kernel(spec: RosenblattKernelSpec, M: int, L: float, clamp: bool = False) -> SpecialKernel:
    """Midpoint-sampled step kernel on M uniform bins of [-L, 1].

    clamp=True replaces each midpoint value by the minimum over the cell
    corners and midpoint, a variant dominated by the kernel wherever it is
    coordinate-monotone on the cell.
    """
    if M < 2 or L <= 0:
        raise ValueError("require M >= 2 and L > 0")
    d = spec.profile.d
    m = d.size
    edges = np.linspace(-L, 1.0, M + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    coeffs = np.empty((M, M, m, m))
    X1 = np.broadcast_to(mids[:, None], (M, M))
    X2 = np.broadcast_to(mids[None, :], (M, M))
    cache = {}
    for r in range(m):
        for s in range(m):
            key = (d[r], d[s])
            if key not in cache:
                vals = kernel_f_batch(X1, X2, d[r], d[s])
                if clamp:
                    lo1 = np.broadcast_to(edges[:-1, None], (M, M))
                    hi1 = np.broadcast_to(edges[1:, None], (M, M))
                    lo2 = np.broadcast_to(edges[None, :-1], (M, M))
                    hi2 = np.broadcast_to(edges[None, 1:], (M, M))
                    for c1, c2 in ((lo1, lo2), (lo1, hi2), (hi1, lo2), (hi1, hi2)):
                        vals = np.minimum(vals, kernel_f_batch(c1, c2, d[r], d[s]))
                np.fill_diagonal(vals, 0.0)
                cache[key] = vals
            coeffs[:, :, r, s] = cache[key]
    return SpecialKernel(edges=edges, coeffs=coeffs, L=float(L), clamped=bool(clamp))


@dataclass(frozen=True)
class RosenblattSample:
    value: np.ndarray
    meta: dict = field(default_factory=dict)


def _draw_increments(spec: RosenblattKernelSpec, kernel: SpecialKernel, rng: np.random.Generator, n: int) -> np.ndarray:
    """W^(.)(Delta_i) for n replications: shape (n, M, m); independent
    across bins, covariance sigma across sites, variance = bin width."""
    M = kernel.M
    fac = spec.innovations.factor
    xi = rng.standard_normal((n, M, fac.shape[1]))
    return np.sqrt(kernel.widths)[None, :, None] * (xi @ fac.T)


def sample_rosenblatt(
    spec: RosenblattKernelSpec,
    M: int,
    L: float,
    rng: np.random.Generator,
    size: int | None = None,
    kernel: SpecialKernel | None = None,
    batch: int = 256,
):
    """Draw from the discretized double-integral law.

    size=None returns a single RosenblattSample; an integer returns an
    array of shape (size, m, m).  A prebuilt SpecialKernel can be passed
    to amortize the kernel construction across calls.
    """
    if kernel is None:
        kernel = build_special_kernel(spec, M, L)
    m = spec.profile.m
    n = 1 if size is None else int(size)
    out = np.empty((n, m, m))
    scalar = m == 1
    C = kernel.coeffs[:, :, 0, 0] if scalar else None
    done = 0
    while done < n:
        b = min(batch, n - done)
        W = _draw_increments(spec, kernel, rng, b)
        if scalar:
            w = W[:, :, 0]
            # diagonal coefficients are zero, so the full bilinear form is
            # already the off-diagonal sum
            out[done : done + b, 0, 0] = np.einsum("bi,bi->b", w @ C, w)
        else:
            out[done : done + b] = np.einsum("ijrs,bir,bjs->brs", kernel.coeffs, W, W)
        done += b
    if size is None:
        return RosenblattSample(value=out[0], meta={"M": kernel.M, "L": kernel.L})
    return out


def special_kernel_norm2(kernel: SpecialKernel) -> np.ndarray:
    """L2(R^2) squared norm of the step kernel, per site pair (m x m)."""
    w = kernel.widths
    return np.einsum("ijrs,i,j->rs", kernel.coeffs**2, w, w)


def second_moment(spec: RosenblattKernelSpec, r: int, s: int) -> float:
    """E r(r,s)^2 = sigma^2(r) sigma^2(s) ||f^(r,s)||^2
    + sigma(r,s)^2 <f^(r,s), f~^(r,s)>."""
    return cross_moment(spec, (r, s), (r, s))


def cross_moment(spec: RosenblattKernelSpec, pair, pair_prime) -> float:
    """E [r(r,s) r(r',s')] by the pairing expansion of the double integral."""
    r, s = pair
    rp, sp = pair_prime
    d = spec.profile.d
    sig = spec.innovations.sigma
    straight = sig[r, rp] * sig[s, sp] * kernel_inner_closed_form(d[r], d[s], d[rp], d[sp])
    # f~^(r',s')(x1,x2) = f^(r',s')(x2,x1) = f^(s',r')(x1,x2)
    crossed = sig[r, sp] * sig[s, rp] * kernel_inner_closed_form(d[r], d[s], d[sp], d[rp])
    return straight + crossed


def second_moment_matrix(spec: RosenblattKernelSpec) -> np.ndarray:
    m = spec.profile.m
    out = np.empty((m, m))
    for r in range(m):
        for s in range(m):
            out[r, s] = second_moment(spec, r, s)
    return out


def sigma_weighted_norm2(spec: RosenblattKernelSpec, weights: np.ndarray) -> float:
    """||f^sigma||^2 over L2(R^2 : L2(Y^2)): the closed-form kernel norms
    weighted by sigma(r,s)^2 and the grid masses."""
    d = spec.profile.d
    m = d.size
    norms = np.empty((m, m))
    for r in range(m):
        for s in range(m):
            norms[r, s] = kernel_norm_closed_form(d[r], d[s])
    w = np.asarray(weights, dtype=float)
    return float(np.sum(spec.innovations.sigma**2 * norms * np.outer(w, w)))


def admissibility_bound(spec: RosenblattKernelSpec, weights: np.ndarray) -> float:
    """Upper bound 36 (int sigma^2(r) / ((1-2d(r)) (2d(r)-1/2)) mu(dr))^2
    for ||f^sigma||^2; finite exactly when the defining integral is."""
    d = spec.profile.d
    s2 = np.diag(spec.innovations.sigma)
    w = np.asarray(weights, dtype=float)
    integral = float(np.sum(s2 / ((1.0 - 2.0 * d) * (2.0 * d - 0.5)) * w))
    return 36.0 * integral**2
