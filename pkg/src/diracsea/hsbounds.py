"""Hilbert-Schmidt analytics for the dressing kernel.

The dressing kernel's squared I2 norm has a closed-form momentum integrand
(a spinor trace evaluated once and for all), which this module evaluates two
independent ways:

* ``lattice``: a Riemann sum over the same momentum lattice the dense
  operators live on, chunked so large grids never materialize M^2 block
  matrices. Summed over the grid this is algebraically identical to the
  Frobenius norm of the assembled dressing matrix.
* ``qmc``: a scrambled-Sobol estimate of the continuum integral over the cube
  ``[-radius, radius]^dim`` in each of p and q, with importance sampling
  (per-axis truncated Cauchy in p, matched to the kernel's inverse-square
  energy decay; Gaussian in the difference variable, matched to the potential
  profile widths). Replicated scramblings give a standard error.

Also here: the closed-form electric upper bound for the norm, the L2 norm of
``1/E^2`` entering the convolution estimates, and numerical checks of the four
convolution inequalities that control the fixed-point iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .operators import HsNorm
from .potentials import GaussianProfile, Potential
from .spinor import PhysicsParams

__all__ = [
    "QuadratureSpec",
    "trace_norm_integrand",
    "q_norm_analytic",
    "q_norm_grid_pairs",
    "electric_qnorm_bound",
    "inverse_energy_sq_l2norm",
    "EstimateCheck",
    "integral_estimate_check",
    "ESTIMATE_CASES",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """How to evaluate a momentum-space double integral.

    ``kind="lattice"``: tensor lattice with ``n_points`` points per axis and
    spacing ``2*radius/n_points`` (identical to a grid with cutoff ``radius``).

    ``kind="qmc"``: scrambled Sobol with ``n_points`` total points split into
    ``replicates`` independent scramblings; ``radius`` is the cube half-width.
    """

    kind: str
    n_points: int
    radius: float
    seed: int = 0
    replicates: int = 8

    def __post_init__(self):
        if self.kind not in ("lattice", "qmc"):
            raise ValueError(f"kind must be 'lattice' or 'qmc', got {self.kind!r}")
        if self.n_points < 2:
            raise ValueError("n_points must be at least 2")
        if not (self.radius > 0.0):
            raise ValueError("radius must be positive")
        if self.kind == "lattice" and self.n_points % 2 != 0:
            raise ValueError("lattice quadrature needs an even n_points")
        if self.kind == "qmc" and self.replicates < 2:
            raise ValueError("qmc needs at least 2 replicates for a standard error")


def _lattice_axis(n_points: int, radius: float) -> np.ndarray:
    dp = 2.0 * radius / n_points
    return np.arange(-n_points // 2, n_points // 2) * dp


def _pad3(vec: np.ndarray) -> np.ndarray:
    """Momenta (..., d) -> (..., 3) with zeros in the missing components."""
    d = vec.shape[-1]
    if d == 3:
        return vec
    out = np.zeros(vec.shape[:-1] + (3,), dtype=vec.dtype)
    out[..., :d] = vec
    return out


def trace_norm_integrand(
    pot: Potential,
    t: float,
    params: PhysicsParams,
    p: np.ndarray,
    q: np.ndarray,
) -> np.ndarray:
    """Pointwise integrand of the squared I2 norm of the dressing kernel.

    ``p`` and ``q`` are broadcast-compatible arrays of shape ``(..., dim)``.
    The value at each pair equals the squared Frobenius norm of the two
    off-diagonal 4x4 kernel blocks at that pair (before the measure factors),
    so it is pointwise nonnegative and Riemann sums of it reproduce assembled
    matrix norms exactly.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    ahat = pot.component_fourier(t, p - q)  # (4, ...)
    return _trace_integrand_from_ahat(params, p, q, ahat)


def _trace_integrand_from_ahat(
    params: PhysicsParams, p: np.ndarray, q: np.ndarray, ahat: np.ndarray
) -> np.ndarray:
    """Trace-formula integrand with the Fourier factor supplied explicitly,
    so lattice evaluations can feed wrapped-difference table values."""
    m = params.mass
    e2 = params.coupling**2

    ep = np.sqrt(np.sum(p**2, axis=-1) + m * m)
    eq = np.sqrt(np.sum(q**2, axis=-1) + m * m)
    p3 = _pad3(p)
    q3 = _pad3(q)

    # four-dot of A(p-q) with A(q-p) = conj(A(p-q)) for real potentials
    adots = np.abs(ahat[0]) ** 2 - np.sum(np.abs(ahat[1:]) ** 2, axis=0)
    # covariant contractions with (E(p), -p) and (-E(q), -q)
    pa = ep * ahat[0] + np.einsum("...i,i...->...", p3, ahat[1:])
    qa = -eq * ahat[0] + np.einsum("...i,i...->...", q3, ahat[1:])
    cross = 2.0 * np.real(pa * np.conj(qa))

    pq = np.sum(p * q, axis=-1)
    pref = -2.0 * e2 / (ep * eq * (ep + eq) ** 2)
    return pref * ((m * m + ep * eq + pq) * adots + cross)


def _lattice_norm_sq(
    pot: Potential, t: float, params: PhysicsParams, quad: QuadratureSpec
) -> float:
    dim = pot.dim
    axis = _lattice_axis(quad.n_points, quad.radius)
    if dim == 1:
        mom = axis[:, None]
    else:
        mesh = np.meshgrid(axis, axis, axis, indexing="ij")
        mom = np.stack([mm.ravel() for mm in mesh], axis=-1)
    m_tot = mom.shape[0]
    dp = axis[1] - axis[0]
    chunk = max(1, int(4_000_000 // max(m_tot, 1)))
    total = 0.0
    for start in range(0, m_tot, chunk):
        pblk = mom[start : start + chunk]
        vals = trace_norm_integrand(
            pot, t, params, pblk[:, None, :], mom[None, :, :]
        )
        total += float(vals.sum())
    return total * dp ** (2 * dim)


def _qmc_norm_sq(
    pot: Potential, t: float, params: PhysicsParams, quad: QuadratureSpec
) -> tuple[float, float]:
    dim = pot.dim
    m = params.mass
    lam = quad.radius

    sigmas = [
        term.profile.sigma
        for term in pot.terms
        if isinstance(term.profile, GaussianProfile)
    ]
    if not sigmas:
        raise ValueError("qmc importance sampling needs Gaussian profile terms")
    s_k = 1.0 / min(sigmas)

    reps = quad.replicates
    m_bits = max(4, int(np.floor(np.log2(max(quad.n_points // reps, 16)))))
    theta_max = np.arctan(lam / m)
    axis_norm = 2.0 * theta_max / m  # integral of 1/(x^2+m^2) over [-lam, lam]

    seeds = np.random.SeedSequence(quad.seed).spawn(reps)
    estimates = np.empty(reps, dtype=float)
    for r, seed in enumerate(seeds):
        sampler = qmc.Sobol(d=2 * dim, scramble=True, seed=np.random.default_rng(seed))
        u = sampler.random_base2(m_bits)
        u = np.clip(u, 1e-12, 1.0 - 1e-12)

        # p: per-axis truncated Cauchy on [-lam, lam]
        theta = (2.0 * u[:, :dim] - 1.0) * theta_max
        p = m * np.tan(theta)
        rho_p = np.prod(1.0 / ((p**2 + m * m) * axis_norm), axis=1)

        # k = p - q: Gaussian matched to the narrowest profile
        k = ndtri(u[:, dim:]) * s_k
        rho_k = np.prod(
            np.exp(-0.5 * (k / s_k) ** 2) / (np.sqrt(2.0 * np.pi) * s_k), axis=1
        )

        qpt = p - k
        inside = np.all(np.abs(qpt) <= lam, axis=1)
        vals = np.zeros(len(u))
        if np.any(inside):
            vals[inside] = trace_norm_integrand(
                pot, t, params, p[inside], qpt[inside]
            )
        estimates[r] = float(np.mean(vals / (rho_p * rho_k)))
    value = float(estimates.mean())
    stderr = float(estimates.std(ddof=1) / np.sqrt(reps))
    return value, stderr


def q_norm_analytic(
    pot: Potential, t: float, params: PhysicsParams, quad: QuadratureSpec
) -> HsNorm:
    """I2 norm of the dressing kernel from the closed-form trace integrand.

    This route never assembles operator blocks, which makes it an independent
    cross-check of the matrix route and the only affordable one at large
    truncations.
    """
    if pot.envelope_magnitude(t) == 0.0:
        return HsNorm(value=0.0, stderr=0.0, exact=quad.kind == "lattice")
    if quad.kind == "lattice":
        total = _lattice_norm_sq(pot, t, params, quad)
        return HsNorm(value=float(np.sqrt(max(total, 0.0))), stderr=0.0, exact=True)
    total, err = _qmc_norm_sq(pot, t, params, quad)
    value = float(np.sqrt(max(total, 0.0)))
    stderr = err / (2.0 * value) if value > 0 else float(np.sqrt(max(err, 0.0)))
    return HsNorm(value=value, stderr=stderr, exact=False)


def q_norm_grid_pairs(pot: Potential, t: float, grid, params: PhysicsParams) -> float:
    """Frobenius norm of the grid dressing operator without assembling it.

    Sums the trace-formula integrand over all lattice momentum pairs, reading
    the potential's Fourier factor from the same wrapped-difference table the
    assembled operator uses, so the result matches the dense route to
    rounding while needing O(M) memory instead of O(M^2) blocks.
    """
    from .operators import fourier_table

    if pot.envelope_magnitude(t) == 0.0:
        return 0.0
    spec = grid.spec
    table = fourier_table(pot, t, grid).reshape(4, -1)
    mom = grid.momenta
    n = spec.n
    ivals = np.arange(n)
    mesh = np.meshgrid(*([ivals] * spec.dim), indexing="ij")
    axes_idx = np.stack([mm.ravel() for mm in mesh], axis=-1)  # (M, dim)
    m_tot = mom.shape[0]
    chunk = max(1, 2_000_000 // max(m_tot, 1))
    total = 0.0
    for start in range(0, m_tot, chunk):
        pidx = axes_idx[start : start + chunk]
        flat = np.zeros((pidx.shape[0], m_tot), dtype=np.int64)
        for axis in range(spec.dim):
            flat = flat * n + (pidx[:, axis][:, None] - axes_idx[:, axis][None, :] + n // 2) % n
        ahat = table[:, flat]  # (4, chunk, M)
        vals = _trace_integrand_from_ahat(
            params, mom[start : start + chunk][:, None, :], mom[None, :, :], ahat
        )
        total += float(vals.sum())
    return float(np.sqrt(max(total, 0.0)) * spec.momentum_spacing**spec.dim)


# ---------------------------------------------------------------------------
# closed-form bounds
# ---------------------------------------------------------------------------


def _inv_energy_quartic_integral(mass: float, dim: int) -> float:
    """``int dp / E(p)^4`` over all of R^dim, closed form."""
    if dim == 3:
        return np.pi**2 / mass
    if dim == 1:
        return np.pi / (2.0 * mass**3)
    raise ValueError(f"dim must be 1 or 3, got {dim}")


def inverse_energy_sq_l2norm(params: PhysicsParams, dim: int) -> float:
    """L2 norm of ``p -> 1/E(p)^2``, the constant in the convolution bounds."""
    return float(np.sqrt(_inv_energy_quartic_integral(params.mass, dim)))


def electric_qnorm_bound(
    pot: Potential, t: float, params: PhysicsParams
) -> float:
    """Closed-form upper bound for the squared I2 norm of the dressing kernel
    of a purely electric potential.

    The bound is ``(2 e^2 / m^2) * (int dp / E^4) * (int |k|^2 E(k)^2
    |Ahat_0(k)|^2 dk)``; for Gaussian profiles the k-integral is a pair of
    Gaussian moments. Requires the potential to have only the time component.
    """
    terms = [t_ for t_ in pot.terms if float(t_.envelope.value(t)) != 0.0]
    if any(term.mu != 0 for term in terms):
        raise ValueError("electric bound applies to potentials with only A_0")
    dim = pot.dim
    m = params.mass
    root_total = 0.0
    for term in terms:
        prof = term.profile
        if not isinstance(prof, GaussianProfile):
            raise ValueError("electric bound supports Gaussian profiles only")
        g = float(term.envelope.value(t))
        # |Ahat_0(k)|^2 = c^2 exp(-sigma^2 k^2), radial
        c = abs(g * prof.amplitude) * (2.0 * np.pi) ** (-dim) * (
            2.0 * np.pi * prof.sigma**2
        ) ** (dim / 2.0)
        a = prof.sigma**2
        base = (np.pi / a) ** (dim / 2.0)
        mom2 = dim / (2.0 * a) * base
        mom4 = dim * (dim + 2) / (4.0 * a * a) * base
        k_integral = c * c * (mom4 + m * m * mom2)
        term_bound = (
            2.0
            * params.coupling**2
            / m**2
            * _inv_energy_quartic_integral(m, dim)
            * k_integral
        )
        root_total += np.sqrt(term_bound)
    return float(root_total**2)


# ---------------------------------------------------------------------------
# convolution inequalities
# ---------------------------------------------------------------------------

ESTIMATE_CASES = ("single", "outer", "chained", "triple")


@dataclass(frozen=True)
class EstimateCheck:
    """Numerical left/right sides of one convolution inequality."""

    case: str
    lhs: float
    rhs: float
    passed: bool

    @property
    def slack(self) -> float:
        return self.rhs / self.lhs if self.lhs > 0 else np.inf


def integral_estimate_check(
    case: str,
    profiles: tuple[GaussianProfile, ...],
    params: PhysicsParams,
    quad: QuadratureSpec,
) -> EstimateCheck:
    """Check one of the four convolution inequalities on a momentum lattice.

    ``profiles`` play the role of the momentum-space functions: one profile
    for ``single``, two for ``outer``/``chained`` (L1-profile first,
    L2-profile second), three for ``triple`` (L1, L2, L1). The left side is a
    lattice L2 norm of the kernel (which only undershoots the continuum value,
    the integrand being nonnegative), the right side the closed-form product
    of profile norms and the inverse-square-energy constant.
    """
    if case not in ESTIMATE_CASES:
        raise ValueError(f"case must be one of {ESTIMATE_CASES}, got {case!r}")
    if quad.kind != "lattice":
        raise ValueError("estimate checks run on lattice quadrature")
    expected = {"single": 1, "outer": 2, "chained": 2, "triple": 3}[case]
    if len(profiles) != expected:
        raise ValueError(f"case {case!r} needs {expected} profiles, got {len(profiles)}")
    dim = profiles[0].dim
    if any(prof.dim != dim for prof in profiles):
        raise ValueError("profiles must share one dimension")

    axis = _lattice_axis(quad.n_points, quad.radius)
    dp = axis[1] - axis[0]
    if dim == 1:
        mom = axis[:, None]
    else:
        mesh = np.meshgrid(axis, axis, axis, indexing="ij")
        mom = np.stack([mm.ravel() for mm in mesh], axis=-1)
    e = np.sqrt(np.sum(mom**2, axis=-1) + params.mass**2)
    diff = mom[:, None, :] - mom[None, :, :]
    esum = e[:, None] + e[None, :]
    vol = dp**dim
    c_const = inverse_energy_sq_l2norm(params, dim)

    def val(prof):
        return prof.value(diff)

    if case == "single":
        (a2,) = profiles
        kernel = val(a2) / esum**2
        lhs = float(np.linalg.norm(kernel)) * vol
        rhs = c_const * a2.value_norm(2)
    elif case == "outer":
        a1, a2 = profiles
        inner = (val(a1) @ (val(a2) / esum)) * vol
        kernel = inner / esum
        lhs = float(np.linalg.norm(kernel)) * vol
        rhs = c_const * a1.value_norm(1) * a2.value_norm(2)
    elif case == "chained":
        a1, a2 = profiles
        kernel = ((val(a1) / esum) @ (val(a2) / esum)) * vol
        lhs = float(np.linalg.norm(kernel)) * vol
        rhs = c_const * a1.value_norm(1) * a2.value_norm(2)
    else:  # triple
        a1, a2, a3 = profiles
        kernel = ((val(a1) / esum) @ val(a2) @ (val(a3) / esum)) * vol**2
        lhs = float(np.linalg.norm(kernel)) * vol
        rhs = c_const * a1.value_norm(1) * a2.value_norm(2) * a3.value_norm(1)

    return EstimateCheck(case=case, lhs=lhs, rhs=rhs, passed=bool(lhs <= rhs))
