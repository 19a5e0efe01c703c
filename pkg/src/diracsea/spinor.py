"""Dirac matrices, the free momentum-space Hamiltonian, and spectral projectors.

Everything here works on momentum blocks: a momentum array of shape ``(..., d)``
with ``d in {1, 2, 3}`` produces stacked ``(..., 4, 4)`` matrices that broadcast
through numpy. The representation is the standard one,

    beta = diag(1, 1, -1, -1),    alpha_i = offdiag(sigma_i, sigma_i),

and the metric is ``diag(1, -1, -1, -1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PhysicsParams",
    "DiracMatrices",
    "GammaTraceReport",
    "dirac_matrices",
    "four_alpha",
    "gamma_matrices",
    "METRIC",
    "energy",
    "free_hamiltonian",
    "projectors",
    "free_eigenbasis",
    "plane_wave_spinors",
    "gamma_trace_check",
]


@dataclass(frozen=True)
class PhysicsParams:
    """Mass and coupling; both enter every kernel, so they travel together.

    Parameters
    ----------
    mass:
        Fermion mass ``m > 0``.
    coupling:
        Charge ``e`` multiplying the external potential. May be zero or
        negative.
    """

    mass: float
    coupling: float = 1.0

    def __post_init__(self):
        if not (self.mass > 0.0):
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not np.isfinite(self.coupling):
            raise ValueError(f"coupling must be finite, got {self.coupling}")


def _build_matrices() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    s1 = np.array([[0, 1], [1, 0]], dtype=complex)
    s2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
    s3 = np.array([[1, 0], [0, -1]], dtype=complex)
    zero = np.zeros((2, 2), dtype=complex)
    eye = np.eye(2, dtype=complex)

    beta = np.block([[eye, zero], [zero, -eye]])
    alphas = np.stack(
        [np.block([[zero, s], [s, zero]]) for s in (s1, s2, s3)], axis=0
    )
    four = np.concatenate([np.eye(4, dtype=complex)[None], alphas], axis=0)
    for arr in (beta, alphas, four):
        arr.setflags(write=False)
    return beta, alphas, four


_BETA, _ALPHA, _FOUR_ALPHA = _build_matrices()

#: Minkowski metric, signature (+, -, -, -).
METRIC = np.diag([1.0, -1.0, -1.0, -1.0])
METRIC.setflags(write=False)

_GAMMA = np.einsum("ab,mbc->mac", _BETA, _FOUR_ALPHA)
_GAMMA.setflags(write=False)


@dataclass(frozen=True)
class DiracMatrices:
    """The three spatial alpha matrices (stacked) and beta, read-only views."""

    alpha: np.ndarray  # shape (3, 4, 4)
    beta: np.ndarray  # shape (4, 4)


def dirac_matrices() -> DiracMatrices:
    """Return the Dirac matrices in the standard representation."""
    return DiracMatrices(alpha=_ALPHA, beta=_BETA)


def four_alpha() -> np.ndarray:
    """Stack ``(alpha^0, alpha^1, alpha^2, alpha^3)`` with ``alpha^0 = 1``.

    This is the tuple contracting the covariant potential components in the
    interaction kernel.
    """
    return _FOUR_ALPHA


def gamma_matrices() -> np.ndarray:
    """Stack ``gamma^mu = beta @ alpha^mu``, shape ``(4, 4, 4)``."""
    return _GAMMA


def energy(momenta: np.ndarray, params: PhysicsParams) -> np.ndarray:
    """Relativistic dispersion ``E(p) = sqrt(|p|^2 + m^2)``.

    Parameters
    ----------
    momenta:
        Array of shape ``(..., d)``; the last axis holds the components.
    """
    momenta = np.asarray(momenta, dtype=float)
    return np.sqrt(np.sum(momenta**2, axis=-1) + params.mass**2)


def free_hamiltonian(momenta: np.ndarray, params: PhysicsParams) -> np.ndarray:
    """Momentum block ``H0(p) = alpha . p + beta m``, shape ``(..., 4, 4)``."""
    momenta = np.asarray(momenta, dtype=float)
    d = momenta.shape[-1]
    if d > 3:
        raise ValueError(f"momenta must have at most 3 components, got {d}")
    h = np.einsum("...i,iab->...ab", momenta, _ALPHA[:d])
    return h + params.mass * _BETA


def projectors(
    momenta: np.ndarray, params: PhysicsParams
) -> tuple[np.ndarray, np.ndarray]:
    """Spectral projectors ``P_pm(p) = (1 pm H0(p)/E(p)) / 2``.

    Returns the pair ``(P_plus, P_minus)``, each of shape ``(..., 4, 4)``.
    """
    h = free_hamiltonian(momenta, params)
    e = energy(momenta, params)
    h_over_e = h / e[..., None, None]
    half_eye = 0.5 * np.eye(4, dtype=complex)
    return half_eye + 0.5 * h_over_e, half_eye - 0.5 * h_over_e


def free_eigenbasis(
    momenta: np.ndarray, params: PhysicsParams
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of the free Hamiltonian blocks.

    Returns ``(values, vectors)`` with values ascending, so columns 0 and 1 of
    each block span the negative-energy eigenspace and columns 2 and 3 the
    positive one. Phases within the twofold-degenerate eigenspaces are whatever
    the LAPACK driver produces; use :func:`plane_wave_spinors` when an explicit
    convention matters.
    """
    h = free_hamiltonian(momenta, params)
    return np.linalg.eigh(h)


def plane_wave_spinors(
    momenta: np.ndarray, params: PhysicsParams
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form orthonormal eigenspinors of ``H0(p)``.

    Returns ``(u, v)`` of shape ``(..., 4, 2)``: the columns of ``u`` span the
    positive-energy eigenspace, those of ``v`` the negative one, built from the
    textbook construction ``u_s ~ ((E+m) chi_s, (sigma.p) chi_s)``. Serves as
    an explicit cross-check against :func:`projectors`.
    """
    momenta = np.asarray(momenta, dtype=float)
    d = momenta.shape[-1]
    batch = momenta.shape[:-1]
    p3 = np.zeros(batch + (3,), dtype=float)
    p3[..., :d] = momenta
    m = params.mass
    e = energy(momenta, params)

    s1, s2, s3 = _ALPHA[0][:2, 2:], _ALPHA[1][:2, 2:], _ALPHA[2][:2, 2:]
    sig_p = (
        p3[..., 0, None, None] * s1
        + p3[..., 1, None, None] * s2
        + p3[..., 2, None, None] * s3
    )
    chi = np.eye(2, dtype=complex)
    top = (e + m)[..., None, None] * chi
    bottom = sig_p @ chi
    norm = np.sqrt(2.0 * e * (e + m))[..., None, None]
    u = np.concatenate([top, bottom], axis=-2) / norm
    v = np.concatenate([-bottom, top], axis=-2) / norm
    return u, v


@dataclass(frozen=True)
class GammaTraceReport:
    """Deviations of the matrix algebra and gamma traces from their identities.

    ``passed`` applies the stated tolerances: 1e-14 for the anticommutator
    algebra and 1e-12 for the traces.
    """

    algebra_max_dev: float
    pair_trace_max_dev: float
    triple_trace_max_dev: float
    quad_trace_max_dev: float
    n_identities: int
    passed: bool


def gamma_trace_check() -> GammaTraceReport:
    """Verify the Dirac algebra and the trace identities by direct evaluation.

    Checks, over all index tuples:

    * ``{alpha^i, alpha^j} = 2 delta^{ij}``, ``{alpha^i, beta} = 0``,
      ``beta^2 = 1``, Hermiticity of all five matrices;
    * ``tr(gamma^mu gamma^nu) = 4 g^{mu nu}``;
    * ``tr`` of any product of three gammas vanishes;
    * ``tr(gamma^mu gamma^nu gamma^kappa gamma^lambda)
      = 4 (g^{mu nu} g^{kappa lambda} + g^{mu lambda} g^{kappa nu}
      - g^{mu kappa} g^{nu lambda})``.
    """
    g = METRIC
    gam = _GAMMA
    count = 0

    algebra = 0.0
    for i in range(1, 4):
        for j in range(1, 4):
            anti = _FOUR_ALPHA[i] @ _FOUR_ALPHA[j] + _FOUR_ALPHA[j] @ _FOUR_ALPHA[i]
            target = 2.0 * (i == j) * np.eye(4)
            algebra = max(algebra, float(np.abs(anti - target).max()))
            count += 1
    for i in range(1, 4):
        anti = _FOUR_ALPHA[i] @ _BETA + _BETA @ _FOUR_ALPHA[i]
        algebra = max(algebra, float(np.abs(anti).max()))
        count += 1
    algebra = max(algebra, float(np.abs(_BETA @ _BETA - np.eye(4)).max()))
    count += 1
    for mat in (*_FOUR_ALPHA, _BETA):
        algebra = max(algebra, float(np.abs(mat - mat.conj().T).max()))
        count += 1

    pair = 0.0
    for mu in range(4):
        for nu in range(4):
            tr = np.trace(gam[mu] @ gam[nu])
            pair = max(pair, float(abs(tr - 4.0 * g[mu, nu])))
            count += 1

    triple = 0.0
    for mu in range(4):
        for nu in range(4):
            for ka in range(4):
                tr = np.trace(gam[mu] @ gam[nu] @ gam[ka])
                triple = max(triple, float(abs(tr)))
                count += 1

    quad = 0.0
    for mu in range(4):
        for nu in range(4):
            for ka in range(4):
                for la in range(4):
                    tr = np.trace(gam[mu] @ gam[nu] @ gam[ka] @ gam[la])
                    target = 4.0 * (
                        g[mu, nu] * g[ka, la]
                        + g[mu, la] * g[ka, nu]
                        - g[mu, ka] * g[nu, la]
                    )
                    quad = max(quad, float(abs(tr - target)))
                    count += 1

    passed = algebra <= 1e-14 and max(pair, triple, quad) <= 1e-12
    return GammaTraceReport(
        algebra_max_dev=algebra,
        pair_trace_max_dev=pair,
        triple_trace_max_dev=triple,
        quad_trace_max_dev=quad,
        n_identities=count,
        passed=passed,
    )
