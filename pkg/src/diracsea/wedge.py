"""Determinant calculus for filled-sea states at finite truncation.

A sea is a tall complex matrix whose columns are the occupied one-particle
states; the index space is ``C^M`` with M the column count. Inner products of
seas are plain determinants of the M x M overlap, and every identity in this
module (isometry of the left operation, determinant scaling of the right
operation, polar-decomposition lift, phase freedom) is exact at finite M.

Relative charge at truncation is the column-count difference, guarded by a
singular-value gray-zone check that detects when the truncated overlap
misrepresents the situation (values neither clearly zero nor clearly order
one). Conventions fixed here: sea columns and window modes are ordered by
ascending index, and a sea with more occupied modes than a reference carries
positive relative charge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ChargeObstructionError, GrayZoneError, RankDeficiencyError

__all__ = [
    "DiracSea",
    "WedgeVector",
    "LiftRotation",
    "ApproxClassReport",
    "sea_inner",
    "wedge_inner",
    "polar_sea",
    "relative_charge",
    "approx_class_diagnostics",
    "left_op",
    "right_op",
    "lift_rotation",
    "transition_probability",
    "hartree_fock_probability",
]


@dataclass(frozen=True)
class DiracSea:
    """Occupied one-particle states as columns of an ``N x M`` matrix."""

    columns: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.columns, dtype=complex)
        if mat.ndim != 2:
            raise ValueError(f"sea columns must be a 2-d array, got ndim={mat.ndim}")
        if mat.shape[1] > mat.shape[0] - 1:
            raise ValueError(
                "sea must leave a nontrivial complement: "
                f"got {mat.shape[1]} columns in dimension {mat.shape[0]}"
            )
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "columns", mat)

    @property
    def space_dim(self) -> int:
        return self.columns.shape[0]

    @property
    def index_dim(self) -> int:
        return self.columns.shape[1]

    def isometry_defect(self) -> float:
        overlap = self.columns.conj().T @ self.columns
        return float(np.linalg.norm(overlap - np.eye(self.index_dim)))

    def require_isometric(self, tol: float = 1e-8) -> None:
        defect = self.isometry_defect()
        if defect > tol:
            raise ValueError(
                f"sea is not isometric: Frobenius defect {defect:.3e} > {tol:.1e}"
            )


@dataclass(frozen=True)
class WedgeVector:
    """Finite formal combination of seas sharing one index dimension."""

    terms: tuple[tuple[complex, DiracSea], ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("a wedge vector needs at least one term")
        dims = {sea.index_dim for _, sea in self.terms}
        spaces = {sea.space_dim for _, sea in self.terms}
        if len(dims) != 1 or len(spaces) != 1:
            raise ValueError("all terms must share the sea dimensions")
        object.__setattr__(
            self,
            "terms",
            tuple((complex(c), sea) for c, sea in self.terms),
        )


def sea_inner(phi: DiracSea, psi: DiracSea) -> complex:
    """Determinant of the column-overlap matrix."""
    if phi.index_dim != psi.index_dim:
        raise ValueError(
            f"index dimensions differ: {phi.index_dim} vs {psi.index_dim}"
        )
    if phi.space_dim != psi.space_dim:
        raise ValueError(f"space dimensions differ: {phi.space_dim} vs {psi.space_dim}")
    overlap = phi.columns.conj().T @ psi.columns
    return complex(np.linalg.det(overlap))


def wedge_inner(v: WedgeVector, w: WedgeVector) -> complex:
    """Sesquilinear extension of :func:`sea_inner` to formal combinations."""
    total = 0.0 + 0.0j
    for cv, sv in v.terms:
        for cw, sw in w.terms:
            total += np.conj(cv) * cw * sea_inner(sv, sw)
    return complex(total)


def polar_sea(psi: DiracSea, rank_tol: float = 1e-12) -> tuple[DiracSea, np.ndarray]:
    """Split a full-rank sea into an isometry times a positive factor.

    Returns ``(upsilon, r)`` with ``psi = upsilon @ r``, ``upsilon`` isometric
    and ``r = sqrt(psi* psi)`` Hermitian positive definite.
    """
    gram = psi.columns.conj().T @ psi.columns
    w, v = np.linalg.eigh(gram)
    if w[0] <= rank_tol * max(w[-1], 1.0):
        raise RankDeficiencyError(
            f"sea is rank deficient: smallest Gram eigenvalue {w[0]:.3e}"
        )
    sqrt_w = np.sqrt(w)
    r = (v * sqrt_w) @ v.conj().T
    upsilon = psi.columns @ ((v / sqrt_w) @ v.conj().T)
    return DiracSea(upsilon), r


def relative_charge(
    v: DiracSea,
    w: DiracSea,
    gray_zone: tuple[float, float] = (1e-8, 1e-4),
) -> int:
    """Finite-truncation Fredholm index of the overlap map from V to W.

    Kernel minus cokernel dimension, which at finite truncation is the
    column-count difference ``dim V - dim W``; singular values of the overlap
    inside the gray zone mean the truncation cannot distinguish occupied from
    orthogonal directions, and raise instead of guessing.
    """
    if v.space_dim != w.space_dim:
        raise ValueError(f"space dimensions differ: {v.space_dim} vs {w.space_dim}")
    low, high = gray_zone
    if not (0 < low < high):
        raise ValueError(f"need 0 < low < high in the gray zone, got {gray_zone}")
    overlap = w.columns.conj().T @ v.columns
    singulars = np.linalg.svd(overlap, compute_uv=False)
    inside = singulars[(singulars > low) & (singulars < high)]
    if inside.size:
        raise GrayZoneError(tuple(float(s) for s in inside), gray_zone)
    return v.index_dim - w.index_dim


@dataclass(frozen=True)
class ApproxClassReport:
    """Hilbert-Schmidt and determinant diagnostics of a pair of seas."""

    hs_v_to_wperp: float
    hs_vperp_to_w: float
    det_vwv: complex
    det_wvw: complex


def approx_class_diagnostics(v: DiracSea, w: DiracSea) -> ApproxClassReport:
    """Off-diagonal Hilbert-Schmidt norms and finite-section determinants.

    Both seas must be isometric so their column spans define projectors. The
    determinants are of the compressed products ``P_V P_W P_V`` on V and
    ``P_W P_V P_W`` on W; when the charges match their moduli agree.
    """
    v.require_isometric()
    w.require_isometric()
    if v.space_dim != w.space_dim:
        raise ValueError(f"space dimensions differ: {v.space_dim} vs {w.space_dim}")
    cross = w.columns.conj().T @ v.columns  # (M_W, M_V)
    # ||P_{W perp} P_V||_F^2 = ||(1 - P_W) Phi_V||_F^2 for isometric seas
    hs1 = np.linalg.norm(v.columns) ** 2 - np.linalg.norm(cross) ** 2
    hs2 = np.linalg.norm(w.columns) ** 2 - np.linalg.norm(cross) ** 2
    det_vwv = complex(np.linalg.det(cross.conj().T @ cross))
    det_wvw = complex(np.linalg.det(cross @ cross.conj().T))
    return ApproxClassReport(
        hs_v_to_wperp=float(np.sqrt(max(hs1, 0.0))),
        hs_vperp_to_w=float(np.sqrt(max(hs2, 0.0))),
        det_vwv=det_vwv,
        det_wvw=det_wvw,
    )


def _as_matrix(u) -> np.ndarray:
    if hasattr(u, "matrix"):
        return np.asarray(u.matrix, dtype=complex)
    return np.asarray(u, dtype=complex)


def left_op(u, v: WedgeVector | DiracSea, validate: bool = True):
    """Apply a unitary to every occupied column of every sea."""
    mat = _as_matrix(u)
    if validate:
        defect = np.linalg.norm(mat.conj().T @ mat - np.eye(mat.shape[0]))
        if defect > 1e-8 * mat.shape[0]:
            raise ValueError(f"left operation needs a unitary, defect {defect:.3e}")
    if isinstance(v, DiracSea):
        return DiracSea(mat @ v.columns)
    return WedgeVector(tuple((c, DiracSea(mat @ s.columns)) for c, s in v.terms))


def right_op(r: np.ndarray, v: WedgeVector | DiracSea):
    """Rotate the index space: each sea ``Phi`` becomes ``Phi @ r``.

    Scales all amplitudes by ``det(r)`` and Gram matrices by ``det(r* r)``;
    singular ``r`` is rejected.
    """
    r = np.asarray(r, dtype=complex)
    singulars = np.linalg.svd(r, compute_uv=False)
    if singulars[-1] <= 1e-12 * max(singulars[0], 1.0):
        raise ValueError(
            f"right operation needs an invertible matrix, smallest singular "
            f"value {singulars[-1]:.3e}"
        )
    if isinstance(v, DiracSea):
        return DiracSea(v.columns @ r)
    return WedgeVector(tuple((c, DiracSea(s.columns @ r)) for c, s in v.terms))


@dataclass(frozen=True)
class LiftRotation:
    """Index rotation making a lifted evolution land in the target sector.

    ``rotation`` is the unitary index-space matrix, ``positive_factor`` the
    Hermitian positive-semidefinite part of the polar split of the sea
    overlap, and ``smallest_singular`` its conditioning. The rotation is
    unique up to a phase: any determinant-one right factor leaves transition
    probabilities unchanged.
    """

    rotation: np.ndarray
    positive_factor: np.ndarray
    smallest_singular: float
    phase_freedom: str = field(
        default="rotation determined up to a unimodular scalar", repr=False
    )


def lift_rotation(
    u,
    phi: DiracSea,
    phi_prime: DiracSea,
    singular_floor: float = 1e-10,
) -> LiftRotation:
    """Polar-split the dressed overlap ``phi_prime* U phi`` into B R^{-1}.

    Unequal index dimensions are the charge obstruction of the lift theorem;
    a singular overlap means the two sectors are orthogonal beyond the
    truncation's resolution and has no well-conditioned rotation.
    """
    if phi.index_dim != phi_prime.index_dim:
        raise ChargeObstructionError(
            "relative charge nonzero: index dimensions "
            f"{phi.index_dim} vs {phi_prime.index_dim}"
        )
    mat = _as_matrix(u)
    overlap = phi_prime.columns.conj().T @ (mat @ phi.columns)
    left, sing, right_h = np.linalg.svd(overlap)
    if sing[-1] <= singular_floor:
        raise RankDeficiencyError(
            f"sea overlap nearly singular: smallest singular value {sing[-1]:.3e}"
        )
    rotation = right_h.conj().T @ left.conj().T
    positive = (left * sing) @ left.conj().T
    return LiftRotation(
        rotation=rotation,
        positive_factor=positive,
        smallest_singular=float(sing[-1]),
    )


def transition_probability(
    psi_out: DiracSea, u, lift: LiftRotation, psi_in: DiracSea
) -> float:
    """Squared determinant amplitude of the lifted evolution between seas."""
    mat = _as_matrix(u)
    if psi_out.index_dim != psi_in.index_dim:
        raise ValueError(
            f"index dimensions differ: {psi_out.index_dim} vs {psi_in.index_dim}"
        )
    overlap = psi_out.columns.conj().T @ (mat @ (psi_in.columns @ lift.rotation))
    amp = np.linalg.det(overlap)
    prob = float(np.abs(amp) ** 2)
    if prob > 1.0 + 1e-9:
        raise ValueError(f"transition probability {prob} exceeds 1 beyond tolerance")
    return prob


def hartree_fock_probability(u, phi_in: DiracSea, phi_out: DiracSea) -> float:
    """Vacuum-to-vacuum probability by the determinant of ``1 - |P_perp U|^2``.

    Evaluates ``det(1 - |P_{W perp} U P_V|^2)`` compressed to the in-sea span,
    an independent route to the squared amplitude of the lifted evolution
    between the same seas.
    """
    phi_in.require_isometric()
    phi_out.require_isometric()
    mat = _as_matrix(u)
    moved = mat @ phi_in.columns  # (N, M)
    proj_out = phi_out.columns.conj().T @ moved  # (M', M)
    gram = moved.conj().T @ moved - proj_out.conj().T @ proj_out
    m = phi_in.index_dim
    value = np.linalg.det(np.eye(m) - gram)
    return float(np.real(value))
