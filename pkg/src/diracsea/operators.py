"""Operators on the truncated one-particle space.

States live on the momentum lattice with four spinor components per point,
flattened to vectors of length ``N = 4 * n^dim`` (momentum index major, spinor
index minor). Operator matrices absorb one factor of the momentum-space cell
volume ``dp^dim``, so

* ``matrix @ state`` approximates the continuum action on lattice samples, and
* the plain Frobenius norm of a matrix approximates the continuum
  Hilbert-Schmidt norm of the kernel.

Interaction kernels are evaluated at the lattice momentum difference wrapped
periodically into the fundamental zone ``[-cutoff, cutoff)``; the zone edge,
whose two aliased images are equidistant, carries their average so the table
stays conjugate-symmetric (``iZ`` exactly Hermitian, equivalently: the kernel
is the transform of a real position-space function). The wrap makes the
interaction a cyclic convolution, hence diagonal in the position
representation, which is what the split-step propagator exponentiates.

Two representations coexist. Dense matrices tabulate the wrapped kernel and
are guarded by a memory budget. Matrix-free operators apply the same cyclic
convolution through FFTs, reproducing the dense action to roundoff on every
state while never allocating an N x N matrix.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import AlgebraError, DenseBudgetError
from .grid import Grid, GridSpec, build_grid
from .potentials import Potential
from .spinor import PhysicsParams, energy, four_alpha, free_hamiltonian, projectors

__all__ = [
    "DEFAULT_DENSE_BUDGET",
    "GridOperator",
    "DenseOperator",
    "MatrixFreeOperator",
    "HsNorm",
    "FreeData",
    "free_data",
    "fourier_table",
    "check_dense_budget",
    "identity_operator",
    "z_operator",
    "z_operator_matrix_free",
    "q_operator",
    "q_prime_operator",
    "parity_split",
    "parity_block",
    "exp_skew",
    "first_order_exp_defect",
    "hs_norm",
    "unitarity_defect",
    "save_operator_npz",
    "load_operator_npz",
]

#: Default ceiling for any single dense complex matrix (bytes).
DEFAULT_DENSE_BUDGET = 2 * 2**30

_BLOCK_KEYS = ("++", "+-", "-+", "--")


def check_dense_budget(dim: int, budget: int | None) -> None:
    """Refuse dense allocation of a ``dim x dim`` complex matrix over budget."""
    limit = DEFAULT_DENSE_BUDGET if budget is None else int(budget)
    if 16 * dim * dim > limit:
        raise DenseBudgetError(dim, limit)


class GridOperator(abc.ABC):
    """Linear operator attached to a grid."""

    grid: Grid

    @property
    def n(self) -> int:
        return self.grid.spec.n_spinor

    @abc.abstractmethod
    def apply(self, x: np.ndarray) -> np.ndarray:
        """Apply to a vector ``(N,)`` or a batch ``(N, k)``."""

    @abc.abstractmethod
    def apply_adjoint(self, x: np.ndarray) -> np.ndarray: ...


@dataclass
class DenseOperator(GridOperator):
    """Explicit matrix representation."""

    grid: Grid
    matrix: np.ndarray

    def __post_init__(self):
        n = self.grid.spec.n_spinor
        if self.matrix.shape != (n, n):
            raise ValueError(f"matrix shape {self.matrix.shape} != ({n}, {n})")

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def apply_adjoint(self, x: np.ndarray) -> np.ndarray:
        return self.matrix.conj().T @ x

    def adjoint(self) -> "DenseOperator":
        return DenseOperator(self.grid, self.matrix.conj().T)

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        if other.grid.spec != self.grid.spec:
            raise ValueError("operators live on different grids")
        return DenseOperator(self.grid, self.matrix @ other.matrix)


@dataclass
class MatrixFreeOperator(GridOperator):
    """Operator given by appliers; used when dense storage is off budget."""

    grid: Grid
    apply_fn: Callable[[np.ndarray], np.ndarray]
    adjoint_fn: Callable[[np.ndarray], np.ndarray] | None = None
    label: str = ""

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.apply_fn(x)

    def apply_adjoint(self, x: np.ndarray) -> np.ndarray:
        if self.adjoint_fn is None:
            raise NotImplementedError(f"no adjoint applier for {self.label or 'operator'}")
        return self.adjoint_fn(x)


def identity_operator(grid: Grid, budget: int | None = None) -> DenseOperator:
    check_dense_budget(grid.spec.n_spinor, budget)
    return DenseOperator(grid, np.eye(grid.spec.n_spinor, dtype=complex))


# ---------------------------------------------------------------------------
# cached per-grid free-particle data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FreeData:
    """Per-momentum energies, Hamiltonian blocks, and spectral projectors."""

    spec: GridSpec
    mass: float
    energies: np.ndarray  # (M,)
    hblocks: np.ndarray  # (M, 4, 4)
    pplus: np.ndarray  # (M, 4, 4)
    pminus: np.ndarray  # (M, 4, 4)


@lru_cache(maxsize=32)
def _free_data_cached(spec: GridSpec, mass: float) -> FreeData:
    grid = build_grid(spec)
    params = PhysicsParams(mass=mass, coupling=1.0)
    mom = grid.momenta
    e = energy(mom, params)
    h = free_hamiltonian(mom, params)
    pp, pm = projectors(mom, params)
    for arr in (e, h, pp, pm):
        arr.setflags(write=False)
    return FreeData(spec=spec, mass=mass, energies=e, hblocks=h, pplus=pp, pminus=pm)


def free_data(grid: Grid, params: PhysicsParams) -> FreeData:
    return _free_data_cached(grid.spec, params.mass)


def as_blocks(grid: Grid, x: np.ndarray) -> np.ndarray:
    """Flat state(s) ``(N, ...)`` -> momentum blocks ``(M, 4, ...)``."""
    m = grid.spec.n_points
    return x.reshape((m, 4) + x.shape[1:])


def as_flat(grid: Grid, blocks: np.ndarray) -> np.ndarray:
    return blocks.reshape((grid.spec.n_spinor,) + blocks.shape[2:])


def _apply_projector(proj: np.ndarray, x: np.ndarray, grid: Grid) -> np.ndarray:
    blocks = as_blocks(grid, x)
    if blocks.ndim == 2:
        out = np.einsum("mab,mb->ma", proj, blocks)
    else:
        out = np.einsum("mab,mb...->ma...", proj, blocks)
    return as_flat(grid, out)


# ---------------------------------------------------------------------------
# interaction kernel
# ---------------------------------------------------------------------------


def fourier_table(
    pot: Potential, t: float, grid: Grid, time_derivative: bool = False
) -> np.ndarray:
    """Closed-form Fourier components tabulated on the momentum lattice.

    Returns shape ``(4,) + grid.shape`` in ascending momentum order. The zone
    edge (most negative index per axis) is the average of its two aliased
    images at ``-cutoff`` and ``+cutoff``, so the table is conjugate-symmetric
    on the periodic lattice and transforms to a real position-space function.
    With ``time_derivative=True`` the envelope derivatives are tabulated
    instead.
    """
    spec = grid.spec
    dp = spec.momentum_spacing
    half = spec.n // 2
    axis_ext = np.arange(-half, half + 1) * dp  # includes both zone edges
    mesh = np.meshgrid(*([axis_ext] * spec.dim), indexing="ij")
    kext = np.stack([m.ravel() for m in mesh], axis=-1)
    if time_derivative:
        values = pot.component_fourier_dt(t, kext)
    else:
        values = pot.component_fourier(t, kext)
    table = np.asarray(values, dtype=complex).reshape(
        (4,) + (spec.n + 1,) * spec.dim
    )
    for axis in range(spec.dim):
        lead = (slice(None),) * (1 + axis)
        first = table[lead + (slice(0, 1),)]
        last = table[lead + (slice(spec.n, spec.n + 1),)]
        middle = table[lead + (slice(1, spec.n),)]
        table = np.concatenate(
            [0.5 * (first + last), middle], axis=1 + axis
        )
    return table


def _wrapped_difference_index(spec: GridSpec) -> np.ndarray:
    """Flat table positions of the wrapped difference for every pair of
    lattice points, shape ``(M, M)``."""
    n = spec.n
    ivals = np.arange(n)
    mesh = np.meshgrid(*([ivals] * spec.dim), indexing="ij")
    m = spec.n_points
    flatidx = np.zeros((m, m), dtype=np.int64)
    for axis in range(spec.dim):
        ia = mesh[axis].ravel()
        flatidx = flatidx * n + (ia[:, None] - ia[None, :] + n // 2) % n
    return flatidx


def _z_blocks(
    pot: Potential,
    t: float,
    grid: Grid,
    params: PhysicsParams,
    time_derivative: bool = False,
) -> np.ndarray:
    """Weighted kernel blocks ``-ie sum_mu alpha^mu Ahat_mu(wrap(p-q)) dp^dim``
    as an array of shape ``(M, 4, M, 4)``."""
    table = fourier_table(pot, t, grid, time_derivative=time_derivative)
    flat = table.reshape(4, -1)
    ahat = flat[:, _wrapped_difference_index(grid.spec)]  # (4, M, M)
    weight = grid.spec.momentum_spacing**grid.spec.dim
    blocks = np.einsum("uab,uPQ->PaQb", four_alpha(), ahat)
    blocks *= -1j * params.coupling * weight
    return blocks


def z_operator(
    pot: Potential,
    t: float,
    grid: Grid,
    params: PhysicsParams,
    budget: int | None = None,
    validate: bool = True,
) -> DenseOperator:
    """Dense multiplication kernel of the interaction at time ``t``.

    The returned matrix is ``Z`` with ``iZ`` Hermitian; ``validate=True``
    (the default) checks that structure and raises :class:`AlgebraError` on
    failure, which catches complex-valued or inconsistently assembled
    potentials early.
    """
    n = grid.spec.n_spinor
    check_dense_budget(n, budget)
    mat = _z_blocks(pot, t, grid, params).reshape(n, n)
    if validate:
        herm = 1j * mat
        dev = float(np.abs(herm - herm.conj().T).max())
        scale = 1.0 + float(np.abs(herm).max())
        if dev > 1e-12 * scale:
            raise AlgebraError(
                f"iZ is not Hermitian: max deviation {dev:.3e} (scale {scale:.3e})"
            )
    return DenseOperator(grid, mat)


def z_operator_matrix_free(
    pot: Potential, t: float, grid: Grid, params: PhysicsParams
) -> MatrixFreeOperator:
    """FFT-based applier for the interaction at time ``t``.

    Applies the cyclic convolution with the wrapped kernel table through the
    convolution theorem, so the action matches :func:`z_operator` to roundoff
    on every state. Equivalently this is multiplication, in the position
    representation, by the bandlimited interpolant of the potential.

    The adjoint applier relies on the potential being real-valued (which the
    :class:`~diracsea.potentials.Potential` construction guarantees), so that
    ``iZ`` is Hermitian and ``Z* = -Z``.
    """
    spec = grid.spec
    n, d = spec.n, spec.dim
    dp = spec.momentum_spacing

    table = fourier_table(pot, t, grid)  # (4,) + grid.shape, ascending order
    axes = tuple(range(1, d + 1))
    khat = np.fft.fftn(np.fft.ifftshift(table, axes=axes), axes=axes)
    # Spinor-contracted multiplier in the conjugate domain, (..., 4, 4).
    tfield = np.einsum("uab,u...->...ab", four_alpha(), khat)

    axes = tuple(range(d))
    scale = -1j * params.coupling * dp**d

    def _convolve(x: np.ndarray) -> np.ndarray:
        single = x.ndim == 1
        if single:
            x = x[:, None]
        k = x.shape[1]
        blocks = as_blocks(grid, x).reshape(grid.shape + (4, k))
        xhat = np.fft.fftn(blocks, axes=axes)
        yhat = np.einsum("...ab,...bk->...ak", tfield, xhat)
        y = np.fft.ifftn(yhat, axes=axes)
        flat = as_flat(grid, y.reshape((spec.n_points, 4, k)))
        return flat[:, 0] if single else flat

    def apply_fn(x):
        return scale * _convolve(x)

    def adjoint_fn(x):
        return -scale * _convolve(x)

    return MatrixFreeOperator(grid, apply_fn, adjoint_fn, label=f"Z(t={t})")


# ---------------------------------------------------------------------------
# dressing kernel
# ---------------------------------------------------------------------------


def _offdiag_sandwich(
    blocks: np.ndarray, grid: Grid, params: PhysicsParams
) -> np.ndarray:
    """Map kernel blocks K to (K_{+-} - K_{-+}) / (i (E(p) + E(q)))."""
    fd = free_data(grid, params)
    pp, pm = fd.pplus, fd.pminus
    plus_minus = np.einsum("Pab,PbQc,Qcd->PaQd", pp, blocks, pm)
    minus_plus = np.einsum("Pab,PbQc,Qcd->PaQd", pm, blocks, pp)
    denom = 1j * (fd.energies[:, None] + fd.energies[None, :])
    out = (plus_minus - minus_plus) / denom[:, None, :, None]
    return out


def q_operator(
    pot: Potential,
    t: float,
    grid: Grid,
    params: PhysicsParams,
    budget: int | None = None,
    validate: bool = True,
) -> DenseOperator:
    """Dense dressing kernel at time ``t``: bounded, skew-adjoint, purely
    off-diagonal in the spectral splitting, linear in the potential."""
    n = grid.spec.n_spinor
    check_dense_budget(n, budget)
    if pot.envelope_magnitude(t) == 0.0:
        return DenseOperator(grid, np.zeros((n, n), dtype=complex))
    blocks = _z_blocks(pot, t, grid, params)
    mat = _offdiag_sandwich(blocks, grid, params).reshape(n, n)
    if validate:
        dev = float(np.abs(mat + mat.conj().T).max())
        scale = 1.0 + float(np.abs(mat).max())
        if dev > 1e-12 * scale:
            raise AlgebraError(f"dressing kernel is not skew-adjoint: {dev:.3e}")
    return DenseOperator(grid, mat)


def q_prime_operator(
    pot: Potential,
    t: float,
    grid: Grid,
    params: PhysicsParams,
    budget: int | None = None,
) -> DenseOperator:
    """Time derivative of the dressing kernel (envelope derivative under the
    same off-diagonal sandwich)."""
    n = grid.spec.n_spinor
    check_dense_budget(n, budget)
    blocks = _z_blocks(pot, t, grid, params, time_derivative=True)
    mat = _offdiag_sandwich(blocks, grid, params).reshape(n, n)
    return DenseOperator(grid, mat)


# ---------------------------------------------------------------------------
# parity machinery
# ---------------------------------------------------------------------------


def _dense_parity_project(
    op: DenseOperator, left: str, right: str, params: PhysicsParams
) -> np.ndarray:
    fd = free_data(op.grid, params)
    proj = {"+": fd.pplus, "-": fd.pminus}
    m = op.grid.spec.n_points
    blocks = op.matrix.reshape(m, 4, m, 4)
    out = np.einsum("Pab,PbQc,Qcd->PaQd", proj[left], blocks, proj[right])
    return out.reshape(op.matrix.shape)


def parity_block(
    op: GridOperator, block: str, params: PhysicsParams
) -> GridOperator:
    """Project onto one spectral block: ``block`` is one of ``++ +- -+ --``."""
    if block not in _BLOCK_KEYS:
        raise ValueError(f"block must be one of {_BLOCK_KEYS}, got {block!r}")
    left, right = block[0], block[1]
    if isinstance(op, DenseOperator):
        return DenseOperator(op.grid, _dense_parity_project(op, left, right, params))
    fd = free_data(op.grid, params)
    proj = {"+": fd.pplus, "-": fd.pminus}
    grid = op.grid

    def apply_fn(x):
        y = _apply_projector(proj[right], x, grid)
        y = op.apply(y)
        return _apply_projector(proj[left], y, grid)

    def adjoint_fn(x):
        y = _apply_projector(proj[left], x, grid)
        y = op.apply_adjoint(y)
        return _apply_projector(proj[right], y, grid)

    return MatrixFreeOperator(grid, apply_fn, adjoint_fn, label=f"{block} block")


def parity_split(
    op: GridOperator, params: PhysicsParams
) -> tuple[GridOperator, GridOperator]:
    """Split into the (even, odd) parts of the spectral splitting.

    Even commutes with the sign of the free Hamiltonian (++ plus --),
    odd anticommutes (+- plus -+); the two parts sum back to the operator.
    """
    if isinstance(op, DenseOperator):
        even = _dense_parity_project(op, "+", "+", params) + _dense_parity_project(
            op, "-", "-", params
        )
        odd = _dense_parity_project(op, "+", "-", params) + _dense_parity_project(
            op, "-", "+", params
        )
        return DenseOperator(op.grid, even), DenseOperator(op.grid, odd)
    pp = parity_block(op, "++", params)
    mm = parity_block(op, "--", params)
    pm = parity_block(op, "+-", params)
    mp = parity_block(op, "-+", params)
    grid = op.grid

    def make(pair):
        a, b = pair

        def apply_fn(x):
            return a.apply(x) + b.apply(x)

        def adjoint_fn(x):
            return a.apply_adjoint(x) + b.apply_adjoint(x)

        return MatrixFreeOperator(grid, apply_fn, adjoint_fn)

    return make((pp, mm)), make((pm, mp))


# ---------------------------------------------------------------------------
# exponentials and norms
# ---------------------------------------------------------------------------


def exp_skew(q: DenseOperator, validate: bool = True) -> DenseOperator:
    """Unitary exponential of a skew-adjoint dense operator.

    Diagonalizes the Hermitian matrix ``iQ`` and exponentiates the spectrum, so
    the result is unitary by construction (up to roundoff in the eigenbasis).
    """
    mat = q.matrix
    if validate:
        dev = float(np.abs(mat + mat.conj().T).max())
        scale = 1.0 + float(np.abs(mat).max())
        if dev > 1e-10 * scale:
            raise AlgebraError(
                f"exp_skew needs a skew-adjoint matrix; deviation {dev:.3e}"
            )
    herm = 1j * mat
    herm = 0.5 * (herm + herm.conj().T)
    w, v = np.linalg.eigh(herm)
    u = (v * np.exp(-1j * w)) @ v.conj().T
    return DenseOperator(q.grid, u)


def first_order_exp_defect(q: DenseOperator) -> float:
    """Frobenius distance between ``exp(Q)`` and ``1 + Q`` (second-order size)."""
    u = exp_skew(q).matrix
    eye = np.eye(q.n, dtype=complex)
    return float(np.linalg.norm(u - (eye + q.matrix)))


@dataclass(frozen=True)
class HsNorm:
    """A Hilbert-Schmidt norm value with its uncertainty.

    ``exact`` marks the dense Frobenius route; the matrix-free route is a
    randomized trace estimate and reports a standard error.
    """

    value: float
    stderr: float
    exact: bool


def hs_norm(
    op: GridOperator,
    params: PhysicsParams,
    block: str | None = None,
    n_probes: int = 64,
    seed: int = 0,
) -> HsNorm:
    """Hilbert-Schmidt norm of an operator or one of its spectral blocks.

    Dense operators are projected and measured exactly. Matrix-free operators
    use a Hutchinson estimator with complex Gaussian probes; the probe streams
    are spawned per probe index from the seed, so the estimate is independent
    of threading and batching.
    """
    target = op if block is None else parity_block(op, block, params)
    if isinstance(target, DenseOperator):
        return HsNorm(value=float(np.linalg.norm(target.matrix)), stderr=0.0, exact=True)

    n = op.n
    seeds = np.random.SeedSequence(seed).spawn(n_probes)
    samples = np.empty(n_probes, dtype=float)
    for k, s in enumerate(seeds):
        rng = np.random.default_rng(s)
        z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
        samples[k] = float(np.sum(np.abs(target.apply(z)) ** 2))
    mean = float(samples.mean())
    sem = float(samples.std(ddof=1) / np.sqrt(n_probes)) if n_probes > 1 else np.inf
    value = float(np.sqrt(max(mean, 0.0)))
    stderr = sem / (2.0 * value) if value > 0 else float(np.sqrt(sem))
    return HsNorm(value=value, stderr=stderr, exact=False)


def unitarity_defect(op: DenseOperator) -> float:
    """Frobenius norm of ``U* U - 1`` for a dense operator."""
    eye = np.eye(op.n, dtype=complex)
    return float(np.linalg.norm(op.matrix.conj().T @ op.matrix - eye))


# ---------------------------------------------------------------------------
# disk round trip
# ---------------------------------------------------------------------------


def save_operator_npz(op: DenseOperator, path, **metadata) -> None:
    """Save a dense operator with its grid geometry in one ``.npz`` container.

    Extra keyword arguments are stored as additional arrays/scalars.
    """
    spec = op.grid.spec
    np.savez_compressed(
        path,
        matrix=op.matrix,
        dim=spec.dim,
        n=spec.n,
        length=spec.length,
        **metadata,
    )


def load_operator_npz(path) -> tuple[DenseOperator, dict]:
    """Inverse of :func:`save_operator_npz`; returns the operator and metadata."""
    with np.load(path) as data:
        spec = GridSpec(dim=int(data["dim"]), n=int(data["n"]), length=float(data["length"]))
        grid = build_grid(spec)
        matrix = np.array(data["matrix"])
        meta = {
            key: np.array(data[key])
            for key in data.files
            if key not in {"matrix", "dim", "n", "length"}
        }
    return DenseOperator(grid, matrix), meta
