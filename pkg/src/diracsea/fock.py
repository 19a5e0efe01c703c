"""Creation and annihilation calculus on a finite window of modes.

The window covers one-particle mode indices ``{-K, ..., L}``, split at zero:
negative modes form the filled-sea side, nonnegative modes the excited side.
States live in the full antisymmetric space over the window, stored densely
over occupation bitmasks (bit b of a mask is the b-th mode in ascending index
order). Basis states are ordered products with ascending mode index, which
fixes every sign below; the reference vacuum occupies exactly the negative
modes.

Charge counts particles minus holes: occupied nonnegative modes minus empty
negative modes. Creation and annihilation shift it by exactly one and satisfy
the anticommutation relations exactly (signs are integers, amplitudes are
sums of products of the input coefficients).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TruncationWindow",
    "FockVector",
    "HoleParticleContent",
    "basis_state",
    "vacuum_state",
    "hole_particle",
    "charge_of_mask",
    "charge_table",
    "car_create",
    "car_annihilate",
]

_MAX_MODES = 20


@dataclass(frozen=True)
class TruncationWindow:
    """Mode index range ``{-holes_below, ..., particles_above - 1}``."""

    holes_below: int
    particles_above: int

    def __post_init__(self):
        if self.holes_below < 1 or self.particles_above < 1:
            raise ValueError(
                "window needs at least one mode on each side of zero, got "
                f"{self.holes_below} below and {self.particles_above} above"
            )
        if self.n_modes > _MAX_MODES:
            raise ValueError(
                f"window has {self.n_modes} modes; dense state vectors are "
                f"capped at {_MAX_MODES} modes"
            )

    @property
    def n_modes(self) -> int:
        return self.holes_below + self.particles_above

    @property
    def modes(self) -> tuple[int, ...]:
        return tuple(range(-self.holes_below, self.particles_above))

    @property
    def dimension(self) -> int:
        return 1 << self.n_modes

    def bit_of(self, mode: int) -> int:
        if not -self.holes_below <= mode < self.particles_above:
            raise ValueError(f"mode {mode} outside window {self.modes[0]}..{self.modes[-1]}")
        return mode + self.holes_below

    @property
    def vacuum_mask(self) -> int:
        return (1 << self.holes_below) - 1


@dataclass(frozen=True)
class FockVector:
    """Dense state over occupation bitmasks of a window."""

    window: TruncationWindow
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.window.dimension,):
            raise ValueError(
                f"amplitude vector must have length {self.window.dimension}, "
                f"got shape {amps.shape}"
            )
        object.__setattr__(self, "amplitudes", amps)

    def __add__(self, other: "FockVector") -> "FockVector":
        self._check_window(other)
        return FockVector(self.window, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "FockVector") -> "FockVector":
        self._check_window(other)
        return FockVector(self.window, self.amplitudes - other.amplitudes)

    def __rmul__(self, scalar: complex) -> "FockVector":
        return FockVector(self.window, complex(scalar) * self.amplitudes)

    def _check_window(self, other: "FockVector") -> None:
        if other.window != self.window:
            raise ValueError("vectors live on different windows")

    def inner(self, other: "FockVector") -> complex:
        self._check_window(other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def basis_state(window: TruncationWindow, occupied) -> FockVector:
    """Unit basis vector with exactly the given modes occupied."""
    mask = 0
    seen = set()
    for mode in occupied:
        if mode in seen:
            raise ValueError(f"mode {mode} listed twice")
        seen.add(mode)
        mask |= 1 << window.bit_of(mode)
    amps = np.zeros(window.dimension, dtype=complex)
    amps[mask] = 1.0
    return FockVector(window, amps)


def vacuum_state(window: TruncationWindow) -> FockVector:
    """All negative modes occupied, all nonnegative modes empty."""
    amps = np.zeros(window.dimension, dtype=complex)
    amps[window.vacuum_mask] = 1.0
    return FockVector(window, amps)


@dataclass(frozen=True)
class HoleParticleContent:
    """Occupied excited modes and vacated sea modes of a basis state."""

    particles: tuple[int, ...]
    holes: tuple[int, ...]

    @property
    def charge(self) -> int:
        return len(self.particles) - len(self.holes)


def hole_particle(window: TruncationWindow, occupied) -> HoleParticleContent:
    """Classify a mode set against the vacuum of the window."""
    occ = set(occupied)
    for mode in occ:
        window.bit_of(mode)
    particles = tuple(sorted(m for m in occ if m >= 0))
    holes = tuple(sorted(m for m in window.modes if m < 0 and m not in occ))
    return HoleParticleContent(particles=particles, holes=holes)


def charge_of_mask(window: TruncationWindow, mask: int) -> int:
    """Particles minus holes for one occupation bitmask."""
    neg_bits = window.vacuum_mask
    occupied_neg = int(mask & neg_bits).bit_count()
    occupied_pos = int(mask & ~neg_bits).bit_count()
    return occupied_pos - (window.holes_below - occupied_neg)


def charge_table(window: TruncationWindow) -> np.ndarray:
    """Charge of every bitmask, indexed by mask."""
    masks = np.arange(window.dimension, dtype=np.uint64)
    neg = np.uint64(window.vacuum_mask)
    occ_neg = np.bitwise_count(masks & neg).astype(np.int64)
    occ_pos = np.bitwise_count(masks & ~neg).astype(np.int64)
    return occ_pos - (window.holes_below - occ_neg)


def _coefficients(window: TruncationWindow, chi) -> np.ndarray:
    coeff = np.asarray(chi, dtype=complex)
    if coeff.shape != (window.n_modes,):
        raise ValueError(
            "one-particle argument must be a coefficient vector over the "
            f"{window.n_modes} window modes (ascending index); got shape "
            f"{coeff.shape}, which lies outside the window span"
        )
    return coeff


def _mode_sign_and_targets(window: TruncationWindow, bit: int):
    masks = np.arange(window.dimension, dtype=np.uint64)
    bitval = np.uint64(1 << bit)
    lowmask = np.uint64((1 << bit) - 1)
    signs = 1 - 2 * (np.bitwise_count(masks & lowmask).astype(np.int64) & 1)
    return masks, bitval, signs


def car_create(window: TruncationWindow, chi, state: FockVector) -> FockVector:
    """Creation operator of the one-particle vector ``chi``, linear in it.

    Acting on a basis state occupied at S and a single mode j not in S, the
    result is the basis state of S with j inserted, times (-1) to the number
    of occupied modes below j.
    """
    coeff = _coefficients(window, chi)
    state._check_window(FockVector(window, np.zeros(window.dimension)))
    out = np.zeros(window.dimension, dtype=complex)
    for bit in range(window.n_modes):
        if coeff[bit] == 0:
            continue
        masks, bitval, signs = _mode_sign_and_targets(window, bit)
        empty = (masks & bitval) == 0
        src = masks[empty]
        out[src | bitval] += coeff[bit] * signs[empty] * state.amplitudes[src]
    return FockVector(window, out)


def car_annihilate(window: TruncationWindow, chi, state: FockVector) -> FockVector:
    """Adjoint of :func:`car_create`, conjugate-linear in ``chi``."""
    coeff = np.conj(_coefficients(window, chi))
    out = np.zeros(window.dimension, dtype=complex)
    for bit in range(window.n_modes):
        if coeff[bit] == 0:
            continue
        masks, bitval, signs = _mode_sign_and_targets(window, bit)
        filled = (masks & bitval) != 0
        src = masks[filled]
        out[src & ~bitval] += coeff[bit] * signs[filled] * state.amplitudes[src]
    return FockVector(window, out)
