"""Periodic momentum/position lattices and the discrete Fourier pair.

A grid is a cube ``[-L/2, L/2)^dim`` sampled at ``n`` points per axis with the
dual momentum lattice ``p_j = 2*pi*j/L`` for integer ``j`` in
``[-n/2, n/2)``. The momentum cutoff is ``Lambda = pi*n/L``. Flattened
enumeration is lexicographic in the integer index, so results are reproducible
across runs and machines.

Transform normalization (the one every kernel in this package assumes):

    fhat(p) = (dx/(2*pi))^d * sum_x exp(-i p.x) f(x)
    f(x)    = dp^d          * sum_p exp(+i p.x) fhat(p)

with ``dx = L/n`` and ``dp = 2*pi/L``; the discrete round trip is exactly the
identity. These are Riemann approximations of the continuum transforms, so a
sampled closed-form Fourier transform and the FFT of the sampled function agree
up to aliasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = ["GridSpec", "Grid", "build_grid"]


@dataclass(frozen=True)
class GridSpec:
    """Lattice geometry: dimension, points per axis, box length.

    ``dim`` must be 1 or 3, ``n`` even and at least 4, ``length`` positive.
    """

    dim: int
    n: int
    length: float

    def __post_init__(self):
        if self.dim not in (1, 3):
            raise ValueError(f"dim must be 1 or 3, got {self.dim}")
        if self.n < 4 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 4, got {self.n}")
        if not (self.length > 0.0 and np.isfinite(self.length)):
            raise ValueError(f"length must be positive and finite, got {self.length}")

    @property
    def spacing(self) -> float:
        """Position-space spacing ``dx = L/n``."""
        return self.length / self.n

    @property
    def momentum_spacing(self) -> float:
        """Momentum-space spacing ``dp = 2*pi/L``."""
        return 2.0 * np.pi / self.length

    @property
    def cutoff(self) -> float:
        """Largest resolved momentum magnitude per axis, ``pi*n/L``."""
        return np.pi * self.n / self.length

    @property
    def n_points(self) -> int:
        """Number of lattice points ``n^dim``."""
        return self.n**self.dim

    @property
    def n_spinor(self) -> int:
        """One-particle dimension at this truncation, ``4 * n^dim``."""
        return 4 * self.n**self.dim


@dataclass(frozen=True)
class Grid:
    """A realized lattice: integer indices, momenta, positions, transforms."""

    spec: GridSpec
    axis_indices: np.ndarray = field(repr=False)  # (n,) ints, -n/2 .. n/2-1

    @cached_property
    def axis_momenta(self) -> np.ndarray:
        return self.axis_indices * self.spec.momentum_spacing

    @cached_property
    def axis_positions(self) -> np.ndarray:
        return self.axis_indices * self.spec.spacing

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.spec.n,) * self.spec.dim

    @cached_property
    def momenta(self) -> np.ndarray:
        """All lattice momenta, shape ``(n^dim, dim)``, lexicographic order."""
        return self._product(self.axis_momenta)

    @cached_property
    def positions(self) -> np.ndarray:
        """All lattice positions, shape ``(n^dim, dim)``, lexicographic order."""
        return self._product(self.axis_positions)

    def _product(self, axis_values: np.ndarray) -> np.ndarray:
        mesh = np.meshgrid(*([axis_values] * self.spec.dim), indexing="ij")
        out = np.stack([m.ravel() for m in mesh], axis=-1)
        out.setflags(write=False)
        return out

    # -- transforms ---------------------------------------------------------

    def _spatial_axes(self, values: np.ndarray) -> tuple[int, ...]:
        d = self.spec.dim
        if values.shape[-d:] != self.shape:
            raise ValueError(
                f"trailing axes {values.shape[-d:]} do not match grid {self.shape}"
            )
        return tuple(range(values.ndim - d, values.ndim))

    def fourier(self, values: np.ndarray) -> np.ndarray:
        """Position samples (trailing axes = grid shape) -> momentum samples."""
        values = np.asarray(values)
        axes = self._spatial_axes(values)
        shifted = np.fft.ifftshift(values, axes=axes)
        out = np.fft.fftn(shifted, axes=axes)
        out = np.fft.fftshift(out, axes=axes)
        scale = (self.spec.spacing / (2.0 * np.pi)) ** self.spec.dim
        return out * scale

    def inverse_fourier(self, values: np.ndarray) -> np.ndarray:
        """Momentum samples (trailing axes = grid shape) -> position samples."""
        values = np.asarray(values)
        axes = self._spatial_axes(values)
        shifted = np.fft.ifftshift(values, axes=axes)
        out = np.fft.ifftn(shifted, axes=axes)
        out = np.fft.fftshift(out, axes=axes)
        scale = self.spec.momentum_spacing**self.spec.dim * self.spec.n_points
        return out * scale

    def ravel_spatial(self, values: np.ndarray) -> np.ndarray:
        """Collapse trailing grid axes to one lexicographic axis."""
        values = np.asarray(values)
        self._spatial_axes(values)  # shape check
        return values.reshape(values.shape[: -self.spec.dim] + (self.spec.n_points,))

    def unravel_spatial(self, values: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`ravel_spatial`."""
        values = np.asarray(values)
        if values.shape[-1] != self.spec.n_points:
            raise ValueError(
                f"last axis {values.shape[-1]} != n_points {self.spec.n_points}"
            )
        return values.reshape(values.shape[:-1] + self.shape)


def build_grid(spec: GridSpec) -> Grid:
    """Construct the lattice for a :class:`GridSpec`."""
    half = spec.n // 2
    idx = np.arange(-half, half)
    idx.setflags(write=False)
    return Grid(spec=spec, axis_indices=idx)
