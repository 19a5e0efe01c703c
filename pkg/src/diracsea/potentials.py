"""External electromagnetic potentials: time envelopes times Gaussian bumps.

A potential is a finite sum of separable terms ``g(t) * f(x)`` attached to a
covariant component index ``mu`` (components are stored as
``A = (A_0, -Avec)``). Spatial factors are Gaussians or their first
derivatives, so the Fourier transform of every term is available in closed
form; kernels evaluate it at exact momentum differences, with no wrap-around.

Time envelopes carry analytic first and second derivatives. That keeps the
time-derivative kernel (needed for the derivative of the dressing operator)
and the gauge-ramp bookkeeping free of finite differences.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError

__all__ = [
    "TimeEnvelope",
    "SinSquaredEnvelope",
    "SmoothBumpEnvelope",
    "ConstantEnvelope",
    "SmoothStepEnvelope",
    "DerivativeEnvelope",
    "make_envelope",
    "ENVELOPE_KINDS",
    "GaussianProfile",
    "GaussianGradientProfile",
    "PotentialTerm",
    "Potential",
    "PotentialComponent",
    "PotentialSpec",
    "gauge_shifted",
    "ClassAReport",
    "class_a_norms",
]


# ---------------------------------------------------------------------------
# time envelopes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeEnvelope(abc.ABC):
    """Scalar function of time supported (or switching) on [t_start, t_end]."""

    t_start: float
    t_end: float

    def __post_init__(self):
        if not (self.t_end > self.t_start):
            raise ValueError(
                f"need t_end > t_start, got [{self.t_start}, {self.t_end}]"
            )

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def _u(self, t) -> np.ndarray:
        return (np.asarray(t, dtype=float) - self.t_start) / self.duration

    @abc.abstractmethod
    def value(self, t) -> np.ndarray: ...

    @abc.abstractmethod
    def d1(self, t) -> np.ndarray: ...

    @abc.abstractmethod
    def d2(self, t) -> np.ndarray: ...


@dataclass(frozen=True)
class SinSquaredEnvelope(TimeEnvelope):
    """``sin^2(pi u)`` on the window, zero outside; C^1 across the edges."""

    def value(self, t):
        u = self._u(t)
        inside = (u > 0.0) & (u < 1.0)
        return np.where(inside, np.sin(np.pi * u) ** 2, 0.0)

    def d1(self, t):
        u = self._u(t)
        inside = (u > 0.0) & (u < 1.0)
        return np.where(inside, (np.pi / self.duration) * np.sin(2.0 * np.pi * u), 0.0)

    def d2(self, t):
        u = self._u(t)
        inside = (u > 0.0) & (u < 1.0)
        val = (2.0 * np.pi**2 / self.duration**2) * np.cos(2.0 * np.pi * u)
        return np.where(inside, val, 0.0)


@dataclass(frozen=True)
class SmoothBumpEnvelope(TimeEnvelope):
    """``exp(1 - 1/(1 - v^2))`` in the centered coordinate v = 2u - 1.

    Compactly supported and smooth; peak value 1 at the window center.
    """

    @staticmethod
    def _pieces(v):
        # w = 1 - v^2; g = e * exp(-1/w); returns g, g'/g-coefficient, g''-coefficient
        w = 1.0 - v * v
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            g = np.where(w > 0.0, np.exp(1.0 - 1.0 / np.where(w > 0.0, w, 1.0)), 0.0)
        return w, g

    def value(self, t):
        v = 2.0 * self._u(t) - 1.0
        _, g = self._pieces(v)
        return g

    def d1(self, t):
        v = 2.0 * self._u(t) - 1.0
        w, g = self._pieces(v)
        safe_w = np.where(w > 0.0, w, 1.0)
        dgdv = np.where(w > 0.0, -2.0 * v / safe_w**2 * g, 0.0)
        return dgdv * (2.0 / self.duration)

    def d2(self, t):
        v = 2.0 * self._u(t) - 1.0
        w, g = self._pieces(v)
        safe_w = np.where(w > 0.0, w, 1.0)
        coeff = -2.0 / safe_w**2 - 8.0 * v * v / safe_w**3 + 4.0 * v * v / safe_w**4
        d2gdv2 = np.where(w > 0.0, coeff * g, 0.0)
        return d2gdv2 * (4.0 / self.duration**2)


@dataclass(frozen=True)
class ConstantEnvelope(TimeEnvelope):
    """Indicator of the window. Interior derivatives vanish; the jumps at the
    window edges are distributional and are not represented here."""

    def value(self, t):
        u = self._u(t)
        return np.where((u >= 0.0) & (u <= 1.0), 1.0, 0.0)

    def d1(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def d2(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))


def _bexp(u):
    """``exp(-1/u)`` for u > 0, 0 otherwise (smooth at 0)."""
    u = np.asarray(u, dtype=float)
    safe = np.where(u > 0.0, u, 1.0)
    with np.errstate(over="ignore"):
        return np.where(u > 0.0, np.exp(-1.0 / safe), 0.0)


@dataclass(frozen=True)
class SmoothStepEnvelope(TimeEnvelope):
    """Smooth monotone switch from 0 (before t_start) to 1 (after t_end)."""

    def value(self, t):
        u = np.clip(self._u(t), 0.0, 1.0)
        bu, bv = _bexp(u), _bexp(1.0 - u)
        return bu / (bu + bv)

    def _derivative_pieces(self, t):
        u = np.clip(self._u(t), 0.0, 1.0)
        v = 1.0 - u
        bu, bv = _bexp(u), _bexp(v)
        safe_u = np.where(u > 0.0, u, 1.0)
        safe_v = np.where(v > 0.0, v, 1.0)
        bpu = np.where(u > 0.0, bu / safe_u**2, 0.0)
        bpv = np.where(v > 0.0, bv / safe_v**2, 0.0)
        bppu = np.where(u > 0.0, bu * (1.0 - 2.0 * u) / safe_u**4, 0.0)
        bppv = np.where(v > 0.0, bv * (1.0 - 2.0 * v) / safe_v**4, 0.0)
        den = bu + bv
        return bu, bv, bpu, bpv, bppu, bppv, den

    def d1(self, t):
        bu, bv, bpu, bpv, _, _, den = self._derivative_pieces(t)
        num = bpu * bv + bu * bpv
        return num / den**2 / self.duration

    def d2(self, t):
        bu, bv, bpu, bpv, bppu, bppv, den = self._derivative_pieces(t)
        num1 = bpu * bv + bu * bpv
        dnum1 = bppu * bv - bu * bppv
        dden = bpu - bpv
        return (dnum1 * den - 2.0 * num1 * dden) / den**3 / self.duration**2


@dataclass(frozen=True)
class DerivativeEnvelope(TimeEnvelope):
    """Time derivative of another envelope, used for gauge-ramp bookkeeping."""

    base: TimeEnvelope = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.base is None:
            raise ValueError("DerivativeEnvelope needs a base envelope")
        super().__post_init__()

    def value(self, t):
        return self.base.d1(t)

    def d1(self, t):
        return self.base.d2(t)

    def d2(self, t):
        raise NotImplementedError(
            "third time derivative of the base envelope is not implemented"
        )


def derivative_of(env: TimeEnvelope) -> DerivativeEnvelope:
    return DerivativeEnvelope(t_start=env.t_start, t_end=env.t_end, base=env)


ENVELOPE_KINDS: dict[str, type[TimeEnvelope]] = {
    "sin_squared": SinSquaredEnvelope,
    "smooth_bump": SmoothBumpEnvelope,
    "constant": ConstantEnvelope,
    "smooth_step": SmoothStepEnvelope,
}


def make_envelope(kind: str, t_start: float, t_end: float) -> TimeEnvelope:
    try:
        cls = ENVELOPE_KINDS[kind]
    except KeyError:
        raise ConfigError(
            "envelope.kind",
            f"unknown envelope kind {kind!r}; choose from {sorted(ENVELOPE_KINDS)}",
        ) from None
    return cls(t_start=t_start, t_end=t_end)


# ---------------------------------------------------------------------------
# spatial profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianProfile:
    """``amplitude * exp(-|x - center|^2 / (2 sigma^2))`` on R^dim.

    The Fourier transform (with this package's normalization) is

        amplitude * (2 pi)^{-d} (2 pi sigma^2)^{d/2}
                  * exp(-sigma^2 |k|^2 / 2) * exp(-i k . center).
    """

    amplitude: float
    sigma: float
    center: tuple[float, ...]

    def __post_init__(self):
        if not (self.sigma > 0.0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def dim(self) -> int:
        return len(self.center)

    def scaled(self, factor: float) -> "GaussianProfile":
        return replace(self, amplitude=self.amplitude * factor)

    def gradient(self, axis: int) -> "GaussianGradientProfile":
        return GaussianGradientProfile(base=self, axis=axis)

    def _check(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if pts.shape[-1] != self.dim:
            raise ValueError(
                f"points have {pts.shape[-1]} components, profile lives on R^{self.dim}"
            )
        return pts

    def value(self, x: np.ndarray) -> np.ndarray:
        x = self._check(x)
        d2 = np.sum((x - np.asarray(self.center)) ** 2, axis=-1)
        return self.amplitude * np.exp(-d2 / (2.0 * self.sigma**2))

    def fourier(self, k: np.ndarray) -> np.ndarray:
        k = self._check(k)
        d = self.dim
        pref = self.amplitude * (2.0 * np.pi) ** (-d) * (2.0 * np.pi * self.sigma**2) ** (d / 2.0)
        k2 = np.sum(k**2, axis=-1)
        phase = np.exp(-1j * (k @ np.asarray(self.center)))
        return pref * np.exp(-0.5 * self.sigma**2 * k2) * phase

    def fourier_norm(self, p: int) -> float:
        """L^p norm of the Fourier transform, closed form (independent of center)."""
        d = self.dim
        pref = abs(self.amplitude) * (2.0 * np.pi) ** (-d) * (2.0 * np.pi * self.sigma**2) ** (d / 2.0)
        # (integral of exp(-p sigma^2 |k|^2 / 2) dk)^{1/p}
        return pref * (2.0 * np.pi / (p * self.sigma**2)) ** (d / (2.0 * p))

    def value_norm(self, p: int) -> float:
        """L^p norm of the position-space profile, closed form."""
        d = self.dim
        return abs(self.amplitude) * (2.0 * np.pi * self.sigma**2 / p) ** (d / (2.0 * p))


@dataclass(frozen=True)
class GaussianGradientProfile:
    """Axis derivative of a Gaussian profile (appears in gauge shifts)."""

    base: GaussianProfile
    axis: int

    def __post_init__(self):
        if not (0 <= self.axis < self.base.dim):
            raise ValueError(f"axis {self.axis} out of range for dim {self.base.dim}")

    @property
    def dim(self) -> int:
        return self.base.dim

    def scaled(self, factor: float) -> "GaussianGradientProfile":
        return replace(self, base=self.base.scaled(factor))

    def value(self, x: np.ndarray) -> np.ndarray:
        x = self.base._check(x)
        rel = x[..., self.axis] - self.base.center[self.axis]
        return -(rel / self.base.sigma**2) * self.base.value(x)

    def fourier(self, k: np.ndarray) -> np.ndarray:
        k = self.base._check(k)
        return 1j * k[..., self.axis] * self.base.fourier(k)


SpatialProfile = GaussianProfile | GaussianGradientProfile


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PotentialTerm:
    """One separable term ``envelope(t) * profile(x)`` on component ``mu``."""

    mu: int
    envelope: TimeEnvelope
    profile: SpatialProfile

    def __post_init__(self):
        if self.mu not in (0, 1, 2, 3):
            raise ValueError(f"mu must be in 0..3, got {self.mu}")


@dataclass(frozen=True)
class Potential:
    """Finite sum of separable terms; components are covariant (A_0, -Avec)."""

    dim: int
    terms: tuple[PotentialTerm, ...]

    def __post_init__(self):
        for term in self.terms:
            if term.profile.dim != self.dim:
                raise ValueError(
                    f"term profile lives on R^{term.profile.dim}, potential on R^{self.dim}"
                )

    def component_values(self, t: float, x: np.ndarray) -> np.ndarray:
        """Covariant components at time t, shape ``(4,) + x.shape[:-1]``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros((4,) + x.shape[:-1], dtype=float)
        for term in self.terms:
            g = float(term.envelope.value(t))
            if g != 0.0:
                out[term.mu] += g * term.profile.value(x)
        return out

    def component_fourier(self, t: float, k: np.ndarray) -> np.ndarray:
        """Fourier transforms of the components at time t, shape ``(4,) + k.shape[:-1]``."""
        k = np.asarray(k, dtype=float)
        out = np.zeros((4,) + k.shape[:-1], dtype=complex)
        for term in self.terms:
            g = float(term.envelope.value(t))
            if g != 0.0:
                out[term.mu] += g * term.profile.fourier(k)
        return out

    def component_fourier_dt(self, t: float, k: np.ndarray) -> np.ndarray:
        """Time derivative of :meth:`component_fourier` at time t."""
        k = np.asarray(k, dtype=float)
        out = np.zeros((4,) + k.shape[:-1], dtype=complex)
        for term in self.terms:
            gdot = float(term.envelope.d1(t))
            if gdot != 0.0:
                out[term.mu] += gdot * term.profile.fourier(k)
        return out

    def envelope_magnitude(self, t: float) -> float:
        """Max over terms of |envelope(t)|; zero means the field is off at t."""
        if not self.terms:
            return 0.0
        return max(abs(float(term.envelope.value(t))) for term in self.terms)


def gauge_shifted(
    pot: Potential, profile: GaussianProfile, ramp: TimeEnvelope
) -> Potential:
    """Apply the gauge shift generated by ``ramp(t) * profile(x)``.

    The shifted covariant components are ``A_0 - ramp' * profile`` and
    ``A_i - ramp * d_i profile``; the matching one-particle intertwiner is the
    position-space phase ``exp(+i e ramp(t) profile(x))``.
    """
    if profile.dim != pot.dim:
        raise ValueError("gauge profile dimension does not match the potential")
    extra: list[PotentialTerm] = [
        PotentialTerm(mu=0, envelope=derivative_of(ramp), profile=profile.scaled(-1.0))
    ]
    for axis in range(pot.dim):
        extra.append(
            PotentialTerm(
                mu=axis + 1,
                envelope=ramp,
                profile=profile.gradient(axis).scaled(-1.0),
            )
        )
    return Potential(dim=pot.dim, terms=pot.terms + tuple(extra))


# ---------------------------------------------------------------------------
# config-facing spec
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PotentialComponent:
    """Amplitude, width and center of one covariant component's Gaussian."""

    amplitude: float
    sigma: float
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (self.sigma > 0.0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != 3:
            raise ValueError("center must have exactly 3 entries")


@dataclass(frozen=True)
class PotentialSpec:
    """User-facing description: four Gaussian components sharing one envelope."""

    components: tuple[PotentialComponent, ...]
    envelope_kind: str
    t_start: float
    t_end: float

    def __post_init__(self):
        if len(self.components) != 4:
            raise ValueError(
                f"exactly 4 components (mu = 0..3) required, got {len(self.components)}"
            )
        if self.envelope_kind not in ENVELOPE_KINDS:
            raise ValueError(
                f"unknown envelope kind {self.envelope_kind!r}; "
                f"choose from {sorted(ENVELOPE_KINDS)}"
            )

    def build(self, dim: int) -> Potential:
        """Realize the potential on R^dim (dim in {1, 3})."""
        env = make_envelope(self.envelope_kind, self.t_start, self.t_end)
        terms = []
        for mu, comp in enumerate(self.components):
            if comp.amplitude == 0.0:
                continue
            if dim == 1 and any(c != 0.0 for c in comp.center[1:]):
                raise ConfigError(
                    f"potential.components[{mu}].center",
                    "in dim=1 only the first center coordinate may be nonzero",
                )
            profile = GaussianProfile(
                amplitude=comp.amplitude,
                sigma=comp.sigma,
                center=comp.center[:dim],
            )
            terms.append(PotentialTerm(mu=mu, envelope=env, profile=profile))
        return Potential(dim=dim, terms=tuple(terms))


# ---------------------------------------------------------------------------
# norm bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassAReport:
    """Time-integrated Fourier-side norms of the potential and its derivatives.

    ``entries[(mu, m, p)]`` holds ``int dt || d^m/dt^m Ahat_mu(t, .) ||_p`` for
    m in {0, 1, 2} and p in {1, 2}. ``all_finite`` is the membership verdict.
    """

    entries: dict[tuple[int, int, int], float]
    all_finite: bool
    notes: tuple[str, ...]
    quadrature_nodes: int
    quadrature_rel_err: float


def _simpson(values: np.ndarray, h: float) -> float:
    n = len(values) - 1
    if n % 2 != 0:
        raise ValueError("simpson needs an even number of intervals")
    return float(
        h / 3.0 * (values[0] + values[-1] + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-1:2].sum())
    )


def class_a_norms(pot: Potential, n_time_nodes: int = 2001) -> ClassAReport:
    """Evaluate the finite-norm-class bookkeeping for a potential.

    Requires at most one Gaussian term per component (the spatial norm then has
    a closed form); the time integrals use composite Simpson with a
    half-resolution convergence estimate.
    """
    if n_time_nodes < 5 or n_time_nodes % 2 == 0:
        raise ValueError("n_time_nodes must be odd and >= 5")

    by_mu: dict[int, list[PotentialTerm]] = {}
    for term in pot.terms:
        by_mu.setdefault(term.mu, []).append(term)

    notes: list[str] = []
    entries: dict[tuple[int, int, int], float] = {}
    worst_rel = 0.0

    for mu in range(4):
        terms = by_mu.get(mu, [])
        if len(terms) > 1:
            raise ValueError(
                f"component {mu} is a sum of {len(terms)} terms; "
                "norm bookkeeping supports one Gaussian term per component"
            )
        if not terms:
            for m in (0, 1, 2):
                for p in (1, 2):
                    entries[(mu, m, p)] = 0.0
            continue
        term = terms[0]
        if not isinstance(term.profile, GaussianProfile):
            raise ValueError(
                f"component {mu} has a non-Gaussian profile; "
                "norm bookkeeping supports plain Gaussian terms only"
            )
        env = term.envelope
        if isinstance(env, ConstantEnvelope):
            notes.append(
                f"component {mu}: constant envelope, interior time derivatives "
                "vanish; the jumps at the window edges are not represented"
            )
        ts = np.linspace(env.t_start, env.t_end, n_time_nodes)
        h = ts[1] - ts[0]
        for m, deriv in ((0, env.value), (1, env.d1), (2, env.d2)):
            gm = np.abs(np.asarray(deriv(ts), dtype=float))
            full = _simpson(gm, h)
            half = _simpson(gm[::2], 2.0 * h)
            scale = max(abs(full), abs(half), 1e-30)
            worst_rel = max(worst_rel, abs(full - half) / scale)
            for p in (1, 2):
                entries[(mu, m, p)] = full * term.profile.fourier_norm(p)

    all_finite = all(np.isfinite(v) for v in entries.values())
    return ClassAReport(
        entries=entries,
        all_finite=all_finite,
        notes=tuple(notes),
        quadrature_nodes=n_time_nodes,
        quadrature_rel_err=worst_rel,
    )
