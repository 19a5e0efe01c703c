import numpy as np

from diracsea.dynamics import phase_operator
from diracsea.grid import GridSpec, build_grid
from diracsea.operators import z_operator
from diracsea.potentials import (
    GaussianProfile,
    Potential,
    PotentialTerm,
    SinSquaredEnvelope,
    SmoothStepEnvelope,
    gauge_shifted,
)
from diracsea.spinor import PhysicsParams

spec = GridSpec(dim=1, n=128, length=40.0)
grid = build_grid(spec)
params = PhysicsParams(mass=1.0, coupling=0.3)
ramp = SmoothStepEnvelope(t_start=0.1, t_end=0.9)
prof = GaussianProfile(0.5, 1.5, (0.0,))
env = SinSquaredEnvelope(t_start=0.0, t_end=1.0)
pot = Potential(
    dim=1,
    terms=(
        PotentialTerm(mu=0, envelope=env, profile=GaussianProfile(0.8, 1.5, (0.3,))),
    ),
)
shifted = gauge_shifted(pot, prof, ramp)

t = 0.47
m_op = phase_operator(grid, params, prof, float(ramp.value(t))).matrix
delta = 1e-6
m_plus = phase_operator(grid, params, prof, float(ramp.value(t + delta))).matrix
m_minus = phase_operator(grid, params, prof, float(ramp.value(t - delta))).matrix
m_dot = (m_plus - m_minus) / (2 * delta)

from diracsea.operators import free_data

fd = free_data(grid, params)
n = spec.n_spinor
h0 = np.zeros((spec.n_points, 4, spec.n_points, 4), dtype=complex)
idx = np.arange(spec.n_points)
h0[idx, :, idx, :] = fd.hblocks
h0 = h0.reshape(n, n)

v1 = 1j * z_operator(pot, t, grid, params).matrix
v2 = 1j * z_operator(shifted, t, grid, params).matrix

gen_defect = (h0 + v2) @ m_op - m_op @ (h0 + v1) - 1j * m_dot

# smooth interior wavepacket at p ~ 0
p = grid.momenta[:, 0]
pack = np.exp(-(p**2) / (2 * 1.0**2))
state = np.zeros((spec.n_points, 4), dtype=complex)
state[:, 0] = pack
state = state.reshape(n)
state /= np.linalg.norm(state)

print("generator defect, full Frobenius:", np.linalg.norm(gen_defect))
print("generator defect on smooth state:", np.linalg.norm(gen_defect @ state))

# edge basis state
edge = np.zeros(n, dtype=complex)
edge[0] = 1.0  # most negative momentum, first spinor component
print("generator defect on edge state:", np.linalg.norm(gen_defect @ edge))

# per-column profile: defect column norm vs momentum
cols = np.linalg.norm(gen_defect.reshape(n, spec.n_points, 4), axis=(0, 2))
order = np.argsort(cols)[::-1]
print("worst columns (momentum, defect):")
for j in order[:5]:
    print(f"  p = {p[j]:+.3f}  {cols[j]:.4e}")
mid = spec.n_points // 2
print(f"column defect at p=0: {cols[mid]:.4e}, at edge: {cols[0]:.4e}")
