import numpy as np

from diracsea.dynamics import EvolutionConfig, gauge_covariance_check
from diracsea.grid import GridSpec, build_grid
from diracsea.potentials import (
    GaussianProfile,
    Potential,
    PotentialTerm,
    SinSquaredEnvelope,
    SmoothStepEnvelope,
)
from diracsea.spinor import PhysicsParams

spec = GridSpec(dim=1, n=128, length=40.0)
grid = build_grid(spec)
print("cutoff:", spec.cutoff, "dp:", spec.momentum_spacing)

params = PhysicsParams(mass=1.0, coupling=0.3)
ramp = SmoothStepEnvelope(t_start=0.1, t_end=0.9)
prof = GaussianProfile(0.5, 1.5, (0.0,))

# pure gauge: zero background potential
env = SinSquaredEnvelope(t_start=0.0, t_end=1.0)
pot0 = Potential(dim=1, terms=(PotentialTerm(mu=0, envelope=env, profile=GaussianProfile(0.0, 1.0, (0.0,))),))

for steps in (32, 64, 128, 256, 512):
    g = gauge_covariance_check(pot0, prof, ramp, EvolutionConfig(0.0, 1.0, steps), grid, params)
    print(f"pure gauge steps={steps}: defect={g.defect:.6e} rel={g.relative_defect:.6e}")

# with a background potential
pot = Potential(
    dim=1,
    terms=(
        PotentialTerm(mu=0, envelope=env, profile=GaussianProfile(0.8, 1.5, (0.3,))),
        PotentialTerm(mu=1, envelope=env, profile=GaussianProfile(0.4, 1.2, (-0.5,))),
    ),
)
for steps in (64, 128, 256, 512):
    g = gauge_covariance_check(pot, prof, ramp, EvolutionConfig(0.0, 1.0, steps), grid, params)
    print(f"with pot  steps={steps}: defect={g.defect:.6e} rel={g.relative_defect:.6e}")
