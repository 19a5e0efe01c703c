import numpy as np

from diracsea.dynamics import (
    EvolutionConfig,
    born_series,
    cutoff_scan,
    dressed_propagator,
    evolve,
    free_propagator,
    gauge_covariance_check,
    gronwall_fixed_point,
    offdiag_hs,
    pair_creation_probability,
    partial_integration_residual,
)
from diracsea.grid import GridSpec, build_grid
from diracsea.operators import unitarity_defect
from diracsea.potentials import (
    GaussianProfile,
    Potential,
    PotentialTerm,
    SinSquaredEnvelope,
    SmoothStepEnvelope,
)
from diracsea.spinor import PhysicsParams

rng = np.random.default_rng(7)

params = PhysicsParams(mass=1.0, coupling=0.8)
spec = GridSpec(dim=1, n=32, length=20.0)
grid = build_grid(spec)
env = SinSquaredEnvelope(t_start=0.0, t_end=1.5)
pot = Potential(
    dim=1,
    terms=(
        PotentialTerm(mu=0, envelope=env, profile=GaussianProfile(1.3, 1.2, (0.4,))),
        PotentialTerm(mu=1, envelope=env, profile=GaussianProfile(0.7, 0.9, (-0.8,))),
    ),
)
cfg = EvolutionConfig(t_start=0.0, t_end=1.5, steps=96, method="strang")

# 1. free propagator sanity: group property and unitarity
f1 = free_propagator(grid, params, 0.7, 0.0)
f2 = free_propagator(grid, params, 1.5, 0.7)
f3 = free_propagator(grid, params, 1.5, 0.0)
print("free group property:", np.linalg.norm(f2.matrix @ f1.matrix - f3.matrix))
print("free unitarity:", unitarity_defect(f1))

# 2. strang dense vs matrix-free
u_dense = evolve(pot, cfg, grid, params, representation="dense")
u_mf = evolve(pot, cfg, grid, params, representation="matrix_free")
x = rng.standard_normal(spec.n_spinor) + 1j * rng.standard_normal(spec.n_spinor)
print("strang dense vs mf:", np.linalg.norm(u_dense.matrix @ x - u_mf.apply(x)))
print("strang unitarity:", unitarity_defect(u_dense))
adj = u_mf.apply_adjoint(u_mf.apply(x))
print("strang U*U x = x:", np.linalg.norm(adj - x))

# 3. cross-method agreement and self-convergence
u_mid = evolve(
    pot,
    EvolutionConfig(0.0, 1.5, 96, method="dense_midpoint"),
    grid,
    params,
)
print("strang vs midpoint (96 steps):", np.linalg.norm(u_dense.matrix - u_mid.matrix))
diffs = []
for steps in (24, 48, 96):
    us = evolve(pot, EvolutionConfig(0.0, 1.5, steps), grid, params)
    um = evolve(
        pot, EvolutionConfig(0.0, 1.5, steps, method="dense_midpoint"), grid, params
    )
    diffs.append(np.linalg.norm(us.matrix - um.matrix))
print("strang-midpoint diffs:", diffs, "ratios:", [diffs[i] / diffs[i + 1] for i in range(2)])

u_fine = evolve(pot, EvolutionConfig(0.0, 1.5, 768, method="dense_midpoint"), grid, params)
errs = []
for steps in (48, 96, 192):
    us = evolve(pot, EvolutionConfig(0.0, 1.5, steps), grid, params)
    errs.append(np.linalg.norm(us.matrix - u_fine.matrix))
print("strang vs fine-midpoint errors:", errs, "ratios:", [errs[i] / errs[i + 1] for i in range(2)])

# 4. born series vs midpoint at weak coupling
weak = PhysicsParams(mass=1.0, coupling=0.1)
u_ref = evolve(pot, EvolutionConfig(0.0, 1.5, 384, method="dense_midpoint"), grid, weak)
for order in (0, 1, 2, 3, 4):
    ub = born_series(pot, EvolutionConfig(0.0, 1.5, 8, born_nodes=129), grid, weak, order=order)
    print(f"born order {order} vs midpoint:", np.linalg.norm(ub.matrix - u_ref.matrix))

# 5. dressing and pair probability
dp = dressed_propagator(pot, cfg, grid, params, raw=u_dense)
print("raw offdiag:", offdiag_hs(u_dense, params), " dressed offdiag:", offdiag_hs(dp.dressed, params))
print("pair probability:", pair_creation_probability(u_dense, params))
print("dressed unitarity:", unitarity_defect(dp.dressed))

# 6. partial integration residual: O(h^2)
r1 = partial_integration_residual(pot, 0.2, 1.3, grid, params, nodes=17)
r2 = partial_integration_residual(pot, 0.2, 1.3, grid, params, nodes=33)
r3 = partial_integration_residual(pot, 0.2, 1.3, grid, params, nodes=65)
print("partial-integration residuals:", r1.residual, r2.residual, r3.residual)
print("ratios:", r1.residual / r2.residual, r2.residual / r3.residual)
print("lhs norm:", r1.lhs_norm)

# 7. gronwall fixed point
rep = gronwall_fixed_point(pot, EvolutionConfig(0.0, 1.5, 128, method="dense_midpoint"), grid, params, n_iterations=9, nodes=33)
print("gronwall diffs:", [f"{d:.3e}" for d in rep.iterate_diffs])
print("gronwall final vs direct:", rep.final_vs_direct, " direct norm:", rep.direct_norm, " |F|_1:", rep.f_l1_norm)
rep2 = gronwall_fixed_point(pot, EvolutionConfig(0.0, 1.5, 128, method="dense_midpoint"), grid, params, n_iterations=9, nodes=65)
print("gronwall final vs direct (65 nodes):", rep2.final_vs_direct, " ratio:", rep.final_vs_direct / rep2.final_vs_direct)

# 8. gauge covariance
ramp = SmoothStepEnvelope(t_start=0.3, t_end=1.2)
prof = GaussianProfile(0.9, 1.1, (0.2,))
for steps in (32, 64, 128):
    g = gauge_covariance_check(
        pot, prof, ramp, EvolutionConfig(0.0, 1.5, steps), grid, params
    )
    print(f"gauge defect steps={steps}:", g.defect, " rel:", g.relative_defect)

# 9. cutoff scan smoke
scan = cutoff_scan(
    pot,
    EvolutionConfig(0.0, 1.5, 48),
    [GridSpec(1, 16, 20.0), GridSpec(1, 24, 20.0), GridSpec(1, 32, 20.0)],
    params,
    threads=2,
)
for row in scan.rows:
    print(f"n={row.cutoff_n} raw={row.raw_offdiag_hs:.6f} dressed={row.dressed_offdiag_hs:.6f} pair={row.pair_probability:.6f} defect={row.unitarity_defect:.2e}")
print("classifications:", scan.raw_classification, scan.dressed_classification)

# determinism across thread counts
scan1 = cutoff_scan(pot, EvolutionConfig(0.0, 1.5, 48), [GridSpec(1, 16, 20.0), GridSpec(1, 24, 20.0)], params, threads=1)
vals1 = [(r.raw_offdiag_hs, r.dressed_offdiag_hs, r.pair_probability) for r in scan1.rows]
vals2 = [(r.raw_offdiag_hs, r.dressed_offdiag_hs, r.pair_probability) for r in scan.rows[:2]]
print("thread determinism:", vals1 == vals2)
