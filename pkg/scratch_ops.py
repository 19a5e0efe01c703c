import numpy as np

from diracsea.grid import GridSpec, build_grid
from diracsea.operators import (
    fourier_table,
    hs_norm,
    parity_split,
    q_operator,
    q_prime_operator,
    z_operator,
    z_operator_matrix_free,
)
from diracsea.potentials import GaussianProfile, Potential, PotentialTerm, SinSquaredEnvelope
from diracsea.spinor import PhysicsParams

rng = np.random.default_rng(3)
params = PhysicsParams(mass=1.0, coupling=0.8)
env = SinSquaredEnvelope(t_start=0.0, t_end=1.5)

for dim, n, length in ((1, 32, 20.0), (3, 8, 10.0)):
    spec = GridSpec(dim=dim, n=n, length=length)
    grid = build_grid(spec)
    center = (0.4,) + (0.0,) * (dim - 1)
    center2 = (-0.6,) + (0.3,) * (dim - 1)
    pot = Potential(
        dim=dim,
        terms=(
            PotentialTerm(mu=0, envelope=env, profile=GaussianProfile(1.3, 1.2, center)),
            PotentialTerm(mu=1, envelope=env, profile=GaussianProfile(0.7, 0.9, center2)),
        ),
    )
    zd = z_operator(pot, 0.6, grid, params)
    zmf = z_operator_matrix_free(pot, 0.6, grid, params)
    x = rng.standard_normal((spec.n_spinor, 3)) + 1j * rng.standard_normal((spec.n_spinor, 3))
    d1 = np.linalg.norm(zd.matrix @ x - zmf.apply(x)) / np.linalg.norm(zd.matrix @ x)
    d2 = np.linalg.norm(zd.adjoint().matrix @ x - zmf.apply_adjoint(x)) / np.linalg.norm(x)
    herm = 1j * zd.matrix
    print(f"dim={dim}: dense-vs-mf {d1:.3e}  adjoint {d2:.3e}  iZ herm {np.abs(herm - herm.conj().T).max():.3e}")

    q = q_operator(pot, 0.6, grid, params)
    ev, odd = parity_split(q, params)
    print(f"  Q skew {np.abs(q.matrix + q.matrix.conj().T).max():.3e}  Q even part {np.linalg.norm(ev.matrix):.3e}")
    qp = q_prime_operator(pot, 0.6, grid, params)
    # separable envelope: Q' = (g'/g) Q
    g = env.value(0.6)
    gp = env.d1(0.6)
    print(f"  Q' vs (g'/g)Q {np.linalg.norm(qp.matrix - (gp / g) * q.matrix):.3e}")

    dense_norm = hs_norm(zd, params)
    stoch = hs_norm(zmf, params, n_probes=96, seed=1)
    pull = abs(stoch.value - dense_norm.value) / max(stoch.stderr, 1e-300)
    print(f"  hs dense {dense_norm.value:.6f} stoch {stoch.value:.6f} +- {stoch.stderr:.4f} ({pull:.2f} se)")

    # table edge symmetry: transform of the table is real
    tab = fourier_table(pot, 0.6, grid)
    aeff = grid.inverse_fourier(tab)
    print(f"  interpolant imag residue {np.abs(aeff.imag).max():.3e}")
