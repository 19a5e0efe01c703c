import time
import numpy as np
from diracsea.grid import GridSpec
from diracsea.spinor import PhysicsParams
from diracsea.potentials import PotentialSpec, PotentialComponent
from diracsea.dynamics import EvolutionConfig, cutoff_scan

spec = PotentialSpec(
    components=(
        PotentialComponent(amplitude=0.0, sigma=1.0),
        PotentialComponent(amplitude=0.0, sigma=1.0),
        PotentialComponent(amplitude=1.0, sigma=10.0),
        PotentialComponent(amplitude=0.0, sigma=1.0),
    ),
    envelope_kind="sin_squared",
    t_start=0.0,
    t_end=2.0,
)
pot = spec.build(1)
evo = EvolutionConfig(t_start=0.0, t_end=1.0, steps=48, method="strang")
L = 160.0
ns = [32, 64, 128]

for mass in (0.5, 1.0, 2.0, 4.0):
    params = PhysicsParams(mass=mass, coupling=0.5)
    t0 = time.time()
    res = cutoff_scan(pot, evo, [GridSpec(1, n, L) for n in ns], params)
    raws = [r.raw_offdiag_hs for r in res.rows]
    drs = [r.dressed_offdiag_hs for r in res.rows]
    rg = [raws[i+1]/raws[i] - 1 for i in range(len(raws)-1)]
    dg = [drs[i+1]/drs[i] - 1 for i in range(len(drs)-1)]
    print(f"m={mass}: raw={['%.4f'%v for v in raws]} growth={['%+.1f%%'%(100*g) for g in rg]}")
    print(f"        dressed={['%.4f'%v for v in drs]} growth={['%+.1f%%'%(100*g) for g in dg]}  ({time.time()-t0:.1f}s)")
