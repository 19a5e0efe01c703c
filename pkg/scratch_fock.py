import numpy as np
from diracsea.fock import (
    TruncationWindow, FockVector, basis_state, vacuum_state, hole_particle,
    charge_of_mask, charge_table, car_create, car_annihilate,
)

rng = np.random.default_rng(11)
win = TruncationWindow(holes_below=3, particles_above=3)  # modes -3..2, 6 modes
T = win.n_modes
D = win.dimension

# Jordan-Wigner oracle matrices (bit T-1 = first kron factor)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)
SP = np.array([[0, 0], [1, 0]], dtype=complex)  # creation: |empty> -> |occ>

def jw_create(bit):
    factors = []
    for b in range(T - 1, -1, -1):
        if b == bit:
            factors.append(SP)
        elif b < bit:
            factors.append(Z)
        else:
            factors.append(I2)
    m = factors[0]
    for f in factors[1:]:
        m = np.kron(m, f)
    return m

create_mats = [jw_create(b) for b in range(T)]

def oracle_create(chi, amps):
    m = sum(c * mat for c, mat in zip(chi, create_mats))
    return m @ amps

# compare car_create to oracle on random states/chis
for trial in range(5):
    chi = rng.standard_normal(T) + 1j * rng.standard_normal(T)
    amps = rng.standard_normal(D) + 1j * rng.standard_normal(D)
    v = FockVector(win, amps)
    mine = car_create(win, chi, v).amplitudes
    theirs = oracle_create(chi, amps)
    print("create match:", np.max(np.abs(mine - theirs)))
    # annihilate = adjoint
    mineA = car_annihilate(win, chi, v).amplitudes
    madj = sum(c * mat for c, mat in zip(chi, create_mats)).conj().T @ amps
    print("annihilate match:", np.max(np.abs(mineA - madj)))

# CAR anticommutators via dense matrices built from my ops
def op_matrix(fn, chi):
    cols = []
    for k in range(D):
        e = np.zeros(D, dtype=complex); e[k] = 1.0
        cols.append(fn(win, chi, FockVector(win, e)).amplitudes)
    return np.array(cols).T

chi = rng.standard_normal(T) + 1j * rng.standard_normal(T)
eta = rng.standard_normal(T) + 1j * rng.standard_normal(T)
A_c = op_matrix(car_create, chi)
A_a_eta = op_matrix(car_annihilate, eta)
A_c_eta = op_matrix(car_create, eta)
anti = A_a_eta @ A_c + A_c @ A_a_eta
print("CAR {a_eta, a*_chi} = <eta,chi>:", np.max(np.abs(anti - np.vdot(eta, chi) * np.eye(D))))
anti2 = A_c @ A_c_eta + A_c_eta @ A_c
print("CAR {a*,a*} = 0:", np.max(np.abs(anti2)))
print("op norm of a*_chi == |chi|:", np.linalg.norm(A_c, 2), np.linalg.norm(chi))

# charge shifts
ct = charge_table(win)
vac = vacuum_state(win)
print("vacuum charge:", ct[win.vacuum_mask])
created = car_create(win, chi, vac)
support = np.nonzero(np.abs(created.amplitudes) > 1e-14)[0]
print("charges after create:", sorted(set(int(ct[s]) for s in support)))
annih = car_annihilate(win, chi, vac)
support = np.nonzero(np.abs(annih.amplitudes) > 1e-14)[0]
print("charges after annihilate:", sorted(set(int(ct[s]) for s in support)))

# hole_particle
hp = hole_particle(win, [-3, -1, 0, 2])
print("particles:", hp.particles, "holes:", hp.holes, "charge:", hp.charge)
print("charge_of_mask consistency:", charge_of_mask(win, (1 << win.bit_of(-3)) | (1 << win.bit_of(-1)) | (1 << win.bit_of(0)) | (1 << win.bit_of(2))))

# ascending order sign: a*_{-1} a*_0 vac? Build basis state occupied {-3,-2,-1,0} two ways
e0 = np.zeros(T); e0[win.bit_of(0)] = 1.0
s1 = car_create(win, e0, vac)
bs = basis_state(win, [-3, -2, -1, 0])
print("create mode 0 on vacuum == +basis state:", np.max(np.abs(s1.amplitudes - bs.amplitudes)))
# creating mode -3 on a state missing -3 but having -2,-1: sign +1 (no lower modes)
part = basis_state(win, [-2, -1])
em3 = np.zeros(T); em3[win.bit_of(-3)] = 1.0
s2 = car_create(win, em3, part)
print("create lowest mode sign +1:", np.max(np.abs(s2.amplitudes - basis_state(win, [-3, -2, -1]).amplitudes)))
# creating mode -1 below occupied 0,1: sign (+1)^... occ below -1 in {0,1}: none -> +;
# creating mode 1 on {-3,0}: occ below 1: two -> +1
s3 = car_create(win, np.eye(T)[win.bit_of(1)], basis_state(win, [-3, 0]))
print("sign parity even:", np.max(np.abs(s3.amplitudes - basis_state(win, [-3, 0, 1]).amplitudes)))
# creating mode 0 on {-3, 1}: occ below 0: one -> sign -1
s4 = car_create(win, np.eye(T)[win.bit_of(0)], basis_state(win, [-3, 1]))
print("sign parity odd:", np.max(np.abs(s4.amplitudes + basis_state(win, [-3, 0, 1]).amplitudes)))

# window guard
try:
    TruncationWindow(holes_below=15, particles_above=15)
    print("FAIL no guard")
except ValueError as e:
    print("mode cap raised ok")

# wrong-length chi
try:
    car_create(win, np.ones(T + 2), vac)
    print("FAIL no span error")
except ValueError:
    print("span error raised ok")
