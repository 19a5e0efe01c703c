import itertools
import numpy as np
from diracsea.wedge import (
    DiracSea, WedgeVector, sea_inner, wedge_inner, polar_sea, relative_charge,
    approx_class_diagnostics, left_op, right_op, lift_rotation,
    transition_probability, hartree_fock_probability,
)
from diracsea.errors import GrayZoneError, ChargeObstructionError, RankDeficiencyError

rng = np.random.default_rng(7)

def rand_c(*shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

def rand_isometry(n, m):
    q, _ = np.linalg.qr(rand_c(n, m))
    return q

def rand_unitary(n):
    q, r = np.linalg.qr(rand_c(n, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))

# --- Cauchy-Binet oracle: antisymmetrized tensor inner product
def wedge_oracle_inner(phi, psi):
    n, m = phi.shape
    total = 0.0 + 0.0j
    for rows in itertools.combinations(range(n), m):
        a = np.linalg.det(phi[list(rows), :])
        b = np.linalg.det(psi[list(rows), :])
        total += np.conj(a) * b
    return total

N, M = 7, 3
phi = rand_c(N, M); psi = rand_c(N, M)
s_phi, s_psi = DiracSea(phi), DiracSea(psi)
lhs = sea_inner(s_phi, s_psi)
rhs = wedge_oracle_inner(phi, psi)
print("cauchy-binet rel err:", abs(lhs - rhs) / abs(rhs))
print("conj symmetry:", abs(sea_inner(s_psi, s_phi) - np.conj(lhs)))

# polar
ups, r = polar_sea(s_psi)
print("polar reconstruct:", np.linalg.norm(ups.columns @ r - psi))
print("polar isometry:", ups.isometry_defect())
print("polar hermitian:", np.linalg.norm(r - r.conj().T))
print("polar psd min eig:", np.linalg.eigvalsh(r).min())

# rank deficiency
bad = psi.copy(); bad[:, 2] = bad[:, 0] * 2.0
try:
    polar_sea(DiracSea(bad)); print("FAIL: no RankDeficiencyError")
except RankDeficiencyError as e:
    print("rank-deficiency raised ok")

# relative charge: kernel/cokernel oracle
def index_oracle(v, w, tol=1e-6):
    ov = w.columns.conj().T @ v.columns
    s = np.linalg.svd(ov, compute_uv=False)
    rank = int(np.sum(s > tol))
    ker = v.index_dim - rank
    coker = w.index_dim - rank
    return ker - coker

base = rand_isometry(12, 5)
v5 = DiracSea(base)
v7 = DiracSea(rand_isometry(12, 7))
print("charge(v7,v5):", relative_charge(v7, v5), "oracle:", index_oracle(v7, v5))
print("charge antisym:", relative_charge(v5, v7), index_oracle(v5, v7))
print("charge self:", relative_charge(v5, v5))

# gray zone: construct overlap with singular value 1e-6
u_big = rand_unitary(12)
cols = np.concatenate([base[:, :4], (1e-6 * base[:, 4:5] + np.sqrt(1 - 1e-12) * (np.eye(12) - base @ base.conj().T) @ rand_c(12, 1) / np.linalg.norm((np.eye(12) - base @ base.conj().T) @ rand_c(12,1)))], axis=1)
q2, _ = np.linalg.qr(cols)
try:
    relative_charge(DiracSea(q2), v5)
    print("gray-zone: none raised (overlap svd:", np.linalg.svd(v5.columns.conj().T @ q2, compute_uv=False), ")")
except GrayZoneError as e:
    print("gray-zone raised:", e)

# diagnostics vs dense projector oracle
w_sea = DiracSea(rand_isometry(12, 5))
rep = approx_class_diagnostics(v5, w_sea)
pv = base @ base.conj().T
pw = w_sea.columns @ w_sea.columns.conj().T
dense1 = np.linalg.norm((np.eye(12) - pw) @ pv)
dense2 = np.linalg.norm(pw @ (np.eye(12) - pv))
print("hs1:", rep.hs_v_to_wperp, dense1, abs(rep.hs_v_to_wperp - dense1))
print("hs2:", rep.hs_vperp_to_w, dense2, abs(rep.hs_vperp_to_w - dense2))
# det oracle: eigvals of compressed
c1 = base.conj().T @ pw @ base
print("det_vwv vs dense:", abs(rep.det_vwv - np.linalg.det(c1)))
print("moduli agree (charge 0):", abs(abs(rep.det_vwv) - abs(rep.det_wvw)))

# left/right ops
u = rand_unitary(12)
r_mat = rand_c(5, 5)
lv = left_op(u, v5)
print("left isometry preserved:", lv.isometry_defect())
u2 = rand_unitary(12)
ab = left_op(u @ u2, v5).columns
ba = left_op(u, left_op(u2, v5)).columns
print("left composition:", np.linalg.norm(ab - ba))
# commute exactly
lr = right_op(r_mat, left_op(u, v5)).columns
rl = left_op(u, right_op(r_mat, v5)).columns
print("left/right commute:", np.linalg.norm(lr - rl))
# amplitude law
w2 = DiracSea(rand_isometry(12, 5))
amp0 = sea_inner(w2, v5)
amp1 = sea_inner(w2, right_op(r_mat, v5))
print("right det law:", abs(amp1 - np.linalg.det(r_mat) * amp0) / abs(amp1))

# wedge vector inner: gram psd
wv = WedgeVector(((1.0 + 0.5j, v5), (-0.3, w2)))
g = wedge_inner(wv, wv)
print("wedge self-inner real+nonneg:", g)

# lift rotation
phi0 = DiracSea(rand_isometry(12, 5))
phi1 = DiracSea(rand_isometry(12, 5))
lift = lift_rotation(u, phi0, phi1)
b = lift.positive_factor
print("b hermitian:", np.linalg.norm(b - b.conj().T), "min eig:", np.linalg.eigvalsh(b).min())
ov = phi1.columns.conj().T @ u @ phi0.columns
print("polar identity:", np.linalg.norm(ov @ lift.rotation - b))
print("rotation unitary:", np.linalg.norm(lift.rotation @ lift.rotation.conj().T - np.eye(5)))

# transition probability + invariance under det-1 right mult
p = transition_probability(phi1, u, lift, phi0)
print("prob:", p, "<=1:", p <= 1 + 1e-9)
extra = rand_unitary(5)
extra = extra / np.linalg.det(extra) ** (1 / 5)
print("det of extra:", np.linalg.det(extra))
lift2 = type(lift)(rotation=lift.rotation @ extra, positive_factor=b, smallest_singular=lift.smallest_singular)
p2 = transition_probability(phi1, u, lift2, phi0)
print("det-1 invariance:", abs(p - p2))

# hartree-fock match
hf = hartree_fock_probability(u, phi0, phi1)
print("hf vs |det|^2:", hf, p, abs(hf - p))

# charge obstruction
try:
    lift_rotation(u, phi0, DiracSea(rand_isometry(12, 4)))
    print("FAIL no obstruction")
except ChargeObstructionError:
    print("charge obstruction raised ok")

# vacuum-vacuum with free evolution: prob near... identity u
lift_id = lift_rotation(np.eye(12), phi0, phi0)
print("identity prob:", transition_probability(phi0, np.eye(12), lift_id, phi0))
