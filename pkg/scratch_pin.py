# Scratch: pin sign conventions against a dense brute-force oracle.
# Not part of the deliverable.
import numpy as np
import scipy.linalg

from quditcorr import (
    HermitianObservable,
    QuditState,
    RegisterShape,
    build_perturbed,
    build_xxz,
    evolve,
    make_propagator,
    measure_dynamical_correlator,
    spin_matrix,
)
from quditcorr.register import expectation as expect_op

# ---- independent dense oracle -------------------------------------------
def kron_chain(mats):
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def dense_xxz(n, jxy, jz):
    sx = spin_matrix(1, "x").matrix
    sy = spin_matrix(1, "y").matrix
    sz = spin_matrix(1, "z").matrix
    eye = np.eye(3)
    H = np.zeros((3**n, 3**n), dtype=complex)
    for i in range(n - 1):
        for a, b, c in ((sx, sx, jxy), (sy, sy, jxy), (sz, sz, jz)):
            ops = [eye] * n
            ops[i] = a
            ops[i + 1] = b
            H += c * kron_chain(ops)
    return H


def site_op(n, i, local):
    ops = [np.eye(3, dtype=complex)] * n
    ops[i] = local
    return kron_chain(ops)


def neel_sup(n):
    amp = np.zeros(3**n, dtype=complex)
    idx_a = 0
    idx_b = 0
    for k in range(n):
        idx_a = idx_a * 3 + (0 if k % 2 == 0 else 2)
        idx_b = idx_b * 3 + (2 if k % 2 == 0 else 0)
    amp[idx_a] = amp[idx_b] = 1 / np.sqrt(2)
    return amp


def oracle_correlators(H, psi0, A, B, t1, t2):
    U1 = scipy.linalg.expm(-1j * H * t1)
    U2 = scipy.linalg.expm(-1j * H * t2)
    At = U1.conj().T @ A @ U1
    Bt = U2.conj().T @ B @ U2
    anti = psi0.conj() @ (At @ Bt + Bt @ At) @ psi0
    comm = 1j * (psi0.conj() @ (At @ Bt - Bt @ At) @ psi0)
    return anti.real, comm.real, anti, comm


n = 3
jxy, jz = 1.0, 0.5
t1, t2 = 0.3, 0.9
Hd = dense_xxz(n, jxy, jz)
psi = neel_sup(n)
sz = spin_matrix(1, "z").matrix
A = site_op(n, 0, sz)  # site 1 (1-based)
B = site_op(n, 1, sz)  # site 2
cp, cm, cp_full, cm_full = oracle_correlators(Hd, psi, A, B, t1, t2)
print(f"oracle: C+ = {cp:+.10f} (imag {cp_full.imag:.2e})  C- = {cm:+.10f} (imag {cm_full.imag:.2e})")

# ---- protocol -------------------------------------------------------------
h = build_xxz(n, jxy, jz)
prop = make_propagator(h)
psi0 = QuditState(RegisterShape((3,) * n), neel_sup(n))
obs_a = HermitianObservable(spin_matrix(1, "z").on(0))
obs_b = HermitianObservable(spin_matrix(1, "z").on(1))
est_p, est_m = measure_dynamical_correlator(obs_a, obs_b, t1, t2, psi0, prop)
print(f"circuit: C+ = {est_p.value:+.10f}  C- = {est_m.value:+.10f}")
print(f"  -> C+ diff {abs(est_p.value - cp):.2e}, C- diff {abs(est_m.value - cm):.2e}")
print(f"  -> C- com  {abs(est_m.value + cm):.2e}  (would indicate a flipped sign)")

# ---- linear response orientation -----------------------------------------
pulse_area = 1e-3
lam = 1e-4
dt = pulse_area / jxy


def lr_quotient(kind, probe, read):
    hp = build_perturbed(h, probe, lam, kind)
    p0 = make_propagator(h)
    pp = make_propagator(hp)
    s = evolve(p0, psi0, t1)
    s = evolve(pp, s, dt)
    s = evolve(p0, s, t2 - t1 - dt)
    sz_read = spin_matrix(1, "z").on(read)
    e_p = expect_op(s, sz_read).real / s.squared_norm
    u = evolve(p0, psi0, t2)
    e_u = expect_op(u, sz_read).real / u.squared_norm
    return (e_p - e_u) / (lam * pulse_area)


for kind, target, name in (("hermitian", cm, "C-"), ("non_hermitian", cp, "C+")):
    for probe, read in ((0, 1), (1, 0)):
        q = lr_quotient(kind, probe, read)
        print(
            f"LR {kind:13s} probe={probe} read={read}: quotient {q:+.8f} "
            f"target {name} {target:+.8f}  ratio {q/target:+.4f}"
        )
