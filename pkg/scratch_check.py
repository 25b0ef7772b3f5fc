"""Scratch validation of core identities (not part of the package)."""
import numpy as np

from eqnav import ins, lie, symmetry, filters
from eqnav.symmetry import SymmetryKind

rng = np.random.default_rng(7)


def rand_state(kind):
    return ins.make_state(
        lie.exp_so3(0.5 * rng.standard_normal(3)),
        rng.standard_normal(3),
        2.0 * rng.standard_normal(3),
        0.05 * rng.standard_normal(3),
        0.05 * rng.standard_normal(3),
        0.05 * rng.standard_normal(3) if kind is SymmetryKind.TG else None,
    )


def rand_input():
    return ins.InsInput(
        omega=rng.standard_normal(3),
        acc=rng.standard_normal(3) + np.array([0, 0, 9.81]),
        tau_omega=0.1 * rng.standard_normal(3),
        tau_acc=0.1 * rng.standard_normal(3),
    )


def rand_elem(kind):
    v = 0.4 * rng.standard_normal(symmetry.STATE_DIMS[kind])
    return symmetry.group_exp(kind, v)


def state_close(a, b, tol=1e-9):
    errs = [np.abs(a.R - b.R).max(), np.abs(a.v - b.v).max(), np.abs(a.p - b.p).max(),
            np.abs(a.b_omega - b.b_omega).max(), np.abs(a.b_acc - b.b_acc).max()]
    if a.b_nu is not None:
        errs.append(np.abs(a.b_nu - b.b_nu).max())
    return max(errs)


print("== group axioms / exp-log roundtrip ==")
for kind in SymmetryKind:
    spec = symmetry.spec_of(kind)
    errs = []
    for _ in range(20):
        x, y, z = rand_elem(kind), rand_elem(kind), rand_elem(kind)
        lhs = symmetry.compose(symmetry.compose(x, y), z)
        rhs = symmetry.compose(x, symmetry.compose(y, z))
        errs.append(np.abs(lhs.base - rhs.base).max())
        errs.append(max(np.abs(a - b).max() for a, b in zip(lhs.slots, rhs.slots)))
        xi = symmetry.compose(x, symmetry.inverse(x))
        errs.append(np.abs(xi.base - spec.identity()[0]).max())
        v = 0.5 * rng.standard_normal(spec.dim)
        errs.append(np.abs(symmetry.group_log(symmetry.group_exp(kind, v)) - v).max())
    print(kind, max(errs))

print("== action axioms ==")
for kind in SymmetryKind:
    errs = []
    for _ in range(20):
        x, y = rand_elem(kind), rand_elem(kind)
        xi = rand_state(kind)
        a = symmetry.act_state(kind, x, symmetry.act_state(kind, y, xi))
        b = symmetry.act_state(kind, symmetry.compose(y, x), xi)
        errs.append(state_close(a, b))
        ident = symmetry.identity_element(kind)
        errs.append(state_close(symmetry.act_state(kind, ident, xi), xi))
        xi2 = rand_state(kind)
        w = symmetry.transfer_element(kind, xi, xi2)
        errs.append(state_close(symmetry.act_state(kind, w, xi), xi2))
    print(kind, max(errs))

print("== lift property dphi_xi(Lambda) = f ==")
for kind in SymmetryKind:
    errs = []
    for _ in range(10):
        xi = rand_state(kind)
        u = rand_input()
        lam = symmetry.lift(kind, xi, u)
        s = 1e-6
        xp = symmetry.act_state(kind, symmetry.group_exp(kind, s * lam), xi)
        xm = symmetry.act_state(kind, symmetry.group_exp(kind, -s * lam), xi)
        d = ins.dynamics(xi, u)
        errs.append(np.abs((xp.R - xm.R) / (2 * s) - d.R_dot).max())
        errs.append(np.abs((xp.v - xm.v) / (2 * s) - d.v_dot).max())
        errs.append(np.abs((xp.p - xm.p) / (2 * s) - d.p_dot).max())
        errs.append(np.abs((xp.b_omega - xm.b_omega) / (2 * s) - d.b_omega_dot).max())
        errs.append(np.abs((xp.b_acc - xm.b_acc) / (2 * s) - d.b_acc_dot).max())
        if kind is SymmetryKind.TG:
            errs.append(np.abs((xp.b_nu - xm.b_nu) / (2 * s) - d.b_nu_dot).max())
    print(kind, max(errs))

print("== chart roundtrip ==")
for kind in SymmetryKind:
    errs = []
    for _ in range(20):
        eps = 0.6 * rng.standard_normal(symmetry.STATE_DIMS[kind])
        eps2 = symmetry.chart(kind, symmetry.chart_inv(kind, eps))
        errs.append(np.abs(eps - eps2).max())
    z = symmetry.chart(kind, symmetry.origin_state(kind))
    print(kind, max(errs), "chart(origin)=", np.abs(z).max())

print("== A_t^0 closed form vs FD oracle ==")
for kind in SymmetryKind:
    errs = []
    for _ in range(3):
        xhat = rand_elem(kind)
        u = rand_input()
        a_cf = filters.state_matrix(kind, xhat, u)
        a_fd = filters.state_matrix_fd(kind, xhat, u)
        rel = np.abs(a_cf - a_fd).max() / max(1.0, np.abs(a_cf).max())
        errs.append(rel)
    print(kind, max(errs))

print("== B_t identity vs full FD oracle ==")
for kind in SymmetryKind:
    xhat = rand_elem(kind)
    u = rand_input()
    b_fast = filters.input_matrix(kind, xhat, u)
    b_slow = filters.input_matrix_fd(kind, xhat, u)
    print(kind, np.abs(b_fast - b_slow).max())

print("== TG exactness of nav rows ==")
kind = SymmetryKind.TG
xhat = rand_elem(kind)
u = rand_input()
a = filters.state_matrix(kind, xhat, u)
for scale in (0.1, 0.5, 1.0):
    eps = scale * rng.standard_normal(18) / np.sqrt(18)
    eps = eps / np.linalg.norm(eps) * scale
    r = filters.error_flow(kind, xhat, u, eps) - a @ eps
    print(scale, "nav-residual", np.abs(r[:9]).max(), "bias-res", np.abs(r[9:]).max())
