"""Scratch validation: output third-order property and nav-residual slopes."""
import numpy as np

from eqnav import filters, ins, lie, symmetry
from eqnav.symmetry import SymmetryKind

rng = np.random.default_rng(3)


def rand_elem(kind, scale=0.4):
    return symmetry.group_exp(kind, scale * rng.standard_normal(symmetry.STATE_DIMS[kind]))


def rand_input():
    return ins.InsInput(
        omega=rng.standard_normal(3),
        acc=rng.standard_normal(3) + np.array([0, 0, 9.81]),
        tau_omega=0.1 * rng.standard_normal(3),
        tau_acc=0.1 * rng.standard_normal(3),
    )


print("== C* third-order output residual slopes ==")
for kind in (SymmetryKind.ES_SE23xR6, SymmetryKind.TFG, SymmetryKind.TG, SymmetryKind.SD):
    n = symmetry.STATE_DIMS[kind]
    xhat = rand_elem(kind, 0.6)
    direction = rng.standard_normal(n)
    direction /= np.linalg.norm(direction)
    norms = np.logspace(-3, -1, 9)
    resid = []
    for s in norms:
        eps = s * direction
        e = symmetry.chart_inv(kind, eps)
        xi = symmetry.act_state(kind, xhat, e)
        pos = xi.p  # noise-free measurement
        phat = symmetry.state_of(kind, xhat).p
        c = filters.output_matrix(kind, xhat, pos, mode="star")
        resid.append(np.linalg.norm((phat - pos) - c @ eps))
    slope = np.polyfit(np.log(norms), np.log(resid), 1)[0]
    print(kind, "slope", slope)

print("== nav-row residual slopes (non-TG ~2, TG exact) ==")
u = rand_input()
for kind in SymmetryKind:
    xhat = rand_elem(kind, 0.5)
    a = filters.state_matrix(kind, xhat, u)
    nrows = symmetry.nav_rows(kind)
    n = symmetry.STATE_DIMS[kind]
    direction = rng.standard_normal(n)
    direction /= np.linalg.norm(direction)
    norms = np.logspace(-2, 0, 7)
    res = []
    for s in norms:
        eps = s * direction
        r = filters.error_flow(kind, xhat, u, eps) - a @ eps
        res.append(np.linalg.norm(r[nrows]))
    res = np.array(res)
    if kind is SymmetryKind.TG:
        print(kind, "max nav residual", res.max())
    else:
        slope = np.polyfit(np.log(norms), np.log(res), 1)[0]
        print(kind, "slope", slope)

print("== update contraction ==")
for kind in SymmetryKind:
    xhat = rand_elem(kind, 0.4)
    n = symmetry.STATE_DIMS[kind]
    sigma = 0.1 * np.eye(n)
    noise = filters.NoiseConfig(q_input=np.eye(symmetry.INPUT_DIMS[kind]),
                                r_pos=0.04 * np.eye(3))
    errs = []
    for s in (1e-4, 1e-3, 1e-2):
        eps = s * rng.standard_normal(n)
        e = symmetry.chart_inv(kind, eps)
        xi = symmetry.act_state(kind, xhat, e)
        mode = "star" if kind in (SymmetryKind.ES_SE23xR6, SymmetryKind.TFG,
                                  SymmetryKind.TG, SymmetryKind.SD) else "linear"
        fs = filters.FilterState(kind, xhat, sigma)
        meas = filters.PositionMeasurement(xi.p, 0.0)
        if mode == "star":
            c = filters.output_matrix(kind, xhat, xi.p, mode="star")
        else:
            c = filters.output_matrix(kind, xhat, mode="linear")
        res = filters.update_position(fs, meas, noise, mode=mode)
        k = sigma @ c.T @ np.linalg.inv(c @ sigma @ c.T + noise.r_pos)
        eps_pred = (np.eye(n) - k @ c) @ eps
        eps_post = symmetry.chart(kind, symmetry.error_state(kind, res.state.x, xi))
        errs.append(np.abs(eps_post - eps_pred).max() / max(s**2, 1e-12))
    print(kind, "contraction 2nd-order ratio", max(errs))

print("== virtual bias update shrinks b_nu ==")
kind = SymmetryKind.TG
xhat = rand_elem(kind, 0.3)
noise = filters.NoiseConfig(q_input=np.eye(18), r_pos=0.04 * np.eye(3),
                            r_virtual=1e-4 * np.eye(3))
fs = filters.FilterState(kind, xhat, 0.05 * np.eye(18))
before = abs(np.linalg.norm(symmetry.state_of(kind, fs.x).b_nu))
res = filters.update_virtual_bias(fs, noise)
after = abs(np.linalg.norm(symmetry.state_of(kind, res.state.x).b_nu))
print("b_nu norm", before, "->", after)
