"""Programmatic property suite behind the ``check`` subcommand.

Each check is seeded and reports (name, passed, seed, detail) so a failure can
be reproduced.  ``fault`` injects deliberate defects for exercising the suite
itself (e.g. a flipped gravity sign in the closed-form state matrices).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import filters, ins, lie, symmetry
from .ins import InsInput
from .symmetry import SymmetryKind


@dataclass
class CheckResult:
    name: str
    passed: bool
    seed: int
    detail: str


def _rand_state(kind: SymmetryKind, rng: np.random.Generator) -> ins.InsState:
    return ins.make_state(
        lie.exp_so3(0.5 * rng.standard_normal(3)),
        rng.standard_normal(3),
        2.0 * rng.standard_normal(3),
        0.05 * rng.standard_normal(3),
        0.05 * rng.standard_normal(3),
        0.05 * rng.standard_normal(3) if kind is SymmetryKind.TG else None,
    )


def _rand_input(rng: np.random.Generator) -> InsInput:
    return InsInput(
        omega=rng.standard_normal(3),
        acc=rng.standard_normal(3) + np.array([0.0, 0.0, 9.81]),
        tau_omega=0.1 * rng.standard_normal(3),
        tau_acc=0.1 * rng.standard_normal(3),
    )


def _rand_elem(kind: SymmetryKind, rng, scale=0.4) -> symmetry.SymmetryElement:
    return symmetry.group_exp(
        kind, scale * rng.standard_normal(symmetry.STATE_DIMS[kind])
    )


def _state_gap(a: ins.InsState, b: ins.InsState) -> float:
    vals = [
        np.abs(a.R - b.R).max(), np.abs(a.v - b.v).max(), np.abs(a.p - b.p).max(),
        np.abs(a.b_omega - b.b_omega).max(), np.abs(a.b_acc - b.b_acc).max(),
    ]
    if a.b_nu is not None and b.b_nu is not None:
        vals.append(np.abs(a.b_nu - b.b_nu).max())
    return float(max(vals))


def _state_matrix(kind, xhat, u, fault):
    a = filters.state_matrix(kind, xhat, u)
    if fault == "flip-gravity-sign":
        gskew = lie.skew(ins.GRAVITY)
        if kind in (SymmetryKind.ES_SE23xR6, SymmetryKind.TFG, SymmetryKind.TG,
                    SymmetryKind.SD, SymmetryKind.DP):
            a = a.copy()
            a[3:6, 0:3] -= 2.0 * gskew
    return a


def check_group_axioms(seed: int, samples: int = 100) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for kind in SymmetryKind:
        for _ in range(samples):
            x, y, z = (_rand_elem(kind, rng) for _ in range(3))
            l = symmetry.compose(symmetry.compose(x, y), z)
            r = symmetry.compose(x, symmetry.compose(y, z))
            worst = max(worst, np.abs(l.base - r.base).max())
            worst = max(
                worst, max(np.abs(a - b).max() for a, b in zip(l.slots, r.slots))
            )
            xi = _rand_state(kind, rng)
            a1 = symmetry.act_state(kind, x, symmetry.act_state(kind, y, xi))
            a2 = symmetry.act_state(kind, symmetry.compose(y, x), xi)
            worst = max(worst, _state_gap(a1, a2))
    return CheckResult("group-and-action-axioms", worst < 1e-10, seed, f"max|err|={worst:.3e}")


def check_lift_property(seed: int, samples: int = 30) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    s = 1e-6
    for kind in SymmetryKind:
        for _ in range(samples):
            xi = _rand_state(kind, rng)
            u = _rand_input(rng)
            lam = symmetry.lift(kind, xi, u)
            xp = symmetry.act_state(kind, symmetry.group_exp(kind, s * lam), xi)
            xm = symmetry.act_state(kind, symmetry.group_exp(kind, -s * lam), xi)
            d = ins.dynamics(xi, u)
            worst = max(worst, np.abs((xp.R - xm.R) / (2 * s) - d.R_dot).max())
            worst = max(worst, np.abs((xp.v - xm.v) / (2 * s) - d.v_dot).max())
            worst = max(worst, np.abs((xp.p - xm.p) / (2 * s) - d.p_dot).max())
    rel = worst / 10.0  # scale of the dynamics terms
    return CheckResult("lift-property", rel < 1e-5, seed, f"max rel err={rel:.3e}")


def check_state_matrix_oracle(seed: int, fault: str | None = None) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for kind in SymmetryKind:
        for _ in range(2):
            xhat = _rand_elem(kind, rng)
            u = _rand_input(rng)
            a_cf = _state_matrix(kind, xhat, u, fault)
            a_fd = filters.state_matrix_fd(kind, xhat, u)
            rel = np.abs(a_cf - a_fd).max() / max(1.0, np.abs(a_fd).max())
            worst = max(worst, rel)
    return CheckResult("state-matrix-oracle", worst < 1e-5, seed, f"max rel err={worst:.3e}")


def check_tg_exactness(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    kind = SymmetryKind.TG
    worst = 0.0
    for _ in range(3):
        xhat = _rand_elem(kind, rng)
        u = _rand_input(rng)
        a = filters.state_matrix(kind, xhat, u)
        eps = rng.standard_normal(18)
        eps *= rng.uniform(0.1, 1.0) / np.linalg.norm(eps)
        r = filters.error_flow(kind, xhat, u, eps) - a @ eps
        worst = max(worst, np.abs(r[:9]).max() / (1.0 + np.linalg.norm(eps)))
    return CheckResult("tg-nav-exactness", worst < 1e-10, seed, f"max residual={worst:.3e}")


def check_reference_equivalence(seed: int, steps: int = 200) -> CheckResult:
    from . import sim

    noise = sim.NoiseSpec()
    spec = sim.TrajectorySpec(duration=steps / 200.0, seed=seed)
    log = sim.generate(spec, noise, run=0)
    q12 = sim.noise_config(SymmetryKind.SO3xR12, noise).q_input
    r_pos = noise.pos_sigma**2 * np.eye(3)
    sigma0 = sim.sigma0_for_kind(SymmetryKind.SO3xR12, noise)
    dt = 1.0 / spec.imu_rate

    fs = filters.filter_init(SymmetryKind.SO3xR12, sigma0)
    mekf = filters.MekfReference.initial(sigma0)
    cfg = sim.noise_config(SymmetryKind.SO3xR12, noise)
    gap = 0.0
    g_idx = 0
    for k in range(len(log.imu_t)):
        u = InsInput(omega=log.imu_omega[k], acc=log.imu_acc[k])
        fs = filters.propagate(fs, u, dt, cfg)
        mekf.propagate(u, dt, q12)
        if g_idx < len(log.gnss_t) and abs(fs.t - log.gnss_t[g_idx]) < 0.5 * dt:
            fs = filters.update_position(
                fs, filters.PositionMeasurement(log.gnss_pos[g_idx], fs.t), cfg,
                mode="linear",
            ).state
            mekf.update_position(log.gnss_pos[g_idx], r_pos)
            g_idx += 1
        est = filters.state_estimate(fs)
        gap = max(gap, np.abs(est.R - mekf.R).max(), np.abs(est.p - mekf.p).max(),
                  np.abs(fs.sigma - mekf.sigma).max())
    return CheckResult("mekf-equivalence", gap < 1e-8, seed, f"max gap={gap:.3e}")


def check_tfg_matrix_equivalence(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    kind = SymmetryKind.TFG
    worst = 0.0
    for _ in range(5):
        xhat = _rand_elem(kind, rng)
        u = _rand_input(rng)
        a = filters.state_matrix(kind, xhat, u)
        xihat = symmetry.state_of(kind, xhat)
        spin = lie.skew(xihat.R @ (u.omega - xihat.b_omega))
        b = a.copy()
        b[9:12, 9:12] = spin
        b[12:15, 12:15] = spin
        b[3:6, 9:12] = lie.skew(xihat.v)
        b[6:9, 9:12] = lie.skew(xihat.p)
        worst = max(worst, np.abs(a - b).max())
    return CheckResult("tfg-matrix-equivalence", worst < 1e-12, seed, f"max gap={worst:.3e}")


def run_checks(seed: int = 0, fault: str | None = None) -> list[CheckResult]:
    return [
        check_group_axioms(seed),
        check_lift_property(seed + 1),
        check_state_matrix_oracle(seed + 2, fault),
        check_tg_exactness(seed + 3),
        check_reference_equivalence(seed + 4),
        check_tfg_matrix_equivalence(seed + 5),
    ]
