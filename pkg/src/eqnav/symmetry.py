"""Six symmetry groups for the biased INS problem behind one interface.

Each kind provides the group calculus (through lie.CompositeSpec), the state
action phi, the input action psi where one exists, the lift into the symmetry
algebra, and the local error chart (normal coordinates around the origin
state).  Coordinate ordering per kind:

  SO3xR12 / ES_SE23xR6 / TFG / SD : (eps_R, eps_v, eps_p, eps_bw, eps_ba)
  TG                              : (..., eps_bw, eps_ba, eps_bnu), dim 18
  DP                              : (eps_R, eps_v, eps_bw, eps_ba, eps_p)
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import ins, lie
from .errors import (
    AngleNearPiError,
    ChartDomainError,
    KindMismatchError,
    UnsupportedKindError,
)
from .ins import Gravity, InsInput, InsState


class SymmetryKind(Enum):
    SO3xR12 = "so3xr12"      # direct product; recovers the MEKF
    ES_SE23xR6 = "es_se23xr6"  # extended pose x bias; recovers the Imperfect-IEKF
    TFG = "tfg"              # two-frame group; recovers the TFG-IEKF
    TG = "tg"                # tangent group with virtual velocity bias
    DP = "dp"                # homogeneous-Galilean semi-direct, direct position
    SD = "sd"                # extended pose acting on a 6-dim bias algebra


_SPECS: dict[SymmetryKind, lie.CompositeSpec] = {
    SymmetryKind.SO3xR12: lie.CompositeSpec("SO3", [lie.SlotAction(12, "direct")]),
    SymmetryKind.ES_SE23xR6: lie.CompositeSpec("SE23", [lie.SlotAction(6, "direct")]),
    SymmetryKind.TFG: lie.CompositeSpec("SE23", [lie.SlotAction(6, "star")]),
    SymmetryKind.TG: lie.CompositeSpec("SE23", [lie.SlotAction(9, "adbase")]),
    SymmetryKind.DP: lie.CompositeSpec(
        "HG3", [lie.SlotAction(6, "adbase"), lie.SlotAction(3, "direct")]
    ),
    SymmetryKind.SD: lie.CompositeSpec("SE23", [lie.SlotAction(6, "adhg")]),
}

STATE_DIMS = {k: _SPECS[k].dim for k in SymmetryKind}

INPUT_DIMS = {
    SymmetryKind.SO3xR12: 12,
    SymmetryKind.ES_SE23xR6: 12,
    SymmetryKind.TFG: 12,
    SymmetryKind.TG: 18,
    SymmetryKind.DP: 15,
    SymmetryKind.SD: 12,
}

KINDS_WITH_INPUT_ACTION = (SymmetryKind.TG, SymmetryKind.DP)

# Filter names commonly attached to each symmetry; used for reporting.
FILTER_NAMES = {
    SymmetryKind.SO3xR12: "MEKF",
    SymmetryKind.ES_SE23xR6: "IEKF",
    SymmetryKind.TFG: "TFG-IEKF",
    SymmetryKind.TG: "TG-EqF",
    SymmetryKind.DP: "DP-EqF",
    SymmetryKind.SD: "SD-EqF",
}


@dataclass(frozen=True)
class SymmetryElement:
    """Element of one of the six symmetry groups.

    ``base`` is the matrix of the base group (SO(3), HG(3) or SE2(3));
    ``slots`` holds the vector payloads in the kind's slot order.
    """

    kind: SymmetryKind
    base: np.ndarray
    slots: tuple[np.ndarray, ...]

    def pair(self):
        return self.base, list(self.slots)


def spec_of(kind: SymmetryKind) -> lie.CompositeSpec:
    return _SPECS[kind]


def _element(kind: SymmetryKind, pair) -> SymmetryElement:
    c, slots = pair
    return SymmetryElement(kind, c, tuple(np.asarray(s, dtype=float) for s in slots))


def identity_element(kind: SymmetryKind) -> SymmetryElement:
    return _element(kind, _SPECS[kind].identity())


def compose(x: SymmetryElement, y: SymmetryElement) -> SymmetryElement:
    if x.kind is not y.kind:
        raise KindMismatchError(f"cannot compose {x.kind} with {y.kind}")
    return _element(x.kind, _SPECS[x.kind].compose(x.pair(), y.pair()))


def inverse(x: SymmetryElement) -> SymmetryElement:
    return _element(x.kind, _SPECS[x.kind].inverse(x.pair()))


def group_exp(kind: SymmetryKind, v: np.ndarray) -> SymmetryElement:
    v = np.asarray(v, dtype=float)
    if v.shape != (STATE_DIMS[kind],):
        raise KindMismatchError(
            f"{kind} expects a {STATE_DIMS[kind]}-vector, got {v.shape}"
        )
    return _element(kind, _SPECS[kind].exp(v))


def group_log(x: SymmetryElement) -> np.ndarray:
    return _SPECS[x.kind].log(x.pair())


def adjoint_matrix(x: SymmetryElement) -> np.ndarray:
    return _SPECS[x.kind].adjoint(x.pair())


def adjoint_matrix_algebra(kind: SymmetryKind, v: np.ndarray) -> np.ndarray:
    return _SPECS[kind].adjoint_algebra(v)


def origin_state(kind: SymmetryKind) -> InsState:
    return ins.origin_state(with_virtual=kind is SymmetryKind.TG)


def _check_state(kind: SymmetryKind, xi: InsState) -> None:
    if (kind is SymmetryKind.TG) != xi.has_virtual:
        raise KindMismatchError(
            f"state virtual-bias slot inconsistent with kind {kind}"
        )


def _hg3(r: np.ndarray, v: np.ndarray) -> np.ndarray:
    m = np.eye(4)
    m[:3, :3] = r
    m[:3, 3] = v
    return m


def _star6(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.concatenate([a @ x[:3], a @ x[3:6]])


def _bias6(xi: InsState) -> np.ndarray:
    return np.concatenate([xi.b_omega, xi.b_acc])


def _bias9(xi: InsState) -> np.ndarray:
    return np.concatenate([xi.b_omega, xi.b_acc, xi.b_nu])


# ---------------------------------------------------------------------------
# State action phi (right action, per kind)
# ---------------------------------------------------------------------------

def act_state(kind: SymmetryKind, x: SymmetryElement, xi: InsState) -> InsState:
    if x.kind is not kind:
        raise KindMismatchError(f"element kind {x.kind} does not match {kind}")
    _check_state(kind, xi)
    if kind is SymmetryKind.SO3xR12:
        g = x.slots[0]
        return ins.make_state(
            xi.R @ x.base,
            xi.v + g[0:3],
            xi.p + g[3:6],
            xi.b_omega + g[6:9],
            xi.b_acc + g[9:12],
        )
    if kind is SymmetryKind.ES_SE23xR6:
        t = ins.se23_matrix(xi) @ x.base
        b = _bias6(xi) + x.slots[0]
        return ins.state_from_se23(t, b[:3], b[3:6])
    if kind is SymmetryKind.TFG:
        t = ins.se23_matrix(xi) @ x.base
        b = _star6(x.base[:3, :3].T, _bias6(xi) - x.slots[0])
        return ins.state_from_se23(t, b[:3], b[3:6])
    if kind is SymmetryKind.TG:
        t = ins.se23_matrix(xi) @ x.base
        adinv = lie.adjoint_group(lie.inv_group(x.base, "SE23"), "SE23")
        b = adinv @ (_bias9(xi) - x.slots[0])
        return ins.state_from_se23(t, b[:3], b[3:6], b[6:9])
    if kind is SymmetryKind.DP:
        pb = _hg3(xi.R, xi.v) @ x.base
        adinv = lie.adjoint_group(lie.inv_group(x.base, "HG3"), "HG3")
        b = adinv @ (_bias6(xi) - x.slots[0])
        return ins.make_state(
            pb[:3, :3], pb[:3, 3], xi.p + x.slots[1], b[:3], b[3:6]
        )
    if kind is SymmetryKind.SD:
        t = ins.se23_matrix(xi) @ x.base
        bg = lie.pi_map_group(x.base)
        adinv = lie.adjoint_group(lie.inv_group(bg, "HG3"), "HG3")
        b = adinv @ (_bias6(xi) - x.slots[0])
        return ins.state_from_se23(t, b[:3], b[3:6])
    raise UnsupportedKindError(str(kind))


def origin_inverse(kind: SymmetryKind, e: InsState) -> SymmetryElement:
    """Solve phi(X, origin) = e for X; inverse of the origin projection."""
    _check_state(kind, e)
    if kind is SymmetryKind.SO3xR12:
        return SymmetryElement(
            kind, e.R.copy(), (np.concatenate([e.v, e.p, e.b_omega, e.b_acc]),)
        )
    t = ins.se23_matrix(e)
    if kind is SymmetryKind.ES_SE23xR6:
        return SymmetryElement(kind, t, (_bias6(e),))
    if kind is SymmetryKind.TFG:
        return SymmetryElement(kind, t, (-_star6(t[:3, :3], _bias6(e)),))
    if kind is SymmetryKind.TG:
        gamma = -(lie.adjoint_group(t, "SE23") @ _bias9(e))
        return SymmetryElement(kind, t, (gamma,))
    if kind is SymmetryKind.DP:
        pb = _hg3(e.R, e.v)
        beta = -(lie.adjoint_group(pb, "HG3") @ _bias6(e))
        return SymmetryElement(kind, pb, (beta, e.p.copy()))
    if kind is SymmetryKind.SD:
        gamma = -(lie.adjoint_group(lie.pi_map_group(t), "HG3") @ _bias6(e))
        return SymmetryElement(kind, t, (gamma,))
    raise UnsupportedKindError(str(kind))


def state_of(kind: SymmetryKind, x: SymmetryElement) -> InsState:
    """Estimate carried by a group element: phi(X, origin)."""
    if kind is SymmetryKind.SO3xR12:
        g = x.slots[0]
        return InsState(x.base, g[0:3], g[3:6], g[6:9], g[9:12])
    if kind is SymmetryKind.ES_SE23xR6:
        g = x.slots[0]
        return ins.state_from_se23(x.base, g[:3], g[3:6])
    if kind is SymmetryKind.TFG:
        b = -_star6(x.base[:3, :3].T, x.slots[0])
        return ins.state_from_se23(x.base, b[:3], b[3:6])
    if kind is SymmetryKind.TG:
        cinv = lie.inv_group(x.base, "SE23")
        b = -(lie.adjoint_group(cinv, "SE23") @ x.slots[0])
        return ins.state_from_se23(x.base, b[:3], b[3:6], b[6:9])
    if kind is SymmetryKind.DP:
        binv = lie.inv_group(x.base, "HG3")
        b = -(lie.adjoint_group(binv, "HG3") @ x.slots[0])
        return InsState(x.base[:3, :3].copy(), x.base[:3, 3].copy(),
                        x.slots[1].copy(), b[:3], b[3:6])
    if kind is SymmetryKind.SD:
        bg = lie.pi_map_group(x.base)
        b = -(lie.adjoint_group(lie.inv_group(bg, "HG3"), "HG3") @ x.slots[0])
        return ins.state_from_se23(x.base, b[:3], b[3:6])
    raise UnsupportedKindError(str(kind))


def error_state(kind: SymmetryKind, xhat: SymmetryElement, xi: InsState) -> InsState:
    """Equivariant error e = phi(xhat^-1, xi)."""
    return act_state(kind, inverse(xhat), xi)


def transfer_element(
    kind: SymmetryKind, xi1: InsState, xi2: InsState
) -> SymmetryElement:
    """Closed-form X with phi(X, xi1) = xi2 (transitivity witness)."""
    _check_state(kind, xi1)
    _check_state(kind, xi2)
    if kind is SymmetryKind.SO3xR12:
        return SymmetryElement(
            kind,
            xi1.R.T @ xi2.R,
            (
                np.concatenate(
                    [
                        xi2.v - xi1.v,
                        xi2.p - xi1.p,
                        xi2.b_omega - xi1.b_omega,
                        xi2.b_acc - xi1.b_acc,
                    ]
                ),
            ),
        )
    if kind is SymmetryKind.DP:
        b = lie.inv_group(_hg3(xi1.R, xi1.v), "HG3") @ _hg3(xi2.R, xi2.v)
        beta = _bias6(xi1) - lie.adjoint_group(b, "HG3") @ _bias6(xi2)
        return SymmetryElement(kind, b, (beta, xi2.p - xi1.p))
    c = lie.inv_group(ins.se23_matrix(xi1), "SE23") @ ins.se23_matrix(xi2)
    if kind is SymmetryKind.ES_SE23xR6:
        return SymmetryElement(kind, c, (_bias6(xi2) - _bias6(xi1),))
    if kind is SymmetryKind.TFG:
        return SymmetryElement(
            kind, c, (_bias6(xi1) - _star6(c[:3, :3], _bias6(xi2)),)
        )
    if kind is SymmetryKind.TG:
        gamma = _bias9(xi1) - lie.adjoint_group(c, "SE23") @ _bias9(xi2)
        return SymmetryElement(kind, c, (gamma,))
    if kind is SymmetryKind.SD:
        gamma = _bias6(xi1) - lie.adjoint_group(lie.pi_map_group(c), "HG3") @ _bias6(xi2)
        return SymmetryElement(kind, c, (gamma,))
    raise UnsupportedKindError(str(kind))


# ---------------------------------------------------------------------------
# Input action psi (TG and DP only)
# ---------------------------------------------------------------------------

def input_vector(kind: SymmetryKind, u: InsInput) -> np.ndarray:
    if kind is SymmetryKind.TG:
        return np.concatenate(
            [u.omega, u.acc, u.nu, u.tau_omega, u.tau_acc, u.tau_nu]
        )
    if kind is SymmetryKind.DP:
        return np.concatenate([u.omega, u.acc, u.nu, u.tau_omega, u.tau_acc])
    return np.concatenate([u.omega, u.acc, u.tau_omega, u.tau_acc])


def input_from_vector(kind: SymmetryKind, v: np.ndarray) -> InsInput:
    v = np.asarray(v, dtype=float)
    if kind is SymmetryKind.TG:
        return InsInput(v[0:3], v[3:6], v[6:9], v[9:12], v[12:15], v[15:18])
    if kind is SymmetryKind.DP:
        return InsInput(v[0:3], v[3:6], v[6:9], v[9:12], v[12:15])
    return InsInput(v[0:3], v[3:6], np.zeros(3), v[6:9], v[9:12])


def act_input(kind: SymmetryKind, x: SymmetryElement, u: InsInput) -> InsInput:
    if kind not in KINDS_WITH_INPUT_ACTION:
        raise UnsupportedKindError(f"no input action for kind {kind}")
    if x.kind is not kind:
        raise KindMismatchError(f"element kind {x.kind} does not match {kind}")
    if kind is SymmetryKind.TG:
        cinv = lie.inv_group(x.base, "SE23")
        adinv = lie.adjoint_group(cinv, "SE23")
        w = np.concatenate([u.omega, u.acc, u.nu])
        tau = np.concatenate([u.tau_omega, u.tau_acc, u.tau_nu])
        wn = adinv @ (w - x.slots[0]) + lie.vee(lie.omega_map(cinv), "se23")
        taun = adinv @ tau
        return InsInput(wn[:3], wn[3:6], wn[6:9], taun[:3], taun[3:6], taun[6:9])
    # DP
    binv = lie.inv_group(x.base, "HG3")
    adinv = lie.adjoint_group(binv, "HG3")
    w = np.concatenate([u.omega, u.acc])
    tau = np.concatenate([u.tau_omega, u.tau_acc])
    wn = adinv @ (w - x.slots[0])
    nun = x.base[:3, :3].T @ (u.nu - x.base[:3, 3])
    taun = adinv @ tau
    return InsInput(wn[:3], wn[3:6], nun, taun[:3], taun[3:6])


def origin_input(kind: SymmetryKind, xhat: SymmetryElement, u: InsInput) -> InsInput:
    """psi(xhat^-1, u); defined for kinds with an input action.

    Uses the simplified forms psi(X^-1, u) = (Ad_C w + gamma + Omega(C),
    Ad_C tau) for TG and (Ad_B w + beta, A nu + a, Ad_B tau) for DP, which the
    tests cross-check against act_input on the inverse element.
    """
    if kind is SymmetryKind.TG:
        adc = lie.adjoint_group(xhat.base, "SE23")
        w = np.concatenate([u.omega, u.acc, u.nu])
        tau = np.concatenate([u.tau_omega, u.tau_acc, u.tau_nu])
        wn = adc @ w + xhat.slots[0] + lie.vee(lie.omega_map(xhat.base), "se23")
        taun = adc @ tau
        return InsInput(wn[:3], wn[3:6], wn[6:9], taun[:3], taun[3:6], taun[6:9])
    if kind is SymmetryKind.DP:
        adb = lie.adjoint_group(xhat.base, "HG3")
        w = np.concatenate([u.omega, u.acc])
        tau = np.concatenate([u.tau_omega, u.tau_acc])
        wn = adb @ w + xhat.slots[0]
        nun = xhat.base[:3, :3] @ u.nu + xhat.base[:3, 3]
        taun = adb @ tau
        return InsInput(wn[:3], wn[3:6], nun, taun[:3], taun[3:6])
    return act_input(kind, inverse(xhat), u)


# ---------------------------------------------------------------------------
# Lifts
# ---------------------------------------------------------------------------

def lift_batch(
    kind: SymmetryKind,
    xi: InsState,
    u_vecs: np.ndarray,
    gravity: Gravity | None = None,
) -> np.ndarray:
    """Lift evaluated for a batch of input vectors (rows); returns (B, dim).

    The single code path for both filter propagation and the finite-difference
    input Jacobian; all formulas broadcast over the leading axis.
    """
    _check_state(kind, xi)
    g = ins.GRAVITY if gravity is None else gravity.g
    u_vecs = np.atleast_2d(np.asarray(u_vecs, dtype=float))
    nb = u_vecs.shape[0]
    r = xi.R
    rtg = r.T @ g
    rtv = r.T @ xi.v

    if kind is SymmetryKind.SO3xR12:
        om = u_vecs[:, 0:3]
        acc = u_vecs[:, 3:6]
        out = np.empty((nb, 15))
        out[:, 0:3] = om - xi.b_omega
        out[:, 3:6] = (acc - xi.b_acc) @ r.T + g
        out[:, 6:9] = xi.v
        out[:, 9:15] = u_vecs[:, 6:12]
        return out

    if kind is SymmetryKind.DP:
        om = u_vecs[:, 0:3]
        acc = u_vecs[:, 3:6]
        nu = u_vecs[:, 6:9]
        lam1 = np.empty((nb, 6))
        lam1[:, 0:3] = om - xi.b_omega
        lam1[:, 3:6] = acc - xi.b_acc + rtg
        ad_b = lie.adjoint_algebra(_bias6(xi), "se3")
        lam2 = lam1 @ ad_b.T - u_vecs[:, 9:15]
        lam3 = nu @ r.T + xi.v
        return np.concatenate([lam1, lam2, lam3], axis=1)

    # Extended-pose kinds share Lambda_1 on se2(3).
    om = u_vecs[:, 0:3]
    acc = u_vecs[:, 3:6]
    lam1 = np.empty((nb, 9))
    lam1[:, 0:3] = om - xi.b_omega
    lam1[:, 3:6] = acc - xi.b_acc + rtg
    if kind is SymmetryKind.TG:
        lam1[:, 6:9] = u_vecs[:, 6:9] - xi.b_nu + rtv
    else:
        lam1[:, 6:9] = rtv

    if kind is SymmetryKind.ES_SE23xR6:
        return np.concatenate([lam1, u_vecs[:, 6:12]], axis=1)
    if kind is SymmetryKind.TFG:
        rel = om - xi.b_omega
        lam2 = np.empty((nb, 6))
        lam2[:, 0:3] = np.cross(xi.b_omega, rel) - u_vecs[:, 6:9]
        lam2[:, 3:6] = np.cross(xi.b_acc, rel) - u_vecs[:, 9:12]
        return np.concatenate([lam1, lam2], axis=1)
    if kind is SymmetryKind.TG:
        ad_b = lie.adjoint_algebra(_bias9(xi), "se23")
        lam2 = lam1 @ ad_b.T - u_vecs[:, 9:18]
        return np.concatenate([lam1, lam2], axis=1)
    if kind is SymmetryKind.SD:
        ad_b = lie.adjoint_algebra(_bias6(xi), "se3")
        lam2 = lam1[:, :6] @ ad_b.T - u_vecs[:, 6:12]
        return np.concatenate([lam1, lam2], axis=1)
    raise UnsupportedKindError(str(kind))


def lift(
    kind: SymmetryKind,
    xi: InsState,
    u: InsInput,
    gravity: Gravity | None = None,
) -> np.ndarray:
    """Lift of (state, input) into the symmetry algebra, as coordinates."""
    return lift_batch(kind, xi, input_vector(kind, u)[None, :], gravity)[0]


# ---------------------------------------------------------------------------
# Local chart
# ---------------------------------------------------------------------------

def chart(kind: SymmetryKind, e: InsState) -> np.ndarray:
    """Normal coordinates of an error state around the origin."""
    try:
        return group_log(origin_inverse(kind, e))
    except AngleNearPiError as exc:
        raise ChartDomainError(str(exc)) from exc


def chart_inv(kind: SymmetryKind, eps: np.ndarray) -> InsState:
    return act_state(kind, group_exp(kind, eps), origin_state(kind))


def nav_rows(kind: SymmetryKind) -> np.ndarray:
    """Indices of the attitude/velocity/position rows in chart coordinates."""
    if kind is SymmetryKind.DP:
        return np.concatenate([np.arange(0, 6), np.arange(12, 15)])
    return np.arange(0, 9)


def position_cols(kind: SymmetryKind) -> slice:
    return slice(12, 15) if kind is SymmetryKind.DP else slice(6, 9)
