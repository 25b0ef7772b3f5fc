"""Biased inertial navigation system: state, inputs, dynamics, integrators.

State is (R, v, p, b_omega, b_acc) with attitude mapping body to global, all
translational quantities in the global frame, biases in the body frame.  An
optional virtual velocity bias b_nu exists only for the tangent-group
symmetry.  Dynamics assume a non-rotating flat earth.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import lie

GRAVITY = np.array([0.0, 0.0, -9.80665])


def _vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(3)
    return v


@dataclass(frozen=True)
class Gravity:
    g: np.ndarray = field(default_factory=lambda: GRAVITY.copy())


@dataclass(frozen=True)
class InsState:
    """Navigation state; arrays are treated as immutable by convention."""

    R: np.ndarray
    v: np.ndarray
    p: np.ndarray
    b_omega: np.ndarray
    b_acc: np.ndarray
    b_nu: np.ndarray | None = None

    @property
    def has_virtual(self) -> bool:
        return self.b_nu is not None

    def with_virtual(self) -> "InsState":
        if self.b_nu is not None:
            return self
        return replace(self, b_nu=np.zeros(3))

    def without_virtual(self) -> "InsState":
        if self.b_nu is None:
            return self
        return replace(self, b_nu=None)


@dataclass(frozen=True)
class InsInput:
    """IMU readings plus bias-dynamics inputs; virtual slots default to zero."""

    omega: np.ndarray
    acc: np.ndarray
    nu: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tau_omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tau_acc: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tau_nu: np.ndarray = field(default_factory=lambda: np.zeros(3))


def origin_state(with_virtual: bool = False) -> InsState:
    s = InsState(
        R=np.eye(3),
        v=np.zeros(3),
        p=np.zeros(3),
        b_omega=np.zeros(3),
        b_acc=np.zeros(3),
    )
    return s.with_virtual() if with_virtual else s


def make_state(R, v, p, b_omega, b_acc, b_nu=None) -> InsState:
    return InsState(
        R=np.asarray(R, dtype=float).reshape(3, 3),
        v=_vec3(v),
        p=_vec3(p),
        b_omega=_vec3(b_omega),
        b_acc=_vec3(b_acc),
        b_nu=None if b_nu is None else _vec3(b_nu),
    )


@dataclass(frozen=True)
class StateDerivative:
    R_dot: np.ndarray
    v_dot: np.ndarray
    p_dot: np.ndarray
    b_omega_dot: np.ndarray
    b_acc_dot: np.ndarray
    b_nu_dot: np.ndarray | None = None


def dynamics(xi: InsState, u: InsInput, gravity: Gravity | None = None) -> StateDerivative:
    """Continuous-time biased INS dynamics.

    p_dot is v for the plain system; when the state carries the virtual bias
    the position equation reads p_dot = R (nu - b_nu) + v, which reduces to the
    plain system at nu = b_nu = 0.
    """
    g = GRAVITY if gravity is None else gravity.g
    r_dot = xi.R @ lie.skew(u.omega - xi.b_omega)
    v_dot = xi.R @ (u.acc - xi.b_acc) + g
    if xi.b_nu is not None:
        p_dot = xi.R @ (u.nu - xi.b_nu) + xi.v
    else:
        p_dot = xi.v.copy()
    return StateDerivative(
        R_dot=r_dot,
        v_dot=v_dot,
        p_dot=p_dot,
        b_omega_dot=u.tau_omega.copy(),
        b_acc_dot=u.tau_acc.copy(),
        b_nu_dot=u.tau_nu.copy() if xi.b_nu is not None else None,
    )


# ---------------------------------------------------------------------------
# Compact extended-pose form
# ---------------------------------------------------------------------------

def se23_matrix(xi: InsState) -> np.ndarray:
    t = np.eye(5)
    t[:3, :3] = xi.R
    t[:3, 3] = xi.v
    t[:3, 4] = xi.p
    return t


def state_from_se23(t: np.ndarray, b_omega, b_acc, b_nu=None) -> InsState:
    return make_state(t[:3, :3], t[:3, 3], t[:3, 4], b_omega, b_acc, b_nu)


def selector_matrix() -> np.ndarray:
    """Nilpotent 5x5 selector feeding velocity into the position column."""
    d = np.zeros((5, 5))
    d[3, 4] = 1.0
    return d


def compact_matrices(
    xi: InsState, u: InsInput, gravity: Gravity | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(G, D, B, W) of the extended-pose form T_dot = T(W - B + D) + (G - D)T."""
    g = GRAVITY if gravity is None else gravity.g
    gm = lie.wedge(lie.ubar(lie.lbar(g)), "se23")
    d = selector_matrix()
    if xi.b_nu is not None:
        b = lie.wedge(np.concatenate([xi.b_omega, xi.b_acc, xi.b_nu]), "se23")
        w = lie.wedge(np.concatenate([u.omega, u.acc, u.nu]), "se23")
    else:
        b = lie.wedge(lie.lbar(np.concatenate([xi.b_omega, xi.b_acc])), "se23")
        w = lie.wedge(lie.lbar(np.concatenate([u.omega, u.acc])), "se23")
    return gm, d, b, w


def compact_derivative(
    xi: InsState, u: InsInput, gravity: Gravity | None = None
) -> np.ndarray:
    """T_dot evaluated through the compact form; matches dynamics() blockwise."""
    gm, d, b, w = compact_matrices(xi, u, gravity)
    t = se23_matrix(xi)
    return t @ (w - b + d) + (gm - d) @ t


# ---------------------------------------------------------------------------
# Truth integration
# ---------------------------------------------------------------------------

def _state_vector_part(xi: InsState) -> np.ndarray:
    parts = [xi.v, xi.p, xi.b_omega, xi.b_acc]
    if xi.b_nu is not None:
        parts.append(xi.b_nu)
    return np.concatenate(parts)


def _state_from_parts(xi: InsState, r: np.ndarray, y: np.ndarray) -> InsState:
    b_nu = y[12:15] if xi.b_nu is not None else None
    return make_state(r, y[0:3], y[3:6], y[6:9], y[9:12], b_nu)


def _dexpinv_so3(u: np.ndarray, w: np.ndarray) -> np.ndarray:
    # Truncated dexpinv; terms through [u,[u,w]]/12 suffice for 4th order.
    c1 = np.cross(u, w)
    return w - 0.5 * c1 + np.cross(u, c1) / 12.0


def rk4_step(
    xi: InsState,
    input_fn: Callable[[float], InsInput],
    t: float,
    dt: float,
    gravity: Gravity | None = None,
) -> InsState:
    """One Munthe-Kaas RK4 step; rotation advances through the exponential."""

    def stage(u_rot: np.ndarray, y_off: np.ndarray, tau: float):
        r_s = xi.R @ lie.exp_so3(u_rot)
        y_s = y0 + y_off
        xi_s = _state_from_parts(xi, r_s, y_s)
        d = dynamics(xi_s, input_fn(t + tau), gravity)
        omega_body = lie.vee(xi_s.R.T @ d.R_dot, "so3")
        parts = [d.v_dot, d.p_dot, d.b_omega_dot, d.b_acc_dot]
        if xi.b_nu is not None:
            parts.append(d.b_nu_dot)
        return _dexpinv_so3(u_rot, omega_body), np.concatenate(parts)

    y0 = _state_vector_part(xi)
    k1r, k1y = stage(np.zeros(3), np.zeros_like(y0), 0.0)
    k2r, k2y = stage(0.5 * dt * k1r, 0.5 * dt * k1y, 0.5 * dt)
    k3r, k3y = stage(0.5 * dt * k2r, 0.5 * dt * k2y, 0.5 * dt)
    k4r, k4y = stage(dt * k3r, dt * k3y, dt)
    u_rot = dt / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
    y = y0 + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    return _state_from_parts(xi, xi.R @ lie.exp_so3(u_rot), y)


def integrate_truth(
    xi0: InsState,
    input_fn: Callable[[float], InsInput],
    dt: float,
    steps: int,
    gravity: Gravity | None = None,
    t0: float = 0.0,
) -> list[InsState]:
    """RK4 trajectory including the initial state (steps + 1 entries)."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    out = [xi0]
    xi = xi0
    for k in range(steps):
        xi = rk4_step(xi, input_fn, t0 + k * dt, dt, gravity)
        out.append(xi)
    return out


def step_constant_input(
    xi: InsState, omega: np.ndarray, acc: np.ndarray, dt: float,
    gravity: Gravity | None = None,
) -> InsState:
    """Exact propagation over dt for piecewise-constant body rates and accel.

    Biases are held; their random-walk increments are applied by the caller.
    """
    g = GRAVITY if gravity is None else gravity.g
    w = _vec3(omega)
    a = _vec3(acc)
    gamma1 = lie.jl_so3(dt * w)      # (1/dt) * int exp(s w^) ds
    gamma2 = lie.gamma2_so3(dt * w)  # (1/dt^2) * double integral
    r_next = xi.R @ lie.exp_so3(dt * w)
    v_next = xi.v + g * dt + xi.R @ (dt * (gamma1 @ a))
    p_next = xi.p + xi.v * dt + 0.5 * g * dt * dt + xi.R @ (dt * dt * (gamma2 @ a))
    return replace(xi, R=r_next, v=v_next, p=p_next)
