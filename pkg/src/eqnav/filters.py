"""Equivariant filter engine: lifted observer, Riccati covariance, updates.

The observer state is a symmetry-group element whose origin projection is the
state estimate; the covariance lives in the chart coordinates of the error.
State matrices follow the per-kind closed forms; the input matrix is a
finite-difference Jacobian pushed through the exact identity

    d/dt eps |_(eps=0, input perturbed by delta)
        = Ad_xhat (Lambda(xihat, u) - Lambda(xihat, u + delta)),

so only the lift is differenced.  A slow exact error-flow evaluator is kept
alongside as the oracle for every linearization.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import ins, lie, symmetry
from .errors import SingularInnovationError, UnsupportedKindError
from .ins import Gravity, InsInput, InsState
from .symmetry import SymmetryElement, SymmetryKind

_FD_INPUT_STEP = 1e-6


@dataclass(frozen=True)
class NoiseConfig:
    """Input power spectral density and measurement covariances for one kind."""

    q_input: np.ndarray
    r_pos: np.ndarray
    r_virtual: np.ndarray = field(default_factory=lambda: 1e-4 * np.eye(3))


@dataclass(frozen=True)
class FilterState:
    kind: SymmetryKind
    x: SymmetryElement
    sigma: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class PositionMeasurement:
    pos: np.ndarray
    t: float


def filter_init(kind: SymmetryKind, sigma0: np.ndarray, t0: float = 0.0) -> FilterState:
    return FilterState(kind, symmetry.identity_element(kind), np.asarray(sigma0, float), t0)


def state_estimate(fs: FilterState) -> InsState:
    return symmetry.state_of(fs.kind, fs.x)


# ---------------------------------------------------------------------------
# Linearized state matrices (closed forms)
# ---------------------------------------------------------------------------

def _a2_block(n: int, g: np.ndarray) -> np.ndarray:
    """Navigation block: gravity feeds velocity, velocity feeds position."""
    a = np.zeros((n, n))
    a[3:6, 0:3] = lie.skew(g)
    if n == 9:
        a[6:9, 3:6] = np.eye(3)
    return a


def state_matrix(
    kind: SymmetryKind,
    xhat: SymmetryElement,
    u: InsInput,
    gravity: Gravity | None = None,
) -> np.ndarray:
    g = ins.GRAVITY if gravity is None else gravity.g
    n = symmetry.STATE_DIMS[kind]
    a = np.zeros((n, n))

    if kind is SymmetryKind.SO3xR12:
        rhat = xhat.base
        beta = xhat.slots[0][9:12]
        a[3:6, 0:3] = -lie.skew(rhat @ (u.acc - beta))
        a[6:9, 3:6] = np.eye(3)
        a[0:3, 9:12] = -rhat
        a[3:6, 12:15] = -rhat
        return a

    if kind is SymmetryKind.ES_SE23xR6:
        a[:9, :9] = _a2_block(9, g)
        rhat = xhat.base[:3, :3]
        vhat = xhat.base[:3, 3]
        phat = xhat.base[:3, 4]
        a[0:3, 9:12] = -rhat
        a[3:6, 9:12] = -lie.skew(vhat) @ rhat
        a[6:9, 9:12] = -lie.skew(phat) @ rhat
        a[3:6, 12:15] = -rhat
        return a

    if kind is SymmetryKind.TFG:
        a[:9, :9] = _a2_block(9, g)
        ahat = xhat.base[:3, :3]
        vhat = xhat.base[:3, 3]
        phat = xhat.base[:3, 4]
        a[0:3, 9:12] = np.eye(3)
        a[3:6, 9:12] = lie.skew(vhat)
        a[3:6, 12:15] = np.eye(3)
        a[6:9, 9:12] = lie.skew(phat)
        spin = lie.skew(ahat @ u.omega + xhat.slots[0][:3])
        a[9:12, 9:12] = spin
        a[12:15, 12:15] = spin
        return a

    if kind is SymmetryKind.TG:
        a[:9, :9] = _a2_block(9, g)
        a[:9, 9:18] = np.eye(9)
        w0 = symmetry.input_vector(kind, symmetry.origin_input(kind, xhat, u))[:9]
        gvec = lie.ubar(lie.lbar(g))
        a[9:18, 9:18] = lie.adjoint_algebra(w0 + gvec, "se23")
        return a

    if kind is SymmetryKind.DP:
        a[3:6, 0:3] = lie.skew(g)
        a[0:6, 6:12] = np.eye(6)
        u0 = symmetry.origin_input(kind, xhat, u)
        w0 = np.concatenate([u0.omega, u0.acc])
        a[6:12, 6:12] = lie.adjoint_algebra(w0 + lie.ubar(g), "se3")
        a[12:15, 0:3] = -lie.skew(u0.nu)
        a[12:15, 3:6] = np.eye(3)
        return a

    if kind is SymmetryKind.SD:
        a[:9, :9] = _a2_block(9, g)
        phat = xhat.base[:3, 4]
        a[0:6, 9:15] = np.eye(6)
        a[6:9, 9:12] = lie.skew(phat)
        adb = lie.adjoint_group(lie.pi_map_group(xhat.base), "HG3")
        w = np.concatenate([u.omega, u.acc])
        a[9:15, 9:15] = lie.adjoint_algebra(
            adb @ w + xhat.slots[0] + lie.ubar(g), "se3"
        )
        return a

    raise UnsupportedKindError(str(kind))


_PERT_CACHE: dict[int, np.ndarray] = {}


def _perturbations(m: int) -> np.ndarray:
    """Rows (0, +e_1..+e_m, -e_1..-e_m) for one fused lift evaluation."""
    if m not in _PERT_CACHE:
        _PERT_CACHE[m] = np.vstack([np.zeros((1, m)), np.eye(m), -np.eye(m)])
    return _PERT_CACHE[m]


def _lift_and_jacobian(
    kind: SymmetryKind,
    xihat: InsState,
    u0: np.ndarray,
    gravity: Gravity | None,
    step: float = _FD_INPUT_STEP,
) -> tuple[np.ndarray, np.ndarray]:
    """Lift at u0 plus its central-difference input Jacobian, one batched call."""
    m = u0.size
    lam = symmetry.lift_batch(kind, xihat, u0 + step * _perturbations(m), gravity)
    dlam = (lam[1 : m + 1] - lam[m + 1 :]).T / (2.0 * step)
    return lam[0], dlam


def input_matrix(
    kind: SymmetryKind,
    xhat: SymmetryElement,
    u: InsInput,
    gravity: Gravity | None = None,
    step: float = _FD_INPUT_STEP,
) -> np.ndarray:
    """Jacobian of the chart error rate w.r.t. an additive input perturbation."""
    xihat = symmetry.state_of(kind, xhat)
    u0 = symmetry.input_vector(kind, u)
    _, dlam = _lift_and_jacobian(kind, xihat, u0, gravity, step)
    return -symmetry.adjoint_matrix(xhat) @ dlam


# ---------------------------------------------------------------------------
# Exact error flow (linearization oracle)
# ---------------------------------------------------------------------------

def error_flow(
    kind: SymmetryKind,
    xhat: SymmetryElement,
    u: InsInput,
    eps: np.ndarray,
    gravity: Gravity | None = None,
    step: float = 1.5e-3,
) -> np.ndarray:
    """d/dt of the chart error coordinates at error eps, exact dynamics.

    Uses the curve e(s) = phi(exp(s Lam_xi) exp(-s Lam_hat) xhat^-1, xi) whose
    derivative at s = 0 equals the true error rate, differentiated with a
    fourth-order five-point stencil.
    """
    e = symmetry.chart_inv(kind, eps)
    xi = symmetry.act_state(kind, xhat, e)
    lam_xi = symmetry.lift(kind, xi, u, gravity)
    lam_hat = symmetry.lift(kind, symmetry.state_of(kind, xhat), u, gravity)
    xinv = symmetry.inverse(xhat)

    def eps_at(s: float) -> np.ndarray:
        z = symmetry.compose(
            symmetry.compose(
                symmetry.group_exp(kind, s * lam_xi),
                symmetry.group_exp(kind, -s * lam_hat),
            ),
            xinv,
        )
        return symmetry.chart(kind, symmetry.act_state(kind, z, xi))

    h = step
    return (-eps_at(2 * h) + 8.0 * eps_at(h) - 8.0 * eps_at(-h) + eps_at(-2 * h)) / (
        12.0 * h
    )


def state_matrix_fd(
    kind: SymmetryKind,
    xhat: SymmetryElement,
    u: InsInput,
    gravity: Gravity | None = None,
    step: float = 1e-5,
) -> np.ndarray:
    """Finite-difference Jacobian of the exact error flow at eps = 0."""
    n = symmetry.STATE_DIMS[kind]
    cols = []
    for j in range(n):
        ej = np.zeros(n)
        ej[j] = step
        cols.append(
            (error_flow(kind, xhat, u, ej, gravity)
             - error_flow(kind, xhat, u, -ej, gravity)) / (2.0 * step)
        )
    return np.column_stack(cols)


def input_matrix_fd(
    kind: SymmetryKind,
    xhat: SymmetryElement,
    u: InsInput,
    gravity: Gravity | None = None,
    step: float = 1e-6,
) -> np.ndarray:
    """Slow oracle for input_matrix: difference the full error flow over inputs.

    The observer input is perturbed while the true state keeps u, which is the
    configuration input_matrix linearizes.
    """
    kind_m = symmetry.INPUT_DIMS[kind]
    n = symmetry.STATE_DIMS[kind]
    u0 = symmetry.input_vector(kind, u)
    xihat = symmetry.state_of(kind, xhat)
    lam_xi = symmetry.lift(kind, xihat, u, gravity)
    xinv = symmetry.inverse(xhat)

    def eps_dot(uvec: np.ndarray) -> np.ndarray:
        lam_hat = symmetry.lift_batch(kind, xihat, uvec[None, :], gravity)[0]
        h = 1e-4

        def eps_at(s: float) -> np.ndarray:
            z = symmetry.compose(
                symmetry.compose(
                    symmetry.group_exp(kind, s * lam_xi),
                    symmetry.group_exp(kind, -s * lam_hat),
                ),
                xinv,
            )
            return symmetry.chart(kind, symmetry.act_state(kind, z, xihat))

        return (eps_at(h) - eps_at(-h)) / (2.0 * h)

    out = np.zeros((n, kind_m))
    for j in range(kind_m):
        ej = np.zeros(kind_m)
        ej[j] = step
        out[:, j] = (eps_dot(u0 + ej) - eps_dot(u0 - ej)) / (2.0 * step)
    return out


# ---------------------------------------------------------------------------
# Output matrices
# ---------------------------------------------------------------------------

_STAR_KINDS = (
    SymmetryKind.ES_SE23xR6,
    SymmetryKind.TFG,
    SymmetryKind.TG,
    SymmetryKind.SD,
)


def output_matrix(
    kind: SymmetryKind,
    xhat: SymmetryElement,
    y: np.ndarray | None = None,
    mode: str = "star",
) -> np.ndarray:
    """Position output matrix.

    mode "star" gives the equivariant form with third-order output error and
    pairs with the residual p_hat - pos; it requires the raw measurement y.
    mode "linear" gives the first-order output matrix pairing with pos - p_hat.
    Kinds SO3xR12 and DP only have the linear form.
    """
    n = symmetry.STATE_DIMS[kind]
    c = np.zeros((3, n))
    if mode == "linear" or kind not in _STAR_KINDS:
        if kind is SymmetryKind.SO3xR12:
            c[:, 6:9] = np.eye(3)
            return c
        if kind is SymmetryKind.DP:
            c[:, 12:15] = np.eye(3)
            return c
        phat = xhat.base[:3, 4]
        c[:, 0:3] = -lie.skew(phat)
        c[:, 6:9] = np.eye(3)
        return c
    if mode != "star":
        raise ValueError(f"unknown output mode {mode!r}")
    if kind not in _STAR_KINDS:
        raise UnsupportedKindError(f"no equivariant output for kind {kind}")
    if y is None:
        raise ValueError("star output matrix requires the position measurement")
    phat = xhat.base[:3, 4]
    c[:, 0:3] = 0.5 * lie.skew(np.asarray(y, float) + phat)
    c[:, 6:9] = -np.eye(3)
    return c


def virtual_bias_matrix(xhat: SymmetryElement) -> np.ndarray:
    """Output matrix of the virtual-bias constraint h = b_nu = 0 (kind TG)."""
    ahat = xhat.base[:3, :3]
    phat = xhat.base[:3, 4]
    c = np.zeros((3, 18))
    c[:, 9:12] = ahat.T @ lie.skew(phat)
    c[:, 15:18] = -ahat.T
    return c


# ---------------------------------------------------------------------------
# Propagation / update
# ---------------------------------------------------------------------------

def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def propagate(
    fs: FilterState,
    u: InsInput,
    dt: float,
    noise: NoiseConfig,
    gravity: Gravity | None = None,
) -> FilterState:
    """Lifted observer step with third-order transition-matrix covariance."""
    if dt == 0.0:
        return fs
    if dt < 0.0:
        raise ValueError("dt must be non-negative")
    kind = fs.kind
    xihat = symmetry.state_of(kind, fs.x)
    u0 = symmetry.input_vector(kind, u)
    lam, dlam = _lift_and_jacobian(kind, xihat, u0, gravity)
    x_next = symmetry.compose(fs.x, symmetry.group_exp(kind, dt * lam))

    a = state_matrix(kind, fs.x, u, gravity)
    n = a.shape[0]
    adt = a * dt
    eye = np.eye(n)
    phi = eye + adt @ (eye + adt @ (eye + adt / 3.0) / 2.0)
    b = -symmetry.adjoint_matrix(fs.x) @ dlam
    sigma = _sym(phi @ fs.sigma @ phi.T + dt * b @ noise.q_input @ b.T)
    return FilterState(kind, x_next, sigma, fs.t + dt)


@dataclass(frozen=True)
class UpdateResult:
    state: FilterState
    residual: np.ndarray
    nis: float


def _apply_correction(fs: FilterState, gamma: np.ndarray, sigma: np.ndarray) -> FilterState:
    x_next = symmetry.compose(symmetry.group_exp(fs.kind, gamma), fs.x)
    return FilterState(fs.kind, x_next, _sym(sigma), fs.t)


def _kalman(
    fs: FilterState, c: np.ndarray, r: np.ndarray, resid: np.ndarray
) -> tuple[np.ndarray, np.ndarray, float]:
    s = c @ fs.sigma @ c.T + r
    if np.linalg.cond(s) > 1e12:
        raise SingularInnovationError("innovation covariance ill-conditioned")
    k = fs.sigma @ c.T @ np.linalg.inv(s)
    gamma = k @ resid
    sigma = (np.eye(fs.sigma.shape[0]) - k @ c) @ fs.sigma
    nis = float(resid @ np.linalg.solve(s, resid)) / resid.size
    return gamma, sigma, nis


def update_position(
    fs: FilterState,
    meas: PositionMeasurement,
    noise: NoiseConfig,
    mode: str = "star",
) -> UpdateResult:
    """Position update; the correction is applied on the left of the observer.

    Star mode uses the equivariant output matrix with residual p_hat - pos;
    linear mode (and the linear-only kinds) uses pos - p_hat.
    """
    kind = fs.kind
    phat = symmetry.state_of(kind, fs.x).p
    pos = np.asarray(meas.pos, dtype=float)
    use_star = mode == "star" and kind in _STAR_KINDS
    if use_star:
        c = output_matrix(kind, fs.x, pos, mode="star")
        resid = phat - pos
    else:
        c = output_matrix(kind, fs.x, mode="linear")
        resid = pos - phat
    gamma, sigma, nis = _kalman(fs, c, noise.r_pos, resid)
    return UpdateResult(_apply_correction(fs, gamma, sigma), resid, nis)


def update_virtual_bias(fs: FilterState, noise: NoiseConfig) -> UpdateResult:
    """Pseudo-measurement b_nu = 0; only the tangent-group filter has one."""
    if fs.kind is not SymmetryKind.TG:
        raise UnsupportedKindError("virtual-bias update requires the TG kind")
    c = virtual_bias_matrix(fs.x)
    bnu_hat = symmetry.state_of(fs.kind, fs.x).b_nu
    resid = -bnu_hat
    gamma, sigma, nis = _kalman(fs, c, noise.r_virtual, resid)
    return UpdateResult(_apply_correction(fs, gamma, sigma), resid, nis)


# ---------------------------------------------------------------------------
# Reference filters (equivalence oracles)
# ---------------------------------------------------------------------------

@dataclass
class MekfReference:
    """Textbook multiplicative EKF with global-frame attitude error.

    Error ordering (att, vel, pos, bw, ba); attitude error defined by
    R = exp(delta^) R_hat.  Shares the discretization conventions of the
    engine so trajectories can be compared in lockstep.
    """

    R: np.ndarray
    v: np.ndarray
    p: np.ndarray
    bw: np.ndarray
    ba: np.ndarray
    sigma: np.ndarray
    g: np.ndarray = field(default_factory=lambda: ins.GRAVITY.copy())

    @classmethod
    def initial(cls, sigma0: np.ndarray) -> "MekfReference":
        return cls(
            np.eye(3), np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3),
            np.asarray(sigma0, float).copy(),
        )

    def state_matrix(self, u: InsInput) -> np.ndarray:
        a = np.zeros((15, 15))
        a[3:6, 0:3] = -lie.skew(self.R @ (u.acc - self.ba))
        a[6:9, 3:6] = np.eye(3)
        a[0:3, 9:12] = -self.R
        a[3:6, 12:15] = -self.R
        return a

    def noise_matrix(self) -> np.ndarray:
        b = np.zeros((15, 12))
        b[0:3, 0:3] = -self.R
        b[3:6, 3:6] = -self.R
        b[9:12, 6:9] = np.eye(3)
        b[12:15, 9:12] = np.eye(3)
        return b

    def propagate(self, u: InsInput, dt: float, q: np.ndarray) -> None:
        a = self.state_matrix(u)
        b = self.noise_matrix()
        adt = a * dt
        phi = np.eye(15) + adt @ (np.eye(15) + adt @ (np.eye(15) + adt / 3.0) / 2.0)
        self.sigma = _sym(phi @ self.sigma @ phi.T + dt * b @ q @ b.T)
        acc_world = self.R @ (u.acc - self.ba) + self.g
        self.p = self.p + dt * self.v
        self.v = self.v + dt * acc_world
        self.R = self.R @ lie.exp_so3(dt * (u.omega - self.bw))
        self.bw = self.bw + dt * u.tau_omega
        self.ba = self.ba + dt * u.tau_acc

    def update_position(self, pos: np.ndarray, r: np.ndarray) -> None:
        h = np.zeros((3, 15))
        h[:, 6:9] = np.eye(3)
        s = h @ self.sigma @ h.T + r
        k = self.sigma @ h.T @ np.linalg.inv(s)
        dx = k @ (np.asarray(pos, float) - self.p)
        self.R = lie.exp_so3(dx[0:3]) @ self.R
        self.v = self.v + dx[3:6]
        self.p = self.p + dx[6:9]
        self.bw = self.bw + dx[9:12]
        self.ba = self.ba + dx[12:15]
        self.sigma = _sym((np.eye(15) - k @ h) @ self.sigma)


@dataclass
class IekfReference:
    """Textbook Imperfect-IEKF: right-invariant extended-pose error, linear bias.

    Error ordering (att, vel, pos, bw, ba) in right-invariant log coordinates.
    """

    T: np.ndarray
    bw: np.ndarray
    ba: np.ndarray
    sigma: np.ndarray
    g: np.ndarray = field(default_factory=lambda: ins.GRAVITY.copy())

    @classmethod
    def initial(cls, sigma0: np.ndarray) -> "IekfReference":
        return cls(np.eye(5), np.zeros(3), np.zeros(3), np.asarray(sigma0, float).copy())

    def state_matrix(self) -> np.ndarray:
        r = self.T[:3, :3]
        v = self.T[:3, 3]
        p = self.T[:3, 4]
        a = np.zeros((15, 15))
        a[3:6, 0:3] = lie.skew(self.g)
        a[6:9, 3:6] = np.eye(3)
        a[0:3, 9:12] = -r
        a[3:6, 9:12] = -lie.skew(v) @ r
        a[6:9, 9:12] = -lie.skew(p) @ r
        a[3:6, 12:15] = -r
        return a

    def noise_matrix(self) -> np.ndarray:
        r = self.T[:3, :3]
        v = self.T[:3, 3]
        p = self.T[:3, 4]
        b = np.zeros((15, 12))
        b[0:3, 0:3] = -r
        b[3:6, 0:3] = -lie.skew(v) @ r
        b[6:9, 0:3] = -lie.skew(p) @ r
        b[3:6, 3:6] = -r
        b[9:12, 6:9] = np.eye(3)
        b[12:15, 9:12] = np.eye(3)
        return b

    def propagate(self, u: InsInput, dt: float, q: np.ndarray) -> None:
        a = self.state_matrix()
        b = self.noise_matrix()
        adt = a * dt
        phi = np.eye(15) + adt @ (np.eye(15) + adt @ (np.eye(15) + adt / 3.0) / 2.0)
        self.sigma = _sym(phi @ self.sigma @ phi.T + dt * b @ q @ b.T)
        xi = ins.state_from_se23(self.T, self.bw, self.ba)
        gm, d, bm, wm = ins.compact_matrices(xi, u, Gravity(self.g))
        lam1 = (wm - bm + d) + lie.inv_group(self.T, "SE23") @ (gm - d) @ self.T
        self.T = self.T @ lie.exp_group(dt * lie.vee(lam1, "se23"), "SE23")
        self.bw = self.bw + dt * u.tau_omega
        self.ba = self.ba + dt * u.tau_acc

    def update_position(self, pos: np.ndarray, r: np.ndarray) -> None:
        p = self.T[:3, 4]
        h = np.zeros((3, 15))
        h[:, 0:3] = -lie.skew(p)
        h[:, 6:9] = np.eye(3)
        s = h @ self.sigma @ h.T + r
        k = self.sigma @ h.T @ np.linalg.inv(s)
        dx = k @ (np.asarray(pos, float) - p)
        self.T = lie.exp_group(dx[:9], "SE23") @ self.T
        self.bw = self.bw + dx[9:12]
        self.ba = self.ba + dx[12:15]
        self.sigma = _sym((np.eye(15) - k @ h) @ self.sigma)
