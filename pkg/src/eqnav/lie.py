"""Matrix Lie-group primitives for SO(3), SE(3)/HG(3), SE2(3) and semi-direct composites.

Conventions:
  - so(3) coordinates are rotation vectors; wedge(v) is the cross-product matrix.
  - se(3)/hg(3) coordinates are (theta, u); the 4x4 realization carries u in the
    translation column.  HG(3) is structurally SE(3) with the translation slot
    holding a velocity, so it shares all numerics with SE(3).
  - se2(3) coordinates are (theta, u1, u2); the 5x5 realization carries u1 and u2
    in the fourth and fifth columns.
  - Group exponentials use Rodrigues for SO(3) and block closed forms (left
    Jacobian columns) for SE(3)/SE2(3).  Everything on semi-direct composites is
    computed through the generic dexp-type series so there is one code path.
"""

from __future__ import annotations

import numpy as np

from .errors import AngleNearPiError

# Series controls: truncate when a term falls below SERIES_TOL, hard cap
# SERIES_MAX terms.  Adequate for arguments with norm <= ~3.
SERIES_TOL = 1e-14
SERIES_MAX = 40

# log is refused within this band of the angle-pi injectivity boundary.
ANGLE_PI_GUARD = 1e-6

_EPS = 1e-10  # small-angle switch for trig closed forms


# ---------------------------------------------------------------------------
# wedge / vee
# ---------------------------------------------------------------------------

def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix of a 3-vector: skew(v) @ w == cross(v, w)."""
    m = np.zeros((3, 3))
    m[0, 1] = -v[2]
    m[0, 2] = v[1]
    m[1, 0] = v[2]
    m[1, 2] = -v[0]
    m[2, 0] = -v[1]
    m[2, 1] = v[0]
    return m


_ALGEBRA_DIMS = {"so3": 3, "se3": 6, "hg3": 6, "se23": 9}


def wedge(v: np.ndarray, algebra: str) -> np.ndarray:
    """Map coordinates to the matrix algebra element."""
    v = np.asarray(v, dtype=float)
    dim = _ALGEBRA_DIMS.get(algebra)
    if dim is None:
        raise ValueError(f"unknown algebra {algebra!r}")
    if v.shape != (dim,):
        raise ValueError(f"{algebra} expects a {dim}-vector, got shape {v.shape}")
    if algebra == "so3":
        return skew(v)
    if algebra in ("se3", "hg3"):
        m = np.zeros((4, 4))
        m[:3, :3] = skew(v[:3])
        m[:3, 3] = v[3:6]
        return m
    m = np.zeros((5, 5))
    m[:3, :3] = skew(v[:3])
    m[:3, 3] = v[3:6]
    m[:3, 4] = v[6:9]
    return m


def vee(m: np.ndarray, algebra: str) -> np.ndarray:
    """Inverse of wedge."""
    if algebra == "so3":
        return np.array([m[2, 1], m[0, 2], m[1, 0]])
    if algebra in ("se3", "hg3"):
        return np.concatenate([vee(m[:3, :3], "so3"), m[:3, 3]])
    if algebra == "se23":
        return np.concatenate([vee(m[:3, :3], "so3"), m[:3, 3], m[:3, 4]])
    raise ValueError(f"unknown algebra {algebra!r}")


# ---------------------------------------------------------------------------
# Series engine
# ---------------------------------------------------------------------------

def phi_series(m: np.ndarray, k0: int) -> np.ndarray:
    """Evaluate sum_k m^k / (k + k0)! with adaptive truncation.

    k0=0 gives the matrix exponential, k0=1 the dexp / left-Jacobian series,
    k0=2 the double integral used by constant-input propagation.
    """
    n = m.shape[0]
    import math

    term = np.eye(n) / math.factorial(k0)
    acc = term.copy()
    for k in range(1, SERIES_MAX):
        term = term @ m / (k + k0)
        acc += term
        if np.abs(term).max() < SERIES_TOL:
            break
    return acc


def expm_series(m: np.ndarray) -> np.ndarray:
    return phi_series(m, 0)


# ---------------------------------------------------------------------------
# SO(3)
# ---------------------------------------------------------------------------

def exp_so3(v: np.ndarray) -> np.ndarray:
    """Rodrigues formula."""
    v = np.asarray(v, dtype=float)
    angle = np.linalg.norm(v)
    k = skew(v)
    if angle < _EPS:
        return np.eye(3) + k + 0.5 * (k @ k)
    s = np.sin(angle) / angle
    c = (1.0 - np.cos(angle)) / (angle * angle)
    return np.eye(3) + s * k + c * (k @ k)


def log_so3(r: np.ndarray) -> np.ndarray:
    """Rotation vector of r; raises AngleNearPiError inside the guard band."""
    tr = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    angle = np.arccos(tr)
    if angle > np.pi - ANGLE_PI_GUARD:
        raise AngleNearPiError(
            f"rotation angle {angle:.9f} within {ANGLE_PI_GUARD} of pi"
        )
    w = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    if angle < _EPS:
        # log(R) ~ 0.5 * (R - R^T)^vee with a second-order angle correction
        return 0.5 * w * (1.0 + angle * angle / 12.0)
    if angle < 2.8:
        return 0.5 * angle / np.sin(angle) * w
    # Near pi the antisymmetric part degrades; recover the axis from the
    # symmetric part and fix its sign with the antisymmetric part.
    s = r + np.eye(3)
    col = s[:, np.argmax(np.diag(s))]
    axis = col / np.linalg.norm(col)
    if np.dot(axis, w) < 0.0:
        axis = -axis
    return angle * axis


def jl_so3(v: np.ndarray) -> np.ndarray:
    """Left Jacobian of SO(3), closed form."""
    v = np.asarray(v, dtype=float)
    angle = np.linalg.norm(v)
    k = skew(v)
    if angle < _EPS:
        return np.eye(3) + 0.5 * k + (k @ k) / 6.0
    a = (1.0 - np.cos(angle)) / (angle * angle)
    b = (angle - np.sin(angle)) / (angle ** 3)
    return np.eye(3) + a * k + b * (k @ k)


def gamma2_so3(v: np.ndarray) -> np.ndarray:
    """Second-order rotation integral sum_k skew(v)^k / (k+2)!, closed form."""
    v = np.asarray(v, dtype=float)
    angle = np.linalg.norm(v)
    k = skew(v)
    if angle < 1e-4:
        return 0.5 * np.eye(3) + k / 6.0 + (k @ k) / 24.0
    a2 = angle * angle
    b = (angle - np.sin(angle)) / (a2 * angle)
    c = (np.cos(angle) - 1.0 + 0.5 * a2) / (a2 * a2)
    return 0.5 * np.eye(3) + b * k + c * (k @ k)


def jl_so3_inv(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    angle = np.linalg.norm(v)
    k = skew(v)
    if angle < _EPS:
        return np.eye(3) - 0.5 * k + (k @ k) / 12.0
    b = 1.0 / (angle * angle) - (1.0 + np.cos(angle)) / (2.0 * angle * np.sin(angle))
    return np.eye(3) - 0.5 * k + b * (k @ k)


# ---------------------------------------------------------------------------
# Group exp/log: SE(3)=HG(3) 4x4 and SE2(3) 5x5
# ---------------------------------------------------------------------------

_GROUP_ALGEBRA = {"SO3": "so3", "SE3": "se3", "HG3": "hg3", "SE23": "se23"}


def exp_group(v: np.ndarray, group: str) -> np.ndarray:
    """Group exponential in the matrix realization."""
    v = np.asarray(v, dtype=float)
    if group == "SO3":
        return exp_so3(v)
    j = jl_so3(v[:3])
    r = exp_so3(v[:3])
    if group in ("SE3", "HG3"):
        m = np.eye(4)
        m[:3, :3] = r
        m[:3, 3] = j @ v[3:6]
        return m
    if group == "SE23":
        m = np.eye(5)
        m[:3, :3] = r
        m[:3, 3] = j @ v[3:6]
        m[:3, 4] = j @ v[6:9]
        return m
    raise ValueError(f"unknown group {group!r}")


def log_group(x: np.ndarray, group: str) -> np.ndarray:
    """Group logarithm; propagates AngleNearPiError from the rotation block."""
    if group == "SO3":
        return log_so3(x)
    theta = log_so3(x[:3, :3])
    jinv = jl_so3_inv(theta)
    if group in ("SE3", "HG3"):
        return np.concatenate([theta, jinv @ x[:3, 3]])
    if group == "SE23":
        return np.concatenate([theta, jinv @ x[:3, 3], jinv @ x[:3, 4]])
    raise ValueError(f"unknown group {group!r}")


def inv_group(x: np.ndarray, group: str) -> np.ndarray:
    """Group inverse in the matrix realization."""
    if group == "SO3":
        return x.T
    rt = x[:3, :3].T
    m = np.eye(x.shape[0])
    m[:3, :3] = rt
    m[:3, 3] = -rt @ x[:3, 3]
    if group == "SE23":
        m[:3, 4] = -rt @ x[:3, 4]
    return m


def identity_group(group: str) -> np.ndarray:
    return np.eye({"SO3": 3, "SE3": 4, "HG3": 4, "SE23": 5}[group])


# ---------------------------------------------------------------------------
# Adjoint representations
# ---------------------------------------------------------------------------

def adjoint_group(x: np.ndarray, group: str) -> np.ndarray:
    """Adjoint matrix of a base-group element, blockwise."""
    if group == "SO3":
        return x.copy()
    a = x[:3, :3]
    if group in ("SE3", "HG3"):
        m = np.zeros((6, 6))
        m[:3, :3] = a
        m[3:, 3:] = a
        m[3:, :3] = skew(x[:3, 3]) @ a
        return m
    if group == "SE23":
        m = np.zeros((9, 9))
        m[:3, :3] = a
        m[3:6, 3:6] = a
        m[6:9, 6:9] = a
        m[3:6, :3] = skew(x[:3, 3]) @ a
        m[6:9, :3] = skew(x[:3, 4]) @ a
        return m
    raise ValueError(f"unknown group {group!r}")


def adjoint_algebra(v: np.ndarray, algebra: str) -> np.ndarray:
    """adjoint matrix ad_v with ad_v w = vee([wedge(v), wedge(w)])."""
    v = np.asarray(v, dtype=float)
    if algebra == "so3":
        return skew(v)
    if algebra in ("se3", "hg3"):
        m = np.zeros((6, 6))
        m[:3, :3] = skew(v[:3])
        m[3:, 3:] = skew(v[:3])
        m[3:, :3] = skew(v[3:6])
        return m
    if algebra == "se23":
        m = np.zeros((9, 9))
        t = skew(v[:3])
        m[:3, :3] = t
        m[3:6, 3:6] = t
        m[6:9, 6:9] = t
        m[3:6, :3] = skew(v[3:6])
        m[6:9, :3] = skew(v[6:9])
        return m
    raise ValueError(f"unknown algebra {algebra!r}")


def left_jacobian(v: np.ndarray, algebra: str) -> np.ndarray:
    """Left Jacobian sum_k ad_v^k / (k+1)! by adaptive series."""
    return phi_series(adjoint_algebra(v, algebra), 1)


def left_jacobian_inv(v: np.ndarray, algebra: str) -> np.ndarray:
    return np.linalg.inv(left_jacobian(v, algebra))


# ---------------------------------------------------------------------------
# Quaternion conversions (scalar-first, unit quaternions)
# ---------------------------------------------------------------------------

def quat_from_matrix(r: np.ndarray) -> np.ndarray:
    """Unit quaternion (qw, qx, qy, qz) of a rotation matrix, qw >= 0."""
    tr = np.trace(r)
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s,
             (r[1, 0] - r[0, 1]) / s]
        )
    else:
        i = int(np.argmax(np.diag(r)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(max(1.0 + r[i, i] - r[j, j] - r[k, k], 0.0)) * 2.0
        q = np.zeros(4)
        q[0] = (r[k, j] - r[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (r[j, i] + r[i, j]) / s
        q[1 + k] = (r[k, i] + r[i, k]) / s
    if q[0] < 0.0:
        q = -q
    return q / np.linalg.norm(q)


def matrix_from_quat(q: np.ndarray) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=float) / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


# ---------------------------------------------------------------------------
# Useful maps
# ---------------------------------------------------------------------------

def ubar(x: np.ndarray) -> np.ndarray:
    """Prefix a zero 3-block: x -> (0_3, x)."""
    x = np.asarray(x, dtype=float)
    return np.concatenate([np.zeros(3), x])


def lbar(x: np.ndarray) -> np.ndarray:
    """Suffix a zero 3-block: x -> (x, 0_3)."""
    x = np.asarray(x, dtype=float)
    return np.concatenate([x, np.zeros(3)])


def omega_map(x: np.ndarray) -> np.ndarray:
    """Extract the velocity column of an SE2(3) element into se2(3): (0,0,a)^."""
    out = np.zeros((5, 5))
    out[:3, 4] = x[:3, 3]
    return out


def pi_map(m: np.ndarray) -> np.ndarray:
    """Drop the third 3-slot of an se2(3) element: (a,b,c)^ -> (a,b)^."""
    out = np.zeros((4, 4))
    out[:3, :3] = m[:3, :3]
    out[:3, 3] = m[:3, 3]
    return out


def pi_vec(v: np.ndarray) -> np.ndarray:
    """Coordinate version of pi_map: 9-vector -> leading 6-vector."""
    return np.asarray(v, dtype=float)[:6]


# ---------------------------------------------------------------------------
# Semi-direct / direct composites
#
# A composite element is (C, gamma_1, ..., gamma_k): a base-group matrix plus
# vector slots.  Each slot carries a linear action rho(C) of the base group
# (identity for direct-product slots) with algebra generator sigma(xi).
# Group product: (C_x C_y, gamma_x + rho(C_x) gamma_y); exponential uses the
# dexp-type series S(sigma(xi)) = sum sigma^k/(k+1)! per slot; the logarithm
# inverts it, matching the matrix realization [[rho(C), gamma], [0, 1]].
# ---------------------------------------------------------------------------


class SlotAction:
    """Linear base-group action on one vector slot."""

    def __init__(self, dim: int, kind: str):
        self.dim = dim
        self.kind = kind  # direct | adbase | adhg | star
        self._eye = np.eye(dim)

    def rho(self, c: np.ndarray, base: str) -> np.ndarray:
        if self.kind == "direct":
            return self._eye
        if self.kind == "adbase":
            return adjoint_group(c, base)
        if self.kind == "adhg":
            # SE2(3) acting on se(3) through its rotation/velocity projection
            return adjoint_group(pi_map_group(c), "HG3")
        if self.kind == "star":
            a = c[:3, :3]
            out = np.zeros((self.dim, self.dim))
            for i in range(self.dim // 3):
                out[3 * i : 3 * i + 3, 3 * i : 3 * i + 3] = a
            return out
        raise ValueError(self.kind)

    def sigma(self, xi: np.ndarray, base: str) -> np.ndarray:
        if self.kind == "direct":
            return np.zeros((self.dim, self.dim))
        if self.kind == "adbase":
            return adjoint_algebra(xi, _GROUP_ALGEBRA[base])
        if self.kind == "adhg":
            return adjoint_algebra(pi_vec(xi), "se3")
        if self.kind == "star":
            t = skew(xi[:3])
            out = np.zeros((self.dim, self.dim))
            for i in range(self.dim // 3):
                out[3 * i : 3 * i + 3, 3 * i : 3 * i + 3] = t
            return out
        raise ValueError(self.kind)


def pi_map_group(c: np.ndarray) -> np.ndarray:
    """SE2(3) -> HG(3) projection dropping the position column."""
    out = np.eye(4)
    out[:3, :3] = c[:3, :3]
    out[:3, 3] = c[:3, 3]
    return out


class CompositeSpec:
    """Base group plus ordered vector slots; the group-calculus table."""

    def __init__(self, base: str, slots: list[SlotAction]):
        self.base = base
        self.base_dim = _ALGEBRA_DIMS[_GROUP_ALGEBRA[base]]
        self.slots = slots
        self.dim = self.base_dim + sum(s.dim for s in slots)

    def split(self, v: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        parts = []
        k = self.base_dim
        for s in self.slots:
            parts.append(np.asarray(v[k : k + s.dim], dtype=float))
            k += s.dim
        return np.asarray(v[: self.base_dim], dtype=float), parts

    def identity(self) -> tuple[np.ndarray, list[np.ndarray]]:
        return identity_group(self.base), [np.zeros(s.dim) for s in self.slots]

    def compose(self, x, y):
        cx, gx = x
        cy, gy = y
        return cx @ cy, [
            gx[i] + s.rho(cx, self.base) @ gy[i] for i, s in enumerate(self.slots)
        ]

    def inverse(self, x):
        c, g = x
        cinv = inv_group(c, self.base)
        return cinv, [
            -(s.rho(cinv, self.base) @ g[i]) for i, s in enumerate(self.slots)
        ]

    def exp(self, v: np.ndarray):
        xi, etas = self.split(np.asarray(v, dtype=float))
        c = exp_group(xi, self.base)
        gammas = [
            phi_series(s.sigma(xi, self.base), 1) @ etas[i]
            for i, s in enumerate(self.slots)
        ]
        return c, gammas

    def log(self, x) -> np.ndarray:
        c, g = x
        xi = log_group(c, self.base)
        parts = [xi]
        for i, s in enumerate(self.slots):
            parts.append(
                np.linalg.solve(phi_series(s.sigma(xi, self.base), 1), g[i])
            )
        return np.concatenate(parts)

    def _slot_coupling(self, s: SlotAction, gamma: np.ndarray) -> np.ndarray:
        """Matrix M with M xi = -sigma(xi) gamma, in base-algebra coordinates."""
        blk = np.zeros((s.dim, self.base_dim))
        if s.kind == "adbase":
            blk[:, :] = adjoint_algebra(gamma, _GROUP_ALGEBRA[self.base])[
                :, : self.base_dim
            ]
        elif s.kind == "adhg":
            # -ad_{pi(xi)} gamma = ad_gamma pi(xi)
            blk[:, :6] = adjoint_algebra(gamma, "se3")
        elif s.kind == "star":
            for i in range(s.dim // 3):
                blk[3 * i : 3 * i + 3, :3] = skew(gamma[3 * i : 3 * i + 3])
        return blk

    def adjoint(self, x) -> np.ndarray:
        """Blockwise Adjoint: [[Ad_C, 0], [d/dxi -sigma(Ad_C xi) gamma, rho(C)]]."""
        c, g = x
        n = self.dim
        out = np.zeros((n, n))
        adc = adjoint_group(c, self.base)
        out[: self.base_dim, : self.base_dim] = adc
        row = self.base_dim
        for i, s in enumerate(self.slots):
            out[row : row + s.dim, row : row + s.dim] = s.rho(c, self.base)
            if s.kind != "direct":
                out[row : row + s.dim, : self.base_dim] = (
                    self._slot_coupling(s, g[i]) @ adc
                )
            row += s.dim
        return out

    def adjoint_algebra(self, v: np.ndarray) -> np.ndarray:
        """ad matrix: ad_(xi,eta)(xi',eta') = ([xi,xi'], sigma(xi) eta' - sigma(xi') eta)."""
        xi, etas = self.split(np.asarray(v, dtype=float))
        n = self.dim
        out = np.zeros((n, n))
        out[: self.base_dim, : self.base_dim] = adjoint_algebra(
            xi, _GROUP_ALGEBRA[self.base]
        )
        row = self.base_dim
        for i, s in enumerate(self.slots):
            out[row : row + s.dim, row : row + s.dim] = s.sigma(xi, self.base)
            if s.kind != "direct":
                out[row : row + s.dim, : self.base_dim] = self._slot_coupling(s, etas[i])
            row += s.dim
        return out

    def realization(self, x) -> np.ndarray:
        """Matrix realization [[rho(C) blockdiag, gamma], [0, I]] (tests/oracles)."""
        c, g = x
        vdim = sum(s.dim for s in self.slots)
        n = vdim + 1
        out = np.eye(n)
        row = 0
        for i, s in enumerate(self.slots):
            out[row : row + s.dim, row : row + s.dim] = s.rho(c, self.base)
            out[row : row + s.dim, vdim] = g[i]
            row += s.dim
        return out
