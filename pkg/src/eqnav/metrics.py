"""Consistency metrics (ANEES, NIS aggregation, RMSE) and the position
linearization-error sweep comparing two symmetries on a grid of error
magnitudes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import filters, ins, lie, symmetry
from .errors import ChartDomainError, SingularCovarianceError
from .ins import InsInput, InsState
from .symmetry import SymmetryKind


def anees(errors: np.ndarray, covariances: np.ndarray) -> float:
    """Average normalized estimation error squared over runs.

    errors: (M, n) per-run error vectors; covariances: (M, n, n).
    """
    errors = np.atleast_2d(np.asarray(errors, dtype=float))
    covariances = np.asarray(covariances, dtype=float)
    if covariances.ndim == 2:
        covariances = covariances[None, ...]
    m, n = errors.shape
    total = 0.0
    for i in range(m):
        cov = covariances[i if covariances.shape[0] > 1 else 0]
        if np.linalg.cond(cov) > 1e14:
            raise SingularCovarianceError("covariance not invertible")
        total += float(errors[i] @ np.linalg.solve(cov, errors[i]))
    return total / (n * m)


def nis(residual: np.ndarray, innovation_cov: np.ndarray) -> float:
    residual = np.asarray(residual, dtype=float)
    return float(residual @ np.linalg.solve(innovation_cov, residual)) / residual.size


@dataclass
class MetricSeries:
    t: np.ndarray
    att_deg: np.ndarray
    vel: np.ndarray
    pos: np.ndarray
    bw: np.ndarray
    ba: np.ndarray


def rmse_blocks(truth: list[InsState], estimates: list[InsState], t: np.ndarray | None = None) -> MetricSeries:
    """Blockwise errors of one aligned series; attitude via the geodesic angle.

    For Monte-Carlo aggregation square and average these across runs per
    timestamp; a single run yields plain error magnitudes.
    """
    if len(truth) != len(estimates):
        raise ValueError("truth and estimate series must be aligned")
    k = len(truth)
    att = np.zeros(k)
    vel = np.zeros(k)
    pos = np.zeros(k)
    bw = np.zeros(k)
    ba = np.zeros(k)
    for i, (xt, xe) in enumerate(zip(truth, estimates)):
        att[i] = np.rad2deg(np.linalg.norm(lie.log_so3(xt.R @ xe.R.T)))
        vel[i] = np.linalg.norm(xt.v - xe.v)
        pos[i] = np.linalg.norm(xt.p - xe.p)
        bw[i] = np.linalg.norm(xt.b_omega - xe.b_omega)
        ba[i] = np.linalg.norm(xt.b_acc - xe.b_acc)
    if t is None:
        t = np.arange(k, dtype=float)
    return MetricSeries(t, att, vel, pos, bw, ba)


# ---------------------------------------------------------------------------
# Position linearization-error sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepGrid:
    """Log-spaced grid over attitude-error norm and one other error norm."""

    axis: str = "bias"              # bias | position | velocity
    att_range: tuple = (1e-3, np.pi - 0.1)
    axis_range: tuple = (1e-3, 1.0)
    size: tuple = (64, 64)
    seed: int = 0
    # held error magnitudes for the slots not being swept
    nominal: dict = field(default_factory=dict)


@dataclass
class SweepResult:
    grid: SweepGrid
    att_norms: np.ndarray
    axis_norms: np.ndarray
    l_a: np.ndarray   # (n_att, n_axis) linearization error of kind A
    l_b: np.ndarray
    kind_a: SymmetryKind
    kind_b: SymmetryKind


_AXIS_SLOTS = {"bias": "bw", "position": "p", "velocity": "v"}


def _error_state(
    kind: SymmetryKind,
    att: float,
    axis_slot: str,
    axis_val: float,
    dirs: dict,
    nominal: dict,
) -> InsState:
    vals = {"v": 0.0, "p": 0.0, "bw": 0.0, "ba": 0.0}
    vals.update(nominal)
    vals[axis_slot] = axis_val
    e = ins.make_state(
        lie.exp_so3(att * dirs["R"]),
        vals["v"] * dirs["v"],
        vals["p"] * dirs["p"],
        vals["bw"] * dirs["bw"],
        vals["ba"] * dirs["ba"],
    )
    return e.with_virtual() if kind is SymmetryKind.TG else e


def _hover_input(kind: SymmetryKind) -> InsInput:
    # truth at the identity: accelerometer reads -g
    return InsInput(omega=np.zeros(3), acc=-ins.GRAVITY.copy())


def position_lin_error(
    kind: SymmetryKind, e: InsState, u: InsInput, s: float = 1e-6
) -> float:
    """Chart-independent norm of the position-row linearization residual.

    The residual eps_dot - A eps is pushed back to the manifold through the
    differentials of the chart inverse and the action of the observer element,
    and the position component is measured there.
    """
    xhat = symmetry.inverse(symmetry.origin_inverse(kind, e))
    eps = symmetry.chart(kind, e)
    a = filters.state_matrix(kind, xhat, u)
    r = filters.error_flow(kind, xhat, u, eps) - a @ eps

    def pos_at(t: float) -> np.ndarray:
        xi = symmetry.act_state(kind, xhat, symmetry.chart_inv(kind, eps + t * r))
        return xi.p

    return float(np.linalg.norm((pos_at(s) - pos_at(-s)) / (2.0 * s)))


def linearization_sweep(
    kind_a: SymmetryKind, kind_b: SymmetryKind, grid: SweepGrid
) -> SweepResult:
    """Evaluate both kinds' position linearization error over the grid.

    Cells whose error state leaves the chart domain are recorded as NaN.
    """
    if grid.axis not in _AXIS_SLOTS:
        raise ValueError(f"unknown sweep axis {grid.axis!r}")
    slot = _AXIS_SLOTS[grid.axis]
    rng = np.random.default_rng(grid.seed)
    dirs = {}
    for name in ("R", "v", "p", "bw", "ba"):
        d = rng.standard_normal(3)
        dirs[name] = d / np.linalg.norm(d)

    att_norms = np.geomspace(grid.att_range[0], grid.att_range[1], grid.size[0])
    axis_norms = np.geomspace(grid.axis_range[0], grid.axis_range[1], grid.size[1])
    out = {
        kind_a: np.full(grid.size, np.nan),
        kind_b: np.full(grid.size, np.nan),
    }
    for kind in (kind_a, kind_b):
        u = _hover_input(kind)
        for i, att in enumerate(att_norms):
            for j, val in enumerate(axis_norms):
                e = _error_state(kind, att, slot, val, dirs, grid.nominal)
                try:
                    out[kind][i, j] = position_lin_error(kind, e, u)
                except ChartDomainError:
                    continue
    return SweepResult(
        grid, att_norms, axis_norms, out[kind_a], out[kind_b], kind_a, kind_b
    )
