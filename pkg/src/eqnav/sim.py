"""Synthetic trajectory and sensor generation plus the Monte-Carlo runner.

Truth generation: an analytic sum-of-sinusoids shape supplies body rates and
specific force sampled at IMU rate; the ground-truth trajectory is then the
exact piecewise-constant-input integration of those samples, so noise-free
logs are exactly consistent with the continuous dynamics over each interval.
Initial conditions come from the prior draw, biases random-walk at IMU rate.

All randomness is drawn from named Philox substreams keyed on
(seed, run index, stream), so adding a stream never perturbs the others and
every artifact is reproducible bit for bit.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import filters, ins, lie, symmetry
from .filters import FilterState, NoiseConfig, PositionMeasurement
from .ins import InsInput, InsState
from .symmetry import SymmetryKind

_STREAMS = {"prior": 0, "bias": 1, "imu": 2, "gnss": 3}


def _stream(seed: int, run: int, name: str) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(run, _STREAMS[name])))
    )


@dataclass(frozen=True)
class TrajectorySpec:
    duration: float = 30.0
    imu_rate: int = 200
    gnss_rate: int = 10
    # per-axis sinusoid parameters for Euler angles (rad) and position (m)
    angle_amp: tuple = (0.9, 0.8, 1.1)
    angle_freq: tuple = (0.45, 0.35, 0.25)
    pos_amp: tuple = (4.0, 3.0, 1.5)
    pos_freq: tuple = (0.5, 0.4, 0.6)
    seed: int = 0

    def __post_init__(self):
        if self.imu_rate <= 0 or self.gnss_rate <= 0:
            raise ValueError("rates must be positive")
        if self.imu_rate % self.gnss_rate != 0:
            raise ValueError("imu_rate must be a multiple of gnss_rate")


@dataclass(frozen=True)
class NoiseSpec:
    gyro_noise: float = 0.005       # rad/s/sqrt(Hz)
    accel_noise: float = 0.01       # m/s^2/sqrt(Hz)
    gyro_walk: float = 0.01         # rad/s*sqrt(s), bias random walk
    accel_walk: float = 0.01        # m/s^2*sqrt(s)
    pos_sigma: float = 0.2          # m per axis
    prior_att_deg: float = 20.0     # deg per axis
    prior_pos: float = 1.0          # m per axis
    prior_vel: float = 0.3          # m/s per axis
    prior_gyro_bias: float = 0.02   # rad/s per axis
    prior_accel_bias: float = 0.05  # m/s^2 per axis
    virtual_walk: float = 0.01      # process noise of the virtual bias state
    virtual_prior: float = 0.1      # m/s per axis
    virtual_meas_sigma: float = 0.1   # pseudo-measurement sigma on b_nu
    nu_noise: float = 0.0           # PSD of the (zero) virtual input


@dataclass(frozen=True)
class SensorLog:
    imu_t: np.ndarray          # (N,), sample k valid over [t_k, t_{k+1})
    imu_omega: np.ndarray      # (N, 3) measured angular rate
    imu_acc: np.ndarray        # (N, 3) measured specific force
    gnss_t: np.ndarray         # (M,)
    gnss_pos: np.ndarray       # (M, 3)
    truth_t: np.ndarray        # (N + 1,)
    truth_R: np.ndarray        # (N + 1, 3, 3)
    truth_v: np.ndarray
    truth_p: np.ndarray
    truth_bw: np.ndarray
    truth_ba: np.ndarray

    def truth_state(self, k: int, with_virtual: bool = False) -> InsState:
        s = ins.make_state(
            self.truth_R[k], self.truth_v[k], self.truth_p[k],
            self.truth_bw[k], self.truth_ba[k],
        )
        return s.with_virtual() if with_virtual else s


# ---------------------------------------------------------------------------
# Analytic shape
# ---------------------------------------------------------------------------

_EX = np.array([1.0, 0.0, 0.0])
_EY = np.array([0.0, 1.0, 0.0])
_EZ = np.array([0.0, 0.0, 1.0])


def _shape_rotation(spec: TrajectorySpec, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Shape attitude R_s(t) (identity at t=0) and body rate omega_s(t)."""
    amp = np.asarray(spec.angle_amp)
    w = 2.0 * np.pi * np.asarray(spec.angle_freq)
    ang = amp * np.sin(w * t)
    angd = amp * w * np.cos(w * t)
    rx = lie.exp_so3(ang[0] * _EX)
    ry = lie.exp_so3(ang[1] * _EY)
    rz = lie.exp_so3(ang[2] * _EZ)
    r = rz @ ry @ rx
    # Euler-rate to body-rate for the z-y-x composition
    omega = angd[0] * _EX + angd[1] * (rx.T @ _EY) + angd[2] * (rx.T @ ry.T @ _EZ)
    return r, omega


def _shape_translation(spec: TrajectorySpec, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Shape velocity and acceleration (both zero at t=0)."""
    amp = np.asarray(spec.pos_amp)
    w = 2.0 * np.pi * np.asarray(spec.pos_freq)
    vel = amp * w * np.sin(w * t)
    acc = amp * w * w * np.cos(w * t)
    return vel, acc


def true_rates(
    spec: TrajectorySpec, t: float, delta_r: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free body rate and specific force of the composed trajectory."""
    r_s, omega = _shape_rotation(spec, t)
    _, acc_w = _shape_translation(spec, t)
    acc_body = r_s.T @ (acc_w - delta_r.T @ ins.GRAVITY)
    return omega, acc_body


# ---------------------------------------------------------------------------
# Prior
# ---------------------------------------------------------------------------

def sample_prior(
    noise: NoiseSpec, rng: np.random.Generator | int
) -> tuple[InsState, np.ndarray]:
    """Draw the truth initial state around the identity filter initialization.

    Returns the drawn state and the matching 15x15 prior covariance in the
    common (att, vel, pos, bw, ba) ordering.
    """
    if isinstance(rng, (int, np.integer)):
        rng = _stream(int(rng), 0, "prior")
    satt = np.deg2rad(noise.prior_att_deg)
    theta = satt * rng.standard_normal(3)
    dv = noise.prior_vel * rng.standard_normal(3)
    dp = noise.prior_pos * rng.standard_normal(3)
    bw = noise.prior_gyro_bias * rng.standard_normal(3)
    ba = noise.prior_accel_bias * rng.standard_normal(3)
    xi0 = ins.make_state(lie.exp_so3(theta), dv, dp, bw, ba)
    diag = np.concatenate(
        [
            np.full(3, satt**2),
            np.full(3, noise.prior_vel**2),
            np.full(3, noise.prior_pos**2),
            np.full(3, noise.prior_gyro_bias**2),
            np.full(3, noise.prior_accel_bias**2),
        ]
    )
    return xi0, np.diag(diag)


_SIGMA0_CACHE: dict = {}
_SIGMA0_SAMPLES = 8192


def sigma0_for_kind(kind: SymmetryKind, noise: NoiseSpec) -> np.ndarray:
    """Prior covariance expressed in the kind's own error chart.

    The shared prior is drawn in physical coordinates; each geometry sees it
    through its chart at the identity observer, so the covariance is the
    sampled pushforward of the common draw (deterministic internal seed).
    The virtual-bias block keeps a variance floor since the drawn error there
    is a deterministic function of the other states.
    """
    key = (kind, noise)
    if key in _SIGMA0_CACHE:
        return _SIGMA0_CACHE[key]
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(20240711)))
    n = symmetry.STATE_DIMS[kind]
    eps = np.empty((_SIGMA0_SAMPLES, n))
    with_virtual = kind is SymmetryKind.TG
    for i in range(_SIGMA0_SAMPLES):
        xi0, _ = sample_prior(noise, rng)
        if with_virtual:
            xi0 = xi0.with_virtual()
        eps[i] = symmetry.chart(kind, xi0)
    sigma = eps.T @ eps / _SIGMA0_SAMPLES
    sigma = 0.5 * (sigma + sigma.T)
    if with_virtual:
        sigma[15:18, 15:18] += noise.virtual_prior**2 * np.eye(3)
    sigma += 1e-12 * np.eye(n)
    _SIGMA0_CACHE[key] = sigma
    return sigma


def noise_config(kind: SymmetryKind, noise: NoiseSpec) -> NoiseConfig:
    """Input PSD and measurement covariances matched to the kind's input layout."""
    gyro = np.full(3, noise.gyro_noise**2)
    acc = np.full(3, noise.accel_noise**2)
    nu = np.full(3, noise.nu_noise**2)
    wg = np.full(3, noise.gyro_walk**2)
    wa = np.full(3, noise.accel_walk**2)
    wn = np.full(3, noise.virtual_walk**2)
    if kind is SymmetryKind.TG:
        q = np.concatenate([gyro, acc, nu, wg, wa, wn])
    elif kind is SymmetryKind.DP:
        q = np.concatenate([gyro, acc, nu, wg, wa])
    else:
        q = np.concatenate([gyro, acc, wg, wa])
    return NoiseConfig(
        q_input=np.diag(q),
        r_pos=noise.pos_sigma**2 * np.eye(3),
        r_virtual=noise.virtual_meas_sigma**2 * np.eye(3),
    )


# ---------------------------------------------------------------------------
# Sensor log generation
# ---------------------------------------------------------------------------

def generate(
    spec: TrajectorySpec,
    noise: NoiseSpec,
    run: int = 0,
    noise_free: bool = False,
    xi0: InsState | None = None,
) -> SensorLog:
    """Simulate one run; deterministic in (spec.seed, run)."""
    dt = 1.0 / spec.imu_rate
    n = int(round(spec.duration * spec.imu_rate))
    stride = spec.imu_rate // spec.gnss_rate

    if xi0 is None:
        if noise_free:
            xi0 = ins.origin_state()
        else:
            xi0, _ = sample_prior(noise, _stream(spec.seed, run, "prior"))
    delta_r = xi0.R.copy()

    rng_bias = _stream(spec.seed, run, "bias")
    rng_imu = _stream(spec.seed, run, "imu")
    rng_gnss = _stream(spec.seed, run, "gnss")
    sq = np.sqrt(dt)
    sd_gyro = noise.gyro_noise / sq  # white noise density -> per-sample sigma
    sd_acc = noise.accel_noise / sq

    imu_t = np.arange(n) * dt
    imu_w = np.zeros((n, 3))
    imu_a = np.zeros((n, 3))
    truth_t = np.arange(n + 1) * dt
    truth_r = np.zeros((n + 1, 3, 3))
    truth_v = np.zeros((n + 1, 3))
    truth_p = np.zeros((n + 1, 3))
    truth_bw = np.zeros((n + 1, 3))
    truth_ba = np.zeros((n + 1, 3))

    xi = xi0
    bw = xi0.b_omega.copy()
    ba = xi0.b_acc.copy()
    for k in range(n + 1):
        truth_r[k] = xi.R
        truth_v[k] = xi.v
        truth_p[k] = xi.p
        truth_bw[k] = bw
        truth_ba[k] = ba
        if k == n:
            break
        omega, acc = true_rates(spec, imu_t[k], delta_r)
        if noise_free:
            imu_w[k] = omega + bw
            imu_a[k] = acc + ba
        else:
            imu_w[k] = omega + bw + sd_gyro * rng_imu.standard_normal(3)
            imu_a[k] = acc + ba + sd_acc * rng_imu.standard_normal(3)
        xi = ins.step_constant_input(xi, omega, acc, dt)
        if not noise_free:
            bw = bw + noise.gyro_walk * sq * rng_bias.standard_normal(3)
            ba = ba + noise.accel_walk * sq * rng_bias.standard_normal(3)

    n_gnss = n // stride
    gnss_t = np.zeros(n_gnss)
    gnss_p = np.zeros((n_gnss, 3))
    for j in range(1, n_gnss + 1):
        k = j * stride
        gnss_t[j - 1] = truth_t[k]
        if noise_free:
            gnss_p[j - 1] = truth_p[k]
        else:
            gnss_p[j - 1] = truth_p[k] + noise.pos_sigma * rng_gnss.standard_normal(3)

    return SensorLog(
        imu_t, imu_w, imu_a, gnss_t, gnss_p,
        truth_t, truth_r, truth_v, truth_p, truth_bw, truth_ba,
    )


# ---------------------------------------------------------------------------
# Filter replay
# ---------------------------------------------------------------------------

@dataclass
class FilterOptions:
    output_mode: str = "star"       # "star" where available, else linear
    virtual_update: bool = True     # apply the b_nu pseudo-measurement (TG)


@dataclass
class RunRecord:
    kind: SymmetryKind
    t: np.ndarray
    nees: np.ndarray
    att_err: np.ndarray   # rad
    vel_err: np.ndarray
    pos_err: np.ndarray
    bw_err: np.ndarray
    ba_err: np.ndarray
    nis: np.ndarray
    est: list
    ok: bool = True
    message: str = ""


def run_filter_on_log(
    kind: SymmetryKind,
    log: SensorLog,
    noise: NoiseSpec,
    opts: FilterOptions | None = None,
    record_estimates: bool = False,
) -> RunRecord:
    """Replay one filter over a sensor log, recording at GNSS epochs."""
    opts = opts or FilterOptions()
    cfg = noise_config(kind, noise)
    fs = filters.filter_init(kind, sigma0_for_kind(kind, noise))
    dt = float(log.imu_t[1] - log.imu_t[0]) if len(log.imu_t) > 1 else 0.0
    n = len(log.imu_t)
    with_virtual = kind is SymmetryKind.TG

    epochs_t = [0.0]
    nees = []
    att, vel, pos, bwe, bae = [], [], [], [], []
    nis = [np.nan]
    est_states = []

    def record(k: int, nis_val: float) -> None:
        xi_true = log.truth_state(k, with_virtual)
        eps = symmetry.chart(kind, symmetry.error_state(kind, fs.x, xi_true))
        nees.append(float(eps @ np.linalg.solve(fs.sigma, eps)) / eps.size)
        xihat = filters.state_estimate(fs)
        att.append(np.linalg.norm(lie.log_so3(xi_true.R @ xihat.R.T)))
        vel.append(np.linalg.norm(xi_true.v - xihat.v))
        pos.append(np.linalg.norm(xi_true.p - xihat.p))
        bwe.append(np.linalg.norm(xi_true.b_omega - xihat.b_omega))
        bae.append(np.linalg.norm(xi_true.b_acc - xihat.b_acc))
        if record_estimates:
            est_states.append((log.truth_t[k], xihat, np.diag(fs.sigma).copy()))

    try:
        record(0, np.nan)
        g_idx = 0
        for k in range(n):
            u = InsInput(omega=log.imu_omega[k], acc=log.imu_acc[k])
            fs = filters.propagate(fs, u, dt, cfg)
            if g_idx < len(log.gnss_t) and abs(fs.t - log.gnss_t[g_idx]) < 0.5 * dt:
                meas = PositionMeasurement(log.gnss_pos[g_idx], log.gnss_t[g_idx])
                res = filters.update_position(fs, meas, cfg, mode=opts.output_mode)
                fs = res.state
                if with_virtual and opts.virtual_update:
                    fs = filters.update_virtual_bias(fs, cfg).state
                g_idx += 1
                epochs_t.append(fs.t)
                nis.append(res.nis)
                record(k + 1, res.nis)
    except Exception as exc:  # recorded per run, not fatal to a batch
        return RunRecord(
            kind, np.asarray(epochs_t[: len(nees)]), np.asarray(nees),
            np.asarray(att), np.asarray(vel), np.asarray(pos),
            np.asarray(bwe), np.asarray(bae), np.asarray(nis[: len(nees)]),
            est_states, ok=False, message=f"{type(exc).__name__}: {exc}",
        )

    return RunRecord(
        kind, np.asarray(epochs_t), np.asarray(nees),
        np.asarray(att), np.asarray(vel), np.asarray(pos),
        np.asarray(bwe), np.asarray(bae), np.asarray(nis),
        est_states,
    )


# ---------------------------------------------------------------------------
# Monte-Carlo
# ---------------------------------------------------------------------------

@dataclass
class RunArtifacts:
    kinds: list
    t: np.ndarray
    anees: dict            # kind -> (K,) average NEES over runs
    rmse: dict             # kind -> dict block -> (K,)
    nis_mean: dict         # kind -> float
    anees_transient: dict  # kind -> float
    anees_asymptotic: dict
    failures: list
    runs: int


def _mc_worker(args):
    spec, noise, kinds, run, opts = args
    log = generate(spec, noise, run=run)
    out = {}
    for kind in kinds:
        out[kind] = run_filter_on_log(kind, log, noise, opts)
    return run, out


def run_monte_carlo(
    spec: TrajectorySpec,
    noise: NoiseSpec,
    kinds: list[SymmetryKind],
    runs: int,
    opts: FilterOptions | None = None,
    n_jobs: int | None = None,
) -> RunArtifacts:
    """Independent runs over shared per-run logs; deterministic aggregation."""
    if runs < 1:
        raise ValueError("need at least one run")
    opts = opts or FilterOptions()
    if n_jobs is None:
        n_jobs = int(os.environ.get("EQNAV_JOBS", "0")) or (os.cpu_count() or 1)
    tasks = [(spec, noise, tuple(kinds), r, opts) for r in range(runs)]
    results: dict[int, dict] = {}
    if n_jobs > 1 and runs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            for run, out in ex.map(_mc_worker, tasks):
                results[run] = out
    else:
        for task in tasks:
            run, out = _mc_worker(task)
            results[run] = out

    failures = []
    per_kind: dict[SymmetryKind, list[RunRecord]] = {k: [] for k in kinds}
    for run in range(runs):
        for kind in kinds:
            rec = results[run][kind]
            if rec.ok:
                per_kind[kind].append(rec)
            else:
                failures.append((run, kind, rec.message))

    t_axis = None
    anees, rmse, nis_mean, a_t, a_a = {}, {}, {}, {}, {}
    for kind in kinds:
        recs = per_kind[kind]
        if not recs:
            continue
        kmin = min(len(r.nees) for r in recs)
        t_axis = recs[0].t[:kmin]
        nees = np.stack([r.nees[:kmin] for r in recs])
        anees[kind] = nees.mean(axis=0)
        rmse[kind] = {
            "att_deg": np.rad2deg(
                np.sqrt(np.stack([r.att_err[:kmin] ** 2 for r in recs]).mean(axis=0))
            ),
            "vel": np.sqrt(np.stack([r.vel_err[:kmin] ** 2 for r in recs]).mean(axis=0)),
            "pos": np.sqrt(np.stack([r.pos_err[:kmin] ** 2 for r in recs]).mean(axis=0)),
            "bw": np.sqrt(np.stack([r.bw_err[:kmin] ** 2 for r in recs]).mean(axis=0)),
            "ba": np.sqrt(np.stack([r.ba_err[:kmin] ** 2 for r in recs]).mean(axis=0)),
        }
        nis_all = np.concatenate([r.nis[1:kmin] for r in recs])
        nis_mean[kind] = float(np.nanmean(nis_all)) if len(nis_all) else float("nan")
        half = kmin // 2
        a_t[kind] = float(anees[kind][:half].mean())
        a_a[kind] = float(anees[kind][half:].mean())

    return RunArtifacts(
        kinds=list(kinds), t=t_axis, anees=anees, rmse=rmse, nis_mean=nis_mean,
        anees_transient=a_t, anees_asymptotic=a_a, failures=failures, runs=runs,
    )
