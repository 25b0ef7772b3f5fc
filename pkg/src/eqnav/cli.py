"""Command-line front end: simulate | run | compare | check.

Configuration comes from a JSON file plus flag overrides (flags win); the
effective configuration is echoed into the output directory.  Exit codes:
0 ok, 1 usage error, 2 data error, 3 property failure.  EQNAV_JOBS bounds the
worker count for Monte-Carlo batches.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import filters, ins, lie, metrics, selftest, sim, symmetry
from .symmetry import FILTER_NAMES, SymmetryKind

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PROPERTY = 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


_KIND_ALIASES = {
    "so3xr12": SymmetryKind.SO3xR12,
    "mekf": SymmetryKind.SO3xR12,
    "es_se23xr6": SymmetryKind.ES_SE23xR6,
    "iekf": SymmetryKind.ES_SE23xR6,
    "tfg": SymmetryKind.TFG,
    "tfg-iekf": SymmetryKind.TFG,
    "tg": SymmetryKind.TG,
    "tg-eqf": SymmetryKind.TG,
    "dp": SymmetryKind.DP,
    "dp-eqf": SymmetryKind.DP,
    "sd": SymmetryKind.SD,
    "sd-eqf": SymmetryKind.SD,
}

ALL_KINDS = list(SymmetryKind)


def parse_kind(name: str) -> SymmetryKind:
    kind = _KIND_ALIASES.get(name.strip().lower())
    if kind is None:
        valid = ", ".join(k.value for k in SymmetryKind)
        raise DataError(f"unknown kind {name!r}; valid kinds: {valid}")
    return kind


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

_DEFAULT_CONFIG = {
    "seed": 0,
    "runs": 8,
    "kinds": [k.value for k in SymmetryKind],
    "output_mode": "star",
    "virtual_bias_update": True,
    "trajectory": {
        f.name: (list(v) if isinstance(v := getattr(sim.TrajectorySpec(), f.name), tuple) else v)
        for f in dataclasses.fields(sim.TrajectorySpec)
        if f.name != "seed"
    },
    "noise": {
        f.name: getattr(sim.NoiseSpec(), f.name) for f in dataclasses.fields(sim.NoiseSpec)
    },
    "sweep": None,
}


def _merge_checked(base: dict, override: dict, path: str = "") -> dict:
    out = dict(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise DataError(f"unknown config key: {where}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge_checked(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def load_config(path: str | None, overrides: dict) -> dict:
    cfg = json.loads(json.dumps(_DEFAULT_CONFIG))
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                user = json.load(fh)
        except FileNotFoundError as exc:
            raise DataError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"config parse error in {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise DataError("config root must be a JSON object")
        cfg = _merge_checked(cfg, user)
    for key, value in overrides.items():
        if value is None:
            continue
        if "." in key:
            outer, inner = key.split(".", 1)
            cfg[outer][inner] = value
        else:
            cfg[key] = value
    return cfg


def trajectory_spec(cfg: dict) -> sim.TrajectorySpec:
    kw = dict(cfg["trajectory"])
    for key in ("angle_amp", "angle_freq", "pos_amp", "pos_freq"):
        kw[key] = tuple(kw[key])
    return sim.TrajectorySpec(seed=cfg["seed"], **kw)


def noise_spec(cfg: dict) -> sim.NoiseSpec:
    return sim.NoiseSpec(**cfg["noise"])


def config_kinds(cfg: dict) -> list[SymmetryKind]:
    return [parse_kind(k) for k in cfg["kinds"]]


def echo_config(cfg: dict, out_dir: str) -> None:
    with open(os.path.join(out_dir, "effective-config.json"), "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# CSV schemas
# ---------------------------------------------------------------------------

IMU_HEADER = "t,wx,wy,wz,ax,ay,az"
GNSS_HEADER = "t,px,py,pz"
TRUTH_HEADER = "t,qw,qx,qy,qz,vx,vy,vz,px,py,pz,bwx,bwy,bwz,bax,bay,baz"


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: str, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def write_log(log: sim.SensorLog, out_dir: str) -> None:
    _write_csv(
        os.path.join(out_dir, "imu.csv"), IMU_HEADER,
        (np.concatenate([[t], w, a]) for t, w, a in zip(log.imu_t, log.imu_omega, log.imu_acc)),
    )
    _write_csv(
        os.path.join(out_dir, "gnss.csv"), GNSS_HEADER,
        (np.concatenate([[t], p]) for t, p in zip(log.gnss_t, log.gnss_pos)),
    )

    def truth_rows():
        for k in range(len(log.truth_t)):
            yield np.concatenate(
                [[log.truth_t[k]], lie.quat_from_matrix(log.truth_R[k]),
                 log.truth_v[k], log.truth_p[k], log.truth_bw[k], log.truth_ba[k]]
            )

    _write_csv(os.path.join(out_dir, "truth.csv"), TRUTH_HEADER, truth_rows())


def _read_csv(path: str, header: str) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            first = fh.readline().rstrip("\n")
            if first != header:
                raise DataError(f"{path}:1: expected header {header!r}, got {first!r}")
            rows = []
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                try:
                    rows.append([float(x) for x in line.split(",")])
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: {exc}") from exc
                if len(rows[-1]) != header.count(",") + 1:
                    raise DataError(f"{path}:{lineno}: wrong column count")
    except FileNotFoundError as exc:
        raise DataError(f"missing file: {path}") from exc
    if not rows:
        raise DataError(f"{path}: no data rows")
    out = np.asarray(rows)
    if np.any(np.diff(out[:, 0]) <= 0):
        bad = int(np.argmax(np.diff(out[:, 0]) <= 0)) + 3
        raise DataError(f"{path}:{bad}: timestamps not strictly increasing")
    return out


def read_log(data_dir: str) -> tuple[sim.SensorLog, bool]:
    """Load a dataset directory; truth.csv is optional (degraded mode)."""
    imu = _read_csv(os.path.join(data_dir, "imu.csv"), IMU_HEADER)
    gnss = _read_csv(os.path.join(data_dir, "gnss.csv"), GNSS_HEADER)
    truth_path = os.path.join(data_dir, "truth.csv")
    has_truth = os.path.exists(truth_path)
    n = imu.shape[0]
    if has_truth:
        truth = _read_csv(truth_path, TRUTH_HEADER)
        if truth.shape[0] < n + 1:
            raise DataError("truth.csv must cover every imu timestamp")
        truth_r = np.stack([lie.matrix_from_quat(q) for q in truth[:, 1:5]])
        log = sim.SensorLog(
            imu[:, 0], imu[:, 1:4], imu[:, 4:7], gnss[:, 0], gnss[:, 1:4],
            truth[:, 0], truth_r, truth[:, 5:8], truth[:, 8:11],
            truth[:, 11:14], truth[:, 14:17],
        )
    else:
        # placeholder truth (identity) so the log container stays uniform
        t = np.concatenate([imu[:, 0], [imu[-1, 0] + (imu[1, 0] - imu[0, 0])]])
        z = np.zeros((n + 1, 3))
        log = sim.SensorLog(
            imu[:, 0], imu[:, 1:4], imu[:, 4:7], gnss[:, 0], gnss[:, 1:4],
            t, np.tile(np.eye(3), (n + 1, 1, 1)), z, z, z, z,
        )
    return log, has_truth


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = load_config(args.config, _common_overrides(args))
    os.makedirs(args.out, exist_ok=True)
    log = sim.generate(trajectory_spec(cfg), noise_spec(cfg), run=0)
    write_log(log, args.out)
    echo_config(cfg, args.out)
    print(f"wrote imu.csv gnss.csv truth.csv to {args.out}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_config(args.config, _common_overrides(args))
    kinds = config_kinds(cfg)
    log, has_truth = read_log(args.data)
    os.makedirs(args.out, exist_ok=True)
    noise = noise_spec(cfg)
    opts = sim.FilterOptions(cfg["output_mode"], cfg["virtual_bias_update"])

    est_rows = []
    metric_rows = []
    for kind in kinds:
        rec = sim.run_filter_on_log(kind, log, noise, opts, record_estimates=True)
        if not rec.ok:
            raise DataError(f"{FILTER_NAMES[kind]} failed: {rec.message}")
        for (t, xi, sd) in rec.est:
            est_rows.append(
                [t, kind.value] + list(lie.quat_from_matrix(xi.R)) + list(xi.v)
                + list(xi.p) + list(xi.b_omega) + list(xi.b_acc)
                + [float(np.sqrt(max(s, 0.0)) if s == s else 0.0) for s in sd[:9]]
            )
        for i in range(len(rec.t)):
            row = [rec.t[i], kind.value, rec.nis[i]]
            if has_truth:
                row += [
                    np.rad2deg(rec.att_err[i]), rec.vel_err[i], rec.pos_err[i],
                    rec.bw_err[i], rec.ba_err[i], rec.nees[i],
                ]
            else:
                row += [np.nan] * 6
            metric_rows.append(row)

    with open(os.path.join(args.out, "estimates.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            "t,kind,qw,qx,qy,qz,vx,vy,vz,px,py,pz,bwx,bwy,bwz,bax,bay,baz,"
            "sR1,sR2,sR3,sv1,sv2,sv3,sp1,sp2,sp3\n"
        )
        for row in est_rows:
            fh.write(",".join(x if isinstance(x, str) else _fmt(x) for x in row) + "\n")
    with open(os.path.join(args.out, "metrics.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,kind,nis,att_err_deg,vel_err,pos_err,bw_err,ba_err,nees\n")
        for row in metric_rows:
            fh.write(",".join(x if isinstance(x, str) else _fmt(x) for x in row) + "\n")
    echo_config(cfg, args.out)
    print(f"processed {len(kinds)} filters over {args.data}; wrote {args.out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = load_config(args.config, _common_overrides(args))
    if cfg["runs"] < 2:
        raise UsageError("compare requires runs >= 2")
    kinds = config_kinds(cfg)
    os.makedirs(args.out, exist_ok=True)
    noise = noise_spec(cfg)
    spec = trajectory_spec(cfg)
    opts = sim.FilterOptions(cfg["output_mode"], cfg["virtual_bias_update"])
    art = sim.run_monte_carlo(spec, noise, kinds, cfg["runs"], opts, n_jobs=args.jobs)

    with open(os.path.join(args.out, "anees_table.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("kind,filter,anees_transient,anees_asymptotic,nis_mean\n")
        for kind in kinds:
            if kind not in art.anees_transient:
                continue
            fh.write(
                f"{kind.value},{FILTER_NAMES[kind]},"
                f"{_fmt(art.anees_transient[kind])},{_fmt(art.anees_asymptotic[kind])},"
                f"{_fmt(art.nis_mean[kind])}\n"
            )
    with open(os.path.join(args.out, "metrics.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,kind,anees,att_rmse_deg,vel_rmse,pos_rmse,bw_rmse,ba_rmse\n")
        for kind in kinds:
            if kind not in art.anees:
                continue
            r = art.rmse[kind]
            for i in range(len(art.t)):
                fh.write(
                    ",".join(
                        [_fmt(art.t[i]), kind.value, _fmt(art.anees[kind][i]),
                         _fmt(r["att_deg"][i]), _fmt(r["vel"][i]), _fmt(r["pos"][i]),
                         _fmt(r["bw"][i]), _fmt(r["ba"][i])]
                    ) + "\n"
                )
    if art.failures:
        with open(os.path.join(args.out, "failures.csv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("run,kind,message\n")
            for run, kind, msg in art.failures:
                fh.write(f"{run},{kind.value},{msg}\n")

    if cfg["sweep"]:
        sweep_cfg = cfg["sweep"] if isinstance(cfg["sweep"], dict) else {}
        grid = metrics.SweepGrid(
            axis=sweep_cfg.get("axis", "bias"),
            size=tuple(sweep_cfg.get("size", (64, 64))),
            seed=cfg["seed"],
        )
        res = metrics.linearization_sweep(
            parse_kind(sweep_cfg.get("kind_a", "dp")),
            parse_kind(sweep_cfg.get("kind_b", "sd")),
            grid,
        )
        with open(os.path.join(args.out, "sweep.csv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("att_norm,axis_norm,l_a,l_b,diff\n")
            for i in range(len(res.att_norms)):
                for j in range(len(res.axis_norms)):
                    fh.write(
                        ",".join(
                            _fmt(x) for x in (
                                res.att_norms[i], res.axis_norms[j],
                                res.l_a[i, j], res.l_b[i, j],
                                res.l_a[i, j] - res.l_b[i, j],
                            )
                        ) + "\n"
                    )
    echo_config(cfg, args.out)
    for kind in kinds:
        if kind in art.anees_transient:
            print(
                f"{FILTER_NAMES[kind]:9s} ANEES(T)={art.anees_transient[kind]:6.3f} "
                f"ANEES(A)={art.anees_asymptotic[kind]:6.3f}"
            )
    if art.failures:
        print(f"{len(art.failures)} run failures recorded (partial results written)")
    return EXIT_OK


def cmd_check(args) -> int:
    results = selftest.run_checks(seed=args.seed, fault=args.inject_fault)
    failed = 0
    for res in results:
        tag = "PASS" if res.passed else "FAIL"
        print(f"[{tag}] {res.name} (seed={res.seed}) {res.detail}")
        failed += 0 if res.passed else 1
    if failed:
        print(f"{failed} properties failed")
        return EXIT_PROPERTY
    print("all properties passed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _common_overrides(args) -> dict:
    out = {}
    if getattr(args, "seed_override", None) is not None:
        out["seed"] = args.seed_override
    if getattr(args, "runs", None) is not None:
        out["runs"] = args.runs
    if getattr(args, "kinds", None):
        out["kinds"] = args.kinds
    if getattr(args, "duration", None) is not None:
        out["trajectory.duration"] = args.duration
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="eqnav", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=None, help="JSON config file")
        sp.add_argument("--seed", dest="seed_override", type=int, default=None)
        sp.add_argument("--runs", type=int, default=None)
        sp.add_argument("--kinds", nargs="+", default=None)
        sp.add_argument("--duration", type=float, default=None)

    sp = sub.add_parser("simulate", help="generate a synthetic dataset")
    common(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("run", help="replay filters over a dataset directory")
    common(sp)
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("compare", help="Monte-Carlo comparison of the filters")
    common(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--jobs", type=int, default=None)
    sp.set_defaults(fn=cmd_compare)

    sp = sub.add_parser("check", help="run the property suite")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--inject-fault", default=None, help=argparse.SUPPRESS)
    sp.set_defaults(fn=cmd_check)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
