"""Scratch: single-run behavior, then a small MC batch with timing."""
import time

import numpy as np

from eqnav import sim
from eqnav.symmetry import FILTER_NAMES, SymmetryKind

spec = sim.TrajectorySpec(duration=30.0, seed=42)
noise = sim.NoiseSpec()

t0 = time.time()
log = sim.generate(spec, noise, run=0)
print(f"generate: {time.time()-t0:.2f}s, imu {log.imu_t.shape}, gnss {log.gnss_t.shape}")

t0 = time.time()
rec = sim.run_filter_on_log(SymmetryKind.TG, log, noise)
print(f"one TG filter run: {time.time()-t0:.2f}s ok={rec.ok} {rec.message}")
print("  terminal pos err:", rec.pos_err[-1], "att err deg:", np.rad2deg(rec.att_err[-1]))
print("  nees first/last:", rec.nees[0], rec.nees[-1], " nis mean:", np.nanmean(rec.nis[1:]))

for kind in SymmetryKind:
    t0 = time.time()
    rec = sim.run_filter_on_log(kind, log, noise)
    el = time.time() - t0
    half = len(rec.nees) // 2
    print(
        f"{FILTER_NAMES[kind]:9s} {el:5.2f}s ok={rec.ok} "
        f"nees0={rec.nees[0]:6.3f} neesT={np.mean(rec.nees[:half]):6.3f} "
        f"neesA={np.mean(rec.nees[half:]):6.3f} "
        f"pos={rec.pos_err[-1]:.3f} att={np.rad2deg(rec.att_err[-1]):.3f} "
        f"bw={rec.bw_err[-1]:.4f}"
    )
