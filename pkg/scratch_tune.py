"""Scratch: small-MC ANEES diagnostics under different trajectory settings."""
import sys
import time

import numpy as np

from eqnav import sim
from eqnav.symmetry import FILTER_NAMES, SymmetryKind

M = int(sys.argv[1]) if len(sys.argv) > 1 else 10
dur = float(sys.argv[2]) if len(sys.argv) > 2 else 30.0

cases = {
    "default": sim.TrajectorySpec(duration=dur, seed=5),
    "aggressive": sim.TrajectorySpec(
        duration=dur, seed=5,
        angle_amp=(0.9, 0.8, 1.1), angle_freq=(0.45, 0.35, 0.25),
        pos_amp=(4.0, 3.0, 1.5), pos_freq=(0.5, 0.4, 0.6),
    ),
}

noise = sim.NoiseSpec()
for name, spec in cases.items():
    t0 = time.time()
    art = sim.run_monte_carlo(spec, noise, list(SymmetryKind), M)
    el = time.time() - t0
    print(f"--- {name} (M={M}, {dur}s) {el:.1f}s, failures={len(art.failures)}")
    for kind in SymmetryKind:
        print(
            f"{FILTER_NAMES[kind]:9s} ANEES(T)={art.anees_transient[kind]:6.3f} "
            f"ANEES(A)={art.anees_asymptotic[kind]:6.3f} NIS={art.nis_mean[kind]:5.2f} "
            f"pos_rmse_end={art.rmse[kind]['pos'][-1]:.3f} "
            f"att_end={art.rmse[kind]['att_deg'][-1]:.2f}"
        )
    k = SymmetryKind.SO3xR12
    a = art.anees[k]
    print("MEKF anees curve:", " ".join(f"{x:.2f}" for x in a[:: max(1, len(a)//15)]))
    k = SymmetryKind.TG
    a = art.anees[k]
    print("TG   anees curve:", " ".join(f"{x:.2f}" for x in a[:: max(1, len(a)//15)]))
