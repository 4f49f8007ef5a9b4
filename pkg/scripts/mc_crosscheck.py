"""Monte Carlo cross-check of the closed-form visibility along a temperature scan.

For each temperature the fringe factor F is estimated from sampled kick
histories, and the fringe contrast is read off a simulated screen pattern;
both are compared with exp(-(Lambda - G) t).

    python scripts/mc_crosscheck.py --d 1um --t 5ms --n 200000
"""

import argparse
import math
import sys

import numpy as np

from slitdecoherence.cli import parse_quantity
from slitdecoherence.constants import HBAR
from slitdecoherence.montecarlo import McConfig, estimate_F, estimate_fringe_contrast
from slitdecoherence.spectrum import get_preset
from slitdecoherence.visibility import ExperimentConfig, visibility_closed_form


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--molecule", default="C70")
    ap.add_argument("--d", default="1um")
    ap.add_argument("--t", default="5ms")
    ap.add_argument("--T-min", type=float, default=1000.0)
    ap.add_argument("--T-max", type=float, default=2600.0)
    ap.add_argument("--steps", type=int, default=9)
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    mol = get_preset(args.molecule)
    d, t = parse_quantity(args.d, "length"), parse_quantity(args.t, "time")
    narrow = HBAR / (2 * 5e-9)  # 5 nm slit: flat envelope over the central fringes
    mc = McConfig(args.n, args.seed)

    print(f"{'T[K]':>7} {'V_exact':>10} {'F_mc':>10} {'pull':>6} {'V_pattern':>10} {'pull':>6}")
    worst = 0.0
    for T in np.linspace(args.T_min, args.T_max, args.steps):
        cfg = ExperimentConfig(mol, float(T), d, t, slit_width_momentum=narrow)
        exact = visibility_closed_form(cfg).visibility
        est = estimate_F(cfg, mc, args.threads)
        v_pat, se_pat = estimate_fringe_contrast(cfg, mc, threads=args.threads)
        p1 = (est.visibility_hat - exact) / est.std_error if est.std_error else 0.0
        p2 = (v_pat - exact) / se_pat if se_pat else 0.0
        worst = max(worst, abs(p1), abs(p2))
        print(f"{T:7.0f} {exact:10.6f} {est.visibility_hat:10.6f} {p1:6.2f} {v_pat:10.6f} {p2:6.2f}")
    print(f"max |pull| = {worst:.2f}")
    return 0 if math.isfinite(worst) and worst <= 4 else 1


if __name__ == "__main__":
    sys.exit(run())
