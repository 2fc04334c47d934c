"""A windward leg with a fixed mean wind: when to tack?

The boat sails at constant speed 0.05 with its heading frozen 45 degrees
off the wind; the only decision is the tack.  We solve the
switching/continuation system on a coarsened grid, look at the switching
regions in the (x1, x2) plane, and roll out closed-loop trajectories for a
few levels of wind-direction noise.

Run:  python3 demos/windward_leg.py  [--dx 0.05] [--out out/]
"""

import argparse
import os
import pathlib

import numpy as np

import windward as ww


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dx", type=float, default=0.05,
                    help="grid step (0.02 reproduces the reference setup, "
                         "0.05 solves in under a minute)")
    ap.add_argument("--out", default=os.environ.get("WINDWARD_OUT", "out"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    print("== deterministic wind: the classic one-tack solution")
    s0 = ww.load_preset("test1", sigma=0.0, dx=args.dx)
    field0, policy0 = ww.solve(s0)
    print(f"   solved in {field0.iterations} sweeps, "
          f"residual {field0.residual:.2e}")

    start = (0.0, 0.0, 0.0)
    v = field0.values[(0,) + tuple(s0.grid.nearest_index(k, start[k])
                                   for k in range(3))]
    print(f"   minimum expected cost from {start} on port tack: {v:.2f}")
    print(f"   closed-form two-leg value:                        "
          f"{ww.analytic_value(np.array(start), 1, s0):.2f}")

    traj = ww.simulate(s0, policy0, start, 1, seed=0)
    print(f"   rollout: {traj.termination} after "
          f"{traj.samples[-1].t:.1f} time units, "
          f"{len(traj.switches)} tacks, cost {traj.cost:.2f}")

    print("== switching regions at the mean wind direction")
    m1 = ww.switching_map(policy0, 1, 0.0)
    m2 = ww.switching_map(policy0, 2, 0.0)
    for x2 in (0.5, 1.0, 1.5):
        w = ww.triangle_width(m1, m2, s0.grid, x2)
        print(f"   no-tack corridor width at x2={x2}: {w:.2f}")

    print("== noisy wind: rollouts cluster toward the centerline")
    rows = []
    for sigma in (0.01, 0.05, 0.1):
        s = ww.load_preset("test1", sigma=sigma, dx=args.dx)
        _, policy = ww.solve(s)
        stats = ww.mc_stats(s, policy, start, 1, n_runs=50, seed0=1)
        rows.append((sigma, stats))
        print(f"   sigma={sigma}: {stats.fraction_reached:.0%} reach the "
              f"mark, {stats.switches_mean:.1f} tacks on average, "
              f"arrival {stats.arrival_mean:.1f} +- {stats.arrival_std:.1f}")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("   (matplotlib not available; skipping figures)")
        return

    fig, axes = plt.subplots(1, 2, figsize=(10, 5), sharey=True)
    extent = (*s0.grid.bounds[0], *s0.grid.bounds[1])
    for ax, m, name in ((axes[0], m1, "port"), (axes[1], m2, "starboard")):
        ax.imshow(m.labels.T != 0, origin="lower", extent=extent,
                  cmap="Reds", alpha=0.6, aspect="auto")
        ax.add_patch(plt.Circle(s0.target.center, s0.target.radius,
                                color="green"))
        ax.set_title(f"tack here ({name})")
        ax.set_xlabel("x1")
    axes[0].set_ylabel("x2")
    fig.savefig(out / "switching_regions.png", dpi=120)
    print(f"   wrote {out / 'switching_regions.png'}")

    fig, ax = plt.subplots(figsize=(6, 6))
    for sigma, color in ((0.01, "C0"), (0.1, "C3")):
        s = ww.load_preset("test1", sigma=sigma, dx=args.dx)
        _, policy = ww.solve(s)
        for seed in range(8):
            t = ww.simulate(s, policy, start, 1, seed=seed)
            xs = np.array([smp.x[:2] for smp in t.samples])
            ax.plot(xs[:, 0], xs[:, 1], color=color, alpha=0.5,
                    label=f"sigma={sigma}" if seed == 0 else None)
    ax.add_patch(plt.Circle(s0.target.center, s0.target.radius, color="green"))
    ax.legend()
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title("closed-loop rollouts under wind noise")
    fig.savefig(out / "rollouts.png", dpi=120)
    print(f"   wrote {out / 'rollouts.png'}")


if __name__ == "__main__":
    main()
