"""Routing around a coastline: obstacles as zero-speed regions.

The third preset adds a raster obstacle mask (a synthetic coastline with a
harbor gap, a headland and a few island clusters).  Inside the mask the
boat speed is forced to zero, so the solved policy routes around land.  We
launch boats from three points along the southern shore and export the
trajectories in the plain-text trajectory format.

Run:  python3 demos/coastal_course.py  [--dx 0.08] [--out out/]
"""

import argparse
import os
import pathlib

import numpy as np

import windward as ww
from windward.scenario_io import export_trajectory


STARTS = {"A": (-0.5, 0.2, 0.5), "B": (-0.05, 0.2, 0.5), "C": (0.6, 0.3, 0.5)}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dx", type=float, default=0.08)
    ap.add_argument("--controls", type=int, default=12)
    ap.add_argument("--out", default=os.environ.get("WINDWARD_OUT", "out"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    s = ww.load_preset("test3", dx=args.dx, controls=args.controls)
    field, policy = ww.solve(s)
    print(f"solved in {field.iterations} sweeps, residual "
          f"{field.residual:.2e}")

    trajs = {}
    for name, x0 in STARTS.items():
        traj = ww.simulate(s, policy, x0, 1, seed=3)
        trajs[name] = traj
        path = out / f"course_{name}.txt"
        export_trajectory(traj, path)
        print(f"start {name} {x0[:2]}: {traj.termination} after "
              f"{traj.samples[-1].t:.1f} time units, "
              f"{len(traj.switches)} tacks -> {path}")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("(matplotlib not available; skipping figure)")
        return

    fig, ax = plt.subplots(figsize=(7, 6))
    extent = (*s.grid.bounds[0], *s.grid.bounds[1])
    ax.imshow(s.obstacles.values.T, origin="lower", extent=extent,
              cmap="Greys", alpha=0.8, aspect="auto")
    for name, traj in trajs.items():
        xs = np.array([smp.x[:2] for smp in traj.samples])
        ax.plot(xs[:, 0], xs[:, 1], label=f"start {name}")
    ax.add_patch(plt.Circle(s.target.center, s.target.radius, color="green"))
    ax.legend()
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title("routes around the coastline mask")
    fig.savefig(out / "coastal_course.png", dpi=120)
    print(f"wrote {out / 'coastal_course.png'}")


if __name__ == "__main__":
    main()
