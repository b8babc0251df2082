"""Recreating one VFI record with M1, M2 and M3.

The same record (10 s window, a mix of change amplitudes) is recreated with
each method and the level trajectories are drawn into one SVG.  Re-measuring
the recreated M1 waveform gives back the original subrange counts.
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from vfirec.recreate import RecreationParams, build_trajectory, synthesize_from_trajectory  # noqa: E402
from vfirec.vfi import VfiRecord, compute_vfi  # noqa: E402

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--out", default="demo_output")
parser.add_argument("--seed", type=int, default=2024)
args = parser.parse_args()
out = Path(args.out)
out.mkdir(parents=True, exist_ok=True)

v = VfiRecord(window_index=0, t_w=10.0, u_min=226.0, u_max=234.0, u_avg=230.0,
              delta_u=3.0, counts=(3, 1, 1, 3, 2, 1, 0))
print(f"record: dU = {v.delta_u} V, counts = {v.counts}, {v.n_changes} changes")

fig, ax = plt.subplots(figsize=(8, 3.5))
for method in ("M1", "M2", "M3"):
    traj = build_trajectory(v, RecreationParams(method, seed=args.seed))
    print(f"{method}: {len(traj.times)} breakpoints, {traj.n_changes()} changes, "
          f"{len(traj.warnings)} clamping warnings")
    ax.plot(traj.times, traj.levels, label=method, lw=1.0)
ax.axhline(v.u_avg, color="0.6", lw=0.5, ls="--")
ax.set_xlabel("t (s)")
ax.set_ylabel("RMS level (V)")
ax.legend(frameon=False)
fig.tight_layout()
fig.savefig(out / "recreation_methods.svg", metadata={"Date": None})
print(f"wrote {out / 'recreation_methods.svg'}")

traj = build_trajectory(v, RecreationParams("M1", seed=args.seed))
(back,) = compute_vfi(synthesize_from_trajectory(traj, 50.0, 4000.0, 230.0), v.t_w)
print(f"re-measured M1: dU = {back.delta_u:.4f} V, counts = {back.counts}")
