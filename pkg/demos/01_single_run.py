"""Plan once in the 2-D dividing-wall world and draw the result.

Usage: python demos/01_single_run.py [out.svg]
"""

import sys

from fdit.environment import make_dividing_wall
from fdit.planner import Planner, PlannerConfig
from fdit.render import render_svg

out = sys.argv[1] if len(sys.argv) > 1 else "single_run.svg"
planner = Planner(make_dividing_wall(2), PlannerConfig(time_budget=0.5, seed=3))

for sol in planner.plan():
    print(f"t={sol.wall_time:.4f}s  cost={sol.cost:.4f}  waypoints={len(sol.path)}")

snap = planner.snapshot()
render_svg(snap, out)
print(f"{len(snap['valid_samples'])} valid, {len(snap['invalid_samples'])} invalid samples -> {out}")
