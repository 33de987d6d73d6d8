"""Draw where a distilled chain switches subpolicies.

On a two-region bench in two dimensions, the teacher's hidden split is
a straight line. After distillation we rasterize which node serves
each point of the plane and sketch both boundaries side by side in the
terminal; they should trace the same line.

Run from the repository root:

    python3 demos/02_boundary_map.py
"""

import tempfile
from pathlib import Path

import numpy as np

from policychain import (
    DistillConfig,
    PiecewiseLinearEnv,
    boundary_grid,
    distill,
    make_piecewise_env,
    record_dataset,
    save_grid,
)

RES = 41  # terminal-sized raster

print("=== distill a two-region teacher ===")
env, teacher, critic, _ = make_piecewise_env(regions=2, dims=2, seed=6,
                                             behavior_noise=0.15)
recorder = PiecewiseLinearEnv(teacher, max_steps=1)
dataset, _ = record_dataset(recorder, teacher.predict,
                            episodes=12000, base_seed=1006)
cfg = DistillConfig(value_threshold=1.0, n_iteration=4, min_region_size=64,
                    ridge_lambda=1e-6, svm_c=10.0, svm_epochs=300, seed=0)
policy = distill(dataset, critic, cfg)
print(f"{policy.n_nodes} nodes for {teacher.n_regions} true regions\n")

table = boundary_grid(policy, dim_x=0, dim_y=1, x_range=(-1, 1),
                      y_range=(-1, 1), resolution=RES)

out_path = Path(tempfile.mkdtemp(prefix="boundary_demo_")) / "grid.csv"
save_grid(table, out_path)
print(f"raster saved to {out_path} (columns x,y,node)\n")

# left panel: which node the chain serves; right panel: the true region
nodes = table[:, 2].reshape(RES, RES).T  # row = y, col = x
truth = teacher.region_batch(table[:, :2]).reshape(RES, RES).T

print("learned node map".ljust(RES + 4) + "true region map")
glyphs = ".#23456789"
for r in range(RES - 1, -1, -1):  # print top row first
    left = "".join(glyphs[int(v)] for v in nodes[r])
    right = "".join(glyphs[int(v)] for v in truth[r])
    print(left.ljust(RES + 4) + right)

agree = float((nodes == truth).mean())
print(f"\ncell agreement: {agree:.3f}")
print("(the soft-margin gate may wobble within a cell or two of the line)")
