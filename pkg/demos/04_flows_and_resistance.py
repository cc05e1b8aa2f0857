"""Explicit low-energy flows: the argument flow and the random-path flow.

Both constructions certify effective-resistance estimates: the argument flow
drives unit current from a disk to the boundary with energy of order
log(diam/r), and the random-path flow crosses an annulus with energy of
order 1/log(r2/r1).  The reports carry the measured energy next to the
bound's shape; the ratio is the empirical constant.

Run:  python demos/04_flows_and_resistance.py
"""
import numpy as np

import odmap
from odmap.flows import argument_flow, random_path_flow

print("argument flow, grid refinements, fixed physical radius r = 0.3:")
for n in (16, 32, 64):
    g = odmap.rotated_grid("square", n)
    g = odmap.OrthodiagonalMap(g.positions - 0.5, g.primal_mask, g.faces)
    pv = g.primal_vertices
    pos = g.positions[pv]
    x = int(pv[np.argmin(np.hypot(pos[:, 0], pos[:, 1]))])
    rep = argument_flow(g, x, 0.3)
    print(f"  n={n:>3}  strength={rep.strength:.12f}  E={rep.energy:.5f}  "
          f"log(diam/r)={rep.bound_shape:.5f}  ratio={rep.ratio:.4f}")

print("\nrandom path flow between two cones, annulus 0.1 .. 0.3:")
for n in (32, 64):
    g = odmap.rotated_grid("square", n)
    g = odmap.OrthodiagonalMap(g.positions - 0.5, g.primal_mask, g.faces)
    pv = g.primal_vertices
    pos = g.positions[pv]
    S = [int(v) for v, p in zip(pv, pos) if p[0] <= -abs(p[1])]
    T = [int(v) for v, p in zip(pv, pos) if p[0] >= abs(p[1]) and p[0] > 0]
    rep = random_path_flow(g, S, T, 0.1, 0.3, m=32)
    print(f"  n={n:>3}  strength={rep.strength:.12f}  E={rep.energy:.5f}  "
          f"1/log(r2/r1)={rep.bound_shape:.5f}  E*log(r2/r1)={rep.ratio:.4f}")

# The raw argument field has divergence exactly 2 pi at the center and 0 at
# every other interior vertex: a discrete winding-number identity.
g = odmap.rotated_grid("square", 16)
g = odmap.OrthodiagonalMap(g.positions - 0.5, g.primal_mask, g.faces)
pv = g.primal_vertices
pos = g.positions[pv]
x = int(pv[np.argmin(np.hypot(pos[:, 0], pos[:, 1]))])
raw = odmap.argument_field(g, x)
div = raw.divergence()
net = raw.network
interior, _ = g.interior_vertices()
others = [net.index_of(v) for v in interior if int(v) != x]
print("\nwinding identity: div at center =", div[net.index_of(x)],
      "(2 pi =", 2 * np.pi, ")")
print("max |div| at other interior vertices:", np.abs(div[others]).max())
