"""Circle packing in the disk, double circle packing, and the induced maps.

Run:  python demos/03_circle_packing.py
Outputs demo_packing.svg and demo_double_packing.svg for inspection.
"""
import numpy as np

import odmap

# Pack a random 300-vertex Delaunay triangulation in the unit disk.
tri = odmap.random_delaunay_triangulation(300, seed=7)
packing = odmap.pack_in_disk(tri, tol=1e-7)
print("packed", tri.n_vertices, "circles")
for k, v in packing.residuals.items():
    print(f"  {k}: {v}")

# The induced orthodiagonal map: circle centers + inscribed-circle centers.
omap = odmap.orthodiagonal_from_packing(tri, packing)
print("map:", omap.n_faces, "faces, validates:", odmap.validate(omap, 1e-7).passed)

# Disk-approximation certificates.
print("mesh", omap.mesh_size(), "<= 2 max radius =", 2 * packing.max_radius)
delta = odmap.hausdorff_delta(omap, odmap.unit_disk(), 2000)
print("Hausdorff to circle", delta, "<= 2 max boundary radius =",
      2 * packing.max_boundary_radius)

odmap.packing_svg("demo_packing.svg", packing.centers, packing.radii, omap)
print("wrote demo_packing.svg")

# Double circle packing of the cube graph: vertex circles and face circles
# meet orthogonally at shared tangency points; the outer face is the unit
# circle.
h = odmap.cube_map()
dp = odmap.double_pack(h, outer_face=0)
print("\ncube double packing: angle residual", dp.angle_residual)
for k, v in dp.residuals.items():
    print(f"  {k}: {v}")
m2 = odmap.orthodiagonal_from_double_packing(h, dp)
print("induced map validates:", odmap.validate(m2, 1e-7).passed)

centers = np.vstack([dp.vertex_centers, dp.face_centers])
radii = np.concatenate([dp.vertex_radii, dp.face_radii])
odmap.packing_svg("demo_double_packing.svg", centers, radii, m2)
print("wrote demo_double_packing.svg")
