"""Build orthodiagonal maps, validate them, and inspect the canonical weights.

Run:  python demos/01_maps_and_validation.py
"""
import odmap

# The smallest interesting map: four congruent quads around the origin.
diamond = odmap.diamond_map()
print("diamond map:", diamond.n_vertices, "vertices,", diamond.n_faces, "faces")
print(odmap.validate(diamond))
print("mesh size:", diamond.mesh_size())

# The primal network carries one edge per face with weight |w1 w2| / |v1 v2|.
net = diamond.primal_network()
print("primal conductances:", net.conductances)

# Coordinates are discrete harmonic for these weights: the weighted average
# of the neighbors of every interior vertex is the vertex itself.
print("martingale residuals:", odmap.martingale_residuals(diamond))

# A rotated grid on the unit square, written to JSON and read back losslessly.
grid = odmap.rotated_grid("square", 16)
text = grid.to_json("demo_map.json")
again = odmap.OrthodiagonalMap.from_json("demo_map.json")
print("grid n=16:", grid.n_faces, "faces, mesh", grid.mesh_size(),
      "| round trip identical:", text == again.to_json())

# Breaking orthogonality is caught face by face.
pos = diamond.positions.copy()
pos[5] = [1.5, 1.0]
broken = odmap.OrthodiagonalMap(pos, diamond.primal_mask, diamond.faces)
report = odmap.validate(broken)
print("\nafter moving one dual vertex:")
print(report)
print("offending faces:", report.offending_faces)

# Two diamonds glued at a vertex have a non-simple boundary; the block
# decomposition recovers two clean maps.
from odmap.generators import two_diamonds_sharing_vertex

glued = two_diamonds_sharing_vertex()
parts = odmap.blocks(glued)
print("\nglued map splits into", len(parts), "blocks of",
      [b.n_faces for b in parts], "faces")
