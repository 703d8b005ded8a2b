"""
Three-way split and cost on deep Cantor sets
============================================

The harmonic part of f relative to F splits into a piece inside the flat-on-F
functions and the orthogonal complement.  The three pieces come from separate
solves, so their agreement is a real check.  Then we time the Neumann solve as
the Cantor depth grows at a fixed fine mesh.
"""

# %%
import time

import numpy as np

from sobdecomp import (
    DofMap,
    FormParams,
    Mesh,
    cantor_complement,
    random_grid_function,
    solve_neumann,
    verify_three_way,
)

p = FormParams(0.5)
rng = np.random.default_rng(1)
for depth in range(1, 5):
    G = cantor_complement((0, 1), depth, 1 / 3, (-0.5, 1.5))
    mesh = Mesh.from_open_set(G, 1 / 1024)
    rep = verify_three_way(random_grid_function(mesh, rng), G, p)
    print(depth, f"gap {rep.identity_gap:.1e}", f"{rep.n_f_nodes} F nodes = "
          f"{rep.n_f_components} components + {rep.dim_complement}")

# %%
h = 2.0 ** -16
for depth in range(2, 11, 2):
    G = cantor_complement((0, 1), depth, 1 / 3, (0, 1))
    mesh = Mesh.from_open_set(G, h)
    f = mesh.sample(lambda x: np.exp(-0.5 * ((x - 0.4) / 0.3) ** 2))
    t0 = time.perf_counter()
    fam = solve_neumann(f, G, p)
    print(depth, DofMap.subspace(mesh).n_dofs, "dofs", fam.family_dim, "basis functions",
          f"{time.perf_counter() - t0:.2f}s")
