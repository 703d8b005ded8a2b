"""
All solutions of the Neumann problem
====================================

For alpha > 0 the problem u''/2 = alpha u on G, u' = f' on F has a particular
solution plus one free coefficient per component of F.  We build the family on
a depth-3 Cantor-type set and check random members.
"""

# %%
import numpy as np

from sobdecomp import FormParams, Mesh, cantor_complement, neumann_residual, ode_residual, solve_neumann

G = cantor_complement(base=(0, 1), depth=3, ratio=1 / 3, window=(-0.5, 1.5))
print(len(G.f_components), "F components, |F| =", G.f_measure)

mesh = Mesh.from_open_set(G, 1 / 512)
p = FormParams(0.5)
f = mesh.sample(lambda x: np.exp(-0.5 * ((x - 0.4) / 0.3) ** 2))

# %%
fam = solve_neumann(f, G, p, rng=np.random.default_rng(3))
print("family dimension", fam.family_dim)
print(fam.checks)

# %%
# Any combination of the homogeneous basis keeps both residuals small.
u = fam.member(np.random.default_rng(0).standard_normal(fam.family_dim))
print("ode residual", ode_residual(u, G, p), "tolerance", 10 * mesh.h_max ** 2)
print("neumann residual", neumann_residual(u, f, G))

# %%
# Halving h cuts the ode residual of the particular solution by about 4.
res = []
for h in (0.02, 0.01, 0.005):
    m = Mesh.from_open_set(G, h / 4)
    res.append(solve_neumann(m.sample(lambda x: np.exp(-0.5 * ((x - 0.4) / 0.3) ** 2)), G, p)
               .checks["ode_residual"])
print("ratios", [a / b for a, b in zip(res, res[1:])])
