"""
Splitting a function along a single gap
=======================================

G = (-4, 0) u (1, 4) inside the window (-4, 4), so F = [0, 1].  Functions
that are flat on F form a closed subspace; here we split a hat function into
its flat-on-F part and the E_alpha-orthogonal remainder.
"""

# %%
import numpy as np

from sobdecomp import (
    FormParams,
    Mesh,
    decompose_F_s,
    inner_e_alpha,
    membership_F_s,
    membership_G_alpha,
    normalize_intervals,
)

G = normalize_intervals([(-4, 0), (1, 4)], (-4, 4))
mesh = Mesh.from_open_set(G, 1 / 256)
p = FormParams(alpha=0.5)
f = mesh.sample(lambda x: np.maximum(0, 1 - np.abs(x - 0.5) / 1.5))

# %%
# f1 has zero slope on F; f2 is what is left.
r = decompose_F_s(f, G, p)
print("orthogonality residual", r.orth_residual)
print("E(f) - E(f1) - E(f2), relative", r.pythagoras_gap)
print("f1 flat on F:", membership_F_s(r.f1, G).ok)

# %%
# On each G interval the remainder solves u''/2 = alpha u, so on the left
# flank it is a multiple of cosh(x + 4).
left = mesh.nodes <= 0
ratio = r.f2.values[left] / np.cosh(mesh.nodes[left] + 4)
print("spread of f2 / cosh(x+4) on (-4,0):", np.ptp(ratio))

# %%
# The midpoint identity u'(x) - u'(y) = 2 alpha int_y^x u holds on all of G
# for f2, and fails for f1.
print("f2 passes:", membership_G_alpha(r.f2, G, p, window_conditions=True).ok)
print("f1 passes:", membership_G_alpha(r.f1, G, p).ok)
print("E_alpha(f1, f2) =", inner_e_alpha(r.f1, r.f2, p))
