"""
The alpha = 0 case
==================

With alpha = 0 the complement of the flat-on-F functions consists of functions
whose slope is the same on every G interval.  Whether multiples of the scale
function s join the solution family depends on whether G has finite measure on
the whole line, which a finite window cannot decide; it is declared instead.
"""

# %%
import numpy as np

from sobdecomp import FormParams, Mesh, decompose_F_s, decompose_zero_alpha, normalize_intervals, solve_zero_alpha
from sobdecomp.harmonic import g_slope_spread

G = normalize_intervals([(-4, 0), (1, 4)], (-4, 4))
mesh = Mesh.from_open_set(G, 1 / 256)
f = mesh.sample(lambda x: x)

r = decompose_zero_alpha(f, G)
print("G-slope spread", r.extras["g_slope_spread"], "common slope", r.extras["g_slope"])

# %%
for flanks in ((False, False), (True, False)):
    fam = solve_zero_alpha(f, G, flanks)
    print(flanks, fam.constants_allowed, "|", fam.branch_note)

# %%
# Small alpha approaches the alpha = 0 picture.
for a in (1e-2, 1e-3, 1e-4):
    print(a, g_slope_spread(decompose_F_s(f, G, FormParams(a)).f2))
