"""Telling an H^1 atom from a bare indicator by its Riesz transform.

On a long flat window the Hilbert transform of a mean-zero atom decays like
1/x^2, so its L^1 norm settles as the window grows.  The indicator of
[0, 1] has mass, so its transform decays like 1/(pi x) and the L^1 norm
keeps growing by about ln(2)/pi per doubling at each end.  The test sweeps
nested windows and reports the fitted growth.

Run with ``python3 demos/hardy_space_tails.py``.
"""

import math

import numpy as np

from rieszlab import geometry as geo
from rieszlab import spaces as sp
from rieszlab.singular import BoundaryField

line = geo.make_mesh("torus_window", 8192, length=64.0)
x = line.nodes[:, 0]

cases = {
    "atom of radius 1/4": sp.atom(line, int(np.argmin(np.abs(x))), 0.25),
    "indicator of [0, 1]": BoundaryField(line, ((x > 0) & (x < 1)).astype(float)),
}
for label, f in cases.items():
    rep = sp.h1_riesz_test(f, tol=0.02)
    print(f"{label}: verdict {rep.verdict}")
    for half_width, norms in rep.sweep:
        print(f"    window half-width {half_width:6.2f}: ||H f||_1 = {norms[0]:.4f}")
    if rep.slopes:
        print(f"    growth per doubling and end: {rep.slopes[0]:.4f} (1/x tail predicts {math.log(2) / math.pi:.4f})")
