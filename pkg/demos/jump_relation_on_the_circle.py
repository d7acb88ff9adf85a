"""Boundary values of a Cauchy integral on the unit circle.

Take f = z^2 + 0.5 z on the circle, build the Clifford-Cauchy integral U
inside the disk, and walk towards a few boundary nodes along the inward
normal.  The limits found by the approach ladder should match the
principal-value formula (1/2) f + c f at the same nodes.  For boundary
values of a holomorphic function both sides equal f itself.

Run with ``python3 demos/jump_relation_on_the_circle.py``.
"""

import numpy as np

from rieszlab import clifford as cl
from rieszlab import geometry as geo
from rieszlab import nontangential as nt
from rieszlab import singular as sg

mesh = geo.make_mesh("circle", 256)
z = mesh.nodes[:, 0] + 1j * mesh.nodes[:, 1]
F = sg.BoundaryField(mesh, cl.complex_to_mv(z**2 + 0.5 * z))

# principal-value route
pv = cl.mv_to_complex(0.5 * F.values + sg.cauchy_clifford_pv(F).values)

# approach-ladder route through interior evaluations
nodes = [0, 40, 97, 200]
reports = nt.nt_traces(lambda p: sg.cauchy_clifford_domain(F, p).values, mesh, nodes=nodes, t0=0.2)

print(f"{'node':>5} {'ladder limit':>28} {'(1/2)f + c f':>28} {'gap':>9}")
for i, rep in zip(nodes, reports):
    lim = cl.mv_to_complex(rep.value)
    print(f"{i:5d} {lim.real:13.9f}{lim.imag:+13.9f}i {pv[i].real:13.9f}{pv[i].imag:+13.9f}i {abs(lim - pv[i]):9.2e}")

# the distance ladder shows how fast the interior values settle
rep = reports[0]
print("\nnode 0: distance t, |U(x - t nu) - limit|")
for t, v in zip(rep.ladder, rep.values):
    print(f"  {t:10.3e}  {np.abs(v - rep.value).max():10.3e}")
