"""Sweep the blue fitness and watch the zeros change.

For p = (0, 1, 1, 1) a single red neighbour is enough to make the newcomer
red, so red wins at moderate phi.  At phi = 2 both endpoints swap stability
together and an interior pair of zeros (one unstable, one stable) is left
between them.  Raising phi further pushes the pair together until it merges
into a double root at 5 - 3 sqrt 2 and vanishes: a saddle-node at
phi = (3 + sqrt 2)/2.  The scan finds both transitions on a coarse grid and
then bisects each one.

Run:  python demos/phase_scan.py
"""

import math

import numpy as np

from pacompete import Multiplicative, TypeAssignment
from pacompete.experiments import phase_scan

ta = TypeAssignment(3, (0, 1, 1, 1))
grid = np.round(np.arange(1.5, 2.6001, 0.05), 10)
res = phase_scan(ta, Multiplicative(1), "phi", grid)

for t in res.transitions:
    print(f"transition at phi = {t['value']:.12f}")
    print(f"    before: {', '.join(t['before'])}")
    print(f"    after:  {', '.join(t['after'])}")
print(f"saddle-node expected at (3 + sqrt 2)/2 = {(3 + math.sqrt(2)) / 2:.12f}")
