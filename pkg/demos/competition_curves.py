"""Where the red share settles, read off the competition function.

A zero of the competition function is a candidate limit for the red share.
A zero where the curve crosses from positive to negative attracts nearby
trajectories; one crossing the other way repels them.  This script draws the
multiplicative curve for p = (0, 1/2, 1/2, 1) as the blue fitness phi grows
and lists the zeros, then writes the picture to competition_curves.svg.

Run:  python demos/competition_curves.py [output.svg]
"""

import sys
from fractions import Fraction

from pacompete.analysis import Multiplicative, TypeAssignment, competition_function, find_zeros_adaptive
from pacompete.experiments import plot_competition

half = Fraction(1, 2)
ta = TypeAssignment(3, (0, half, half, 1))
phis = [Fraction(1), Fraction(7, 6), Fraction(4, 3), Fraction(3, 2)]

for phi in phis:
    zeros = find_zeros_adaptive(competition_function(ta, Multiplicative(phi)))
    listed = ", ".join(f"{float(z.location):.4f} ({z.kind.value})" for z in zeros)
    print(f"phi = {str(phi):>4}: {listed}")

# Below phi = 5/4 an interior stable zero keeps both colours alive; past it
# the zero at 0 becomes stable and blue takes over.
out = sys.argv[1] if len(sys.argv) > 1 else "competition_curves.svg"
plot_competition([(f"phi={phi}", ta, Multiplicative(phi)) for phi in phis], out, title="p = (0, 1/2, 1/2, 1)")
print(f"wrote {out}")
