"""How often does red win when blue is fitter?

p = (0, 0, 9/10, 1) lets red reproduce only when most of a new vertex's
neighbours are red.  With equal fitness red still wins a fair share of runs,
because early luck can push the red share past the unstable interior zero.
Raising phi shifts that zero and red wins less often, until it never wins.

Each phi gets an ensemble of independent runs on the urn path (exact in law
for alpha = 0 and far faster than growing the graph).  A run counts as red
dominated if its red share ends above 1/2 and is still rising over the last
tenth of the run.

Run:  python demos/domination_frequencies.py [runs] [steps]
"""

import sys
from fractions import Fraction

from pacompete import Multiplicative, SimConfig, TypeAssignment
from pacompete.experiments import run_ensemble

runs = int(sys.argv[1]) if len(sys.argv) > 1 else 500
steps = int(sys.argv[2]) if len(sys.argv) > 2 else 20000
ta = TypeAssignment(3, (0, 0, Fraction(9, 10), 1))

print(f"{runs} runs x {steps} steps, m = 3, p = (0, 0, 9/10, 1)")
print(f"{'phi':>5} {'red':>5} {'blue':>5} {'undec':>6}   red 95% interval")
for phi in (1.0, 1.1, 1.2, 1.3, 1.4, 1.45, 1.5):
    res = run_ensemble(SimConfig(ta, Multiplicative(phi), steps=steps), runs, master_seed=1, threads=4)
    lo, hi = res.interval("red")
    print(f"{phi:5.2f} {res.red_dominated:5d} {res.blue_dominated:5d} {res.undecided:6d}   [{lo:.3f}, {hi:.3f}]")
