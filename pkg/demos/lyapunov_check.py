"""Testing a Lyapunov decrease bound for the additive model numerically.

For additive fitness the mean-field dynamics live on (x, y), the two weighted
masses, inside a parallelogram D.  A function L built from the affine
combination ell and the integrated competition function should decrease
along the flow.  The derivative of L along the flow is available in closed
form; this script checks it against finite differences and then compares it
with two candidate upper bounds on a lattice in D:

* with S2 = sup g, the bound -2 (ell + S2 PA)^2, and
* with S2 = sup |g|, the bound -2 (|ell| - S2 |PA|)^2.

The first fails wherever ell and PA share a sign; the second holds.
Integrating the flow from random starts shows whether L actually decreases.

Run:  python demos/lyapunov_check.py
"""

from fractions import Fraction

from pacompete import Additive, TypeAssignment
from pacompete.experiments import lyapunov_flow_check, lyapunov_grid_check

half = Fraction(1, 2)
cases = [
    (TypeAssignment(3, (0, half, half, 1)), Additive(0, 1)),
    (TypeAssignment(3, (0, 0, Fraction(9, 10), 1)), Additive(0, 10)),
    (TypeAssignment(3, (0, 0, Fraction(9, 10), 1)), Additive(0, 1)),
]

for ta, fm in cases:
    print(f"p = {tuple(str(v) for v in ta.p)}, alpha = ({fm.alpha1}, {fm.alpha2})")
    sup_g = lyapunov_grid_check(ta, fm)
    sup_abs = lyapunov_grid_check(ta, fm, corrected=True)
    print(f"  closed form vs finite differences: {sup_g.identity_error:.1e}")
    print(f"  S2 = sup g   : {sup_g.violations}/{sup_g.n_points} lattice points violate the bound")
    print(f"  S2 = sup |g| : {sup_abs.violations}/{sup_abs.n_points} lattice points violate the bound")
    for label, corrected in (("sup g", False), ("sup |g|", True)):
        flow = lyapunov_flow_check(ta, fm, starts=10, corrected=corrected)
        print(f"  flow with S2 = {label:7}: largest dL/dt {flow.max_increase_rate:+.2e}, converged {flow.converged}")
