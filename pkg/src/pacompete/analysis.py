"""Competition functions of the two-type attachment models and their zeros.

Three functions govern the limiting red share:

* ``P``   -- plain / affine attachment (weight ``deg + alpha``),
* ``PM``  -- multiplicative fitness (blue weight multiplied by ``phi``),
* ``PA``  -- additive fitness (weight ``deg + alpha_type``).

Each is available as a direct formula (``eval_P`` and friends) and as an
expanded power-basis numerator/denominator pair (``to_polynomial``) that the
root finder works on.  Stable zeros are the candidate limits.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Union

import numpy as np
from scipy import optimize

from .polynomial import PolyCoeffs, is_exact

__all__ = [
    "TypeAssignment",
    "Plain",
    "Multiplicative",
    "Additive",
    "FitnessModel",
    "CompetitionFunction",
    "ZeroClass",
    "ClassifiedZero",
    "Degenerate",
    "UnresolvedRoot",
    "NotApplicable",
    "EndpointThreshold",
    "ThresholdReport",
    "as_number",
    "validate_model",
    "normalize_additive",
    "eval_P",
    "eval_PM",
    "eval_PA",
    "additive_field",
    "competition_function",
    "to_polynomial",
    "find_zeros",
    "find_zeros_adaptive",
    "zero_signature",
    "endpoint_thresholds",
    "locate_transition",
    "with_parameter",
    "analysis_report",
]


def as_number(value):
    """Coerce user input to ``int``/``Fraction`` when rational, else ``float``.

    Strings such as ``"7/6"`` or ``"0.9"`` are parsed exactly.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, str):
        return _simplify(Fraction(value.strip()))
    if isinstance(value, Fraction):
        return _simplify(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    raise TypeError(f"cannot interpret {value!r} as a number")


def _simplify(q: Fraction):
    return int(q) if q.denominator == 1 else q


def _div(a, b):
    if is_exact(a) and is_exact(b):
        return Fraction(a) / Fraction(b)
    return a / b


def _half(exact: bool):
    return Fraction(1, 2) if exact else 0.5


# ---------------------------------------------------------------------------
# parameter types


@dataclass(frozen=True)
class TypeAssignment:
    """Edges per new vertex ``m`` and red probabilities ``p[k]``, k red picks."""

    m: int
    p: tuple

    def __post_init__(self):
        if not isinstance(self.m, (int, np.integer)) or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        p = tuple(as_number(v) for v in self.p)
        if len(p) != self.m + 1:
            raise ValueError(f"need m+1={self.m + 1} probabilities, got {len(p)}")
        for k, v in enumerate(p):
            if not 0 <= v <= 1:
                raise ValueError(f"p[{k}]={v} outside [0, 1]")
        object.__setattr__(self, "p", p)

    @classmethod
    def linear(cls, m: int) -> "TypeAssignment":
        return cls(m, tuple(Fraction(k, m) for k in range(m + 1)))

    @property
    def is_linear(self) -> bool:
        return all(Fraction(v) == Fraction(k, self.m) for k, v in enumerate(self.p))

    @property
    def exact(self) -> bool:
        return all(is_exact(v) for v in self.p)

    @property
    def p_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.p])

    def swapped(self) -> "TypeAssignment":
        """Mechanism seen with the colours relabelled: ``p'_k = 1 - p_{m-k}``."""
        return TypeAssignment(self.m, tuple(1 - self.p[self.m - k] for k in range(self.m + 1)))

    def replace_p(self, k: int, value) -> "TypeAssignment":
        p = list(self.p)
        p[k] = value
        return TypeAssignment(self.m, tuple(p))


@dataclass(frozen=True)
class Plain:
    """Affine attachment, weight ``deg + alpha``."""

    alpha: object = 0

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_number(self.alpha))

    kind = "plain"


@dataclass(frozen=True)
class Multiplicative:
    """Weight ``(deg + alpha) * phi`` for blue vertices and ``deg + alpha`` for red."""

    phi: object
    alpha: object = 0

    def __post_init__(self):
        object.__setattr__(self, "phi", as_number(self.phi))
        object.__setattr__(self, "alpha", as_number(self.alpha))
        if not self.phi > 0:
            raise ValueError(f"phi must be positive, got {self.phi}")

    kind = "multiplicative"


@dataclass(frozen=True)
class Additive:
    """Weight ``deg + alpha1`` for red and ``deg + alpha2`` for blue vertices."""

    alpha1: object
    alpha2: object

    def __post_init__(self):
        object.__setattr__(self, "alpha1", as_number(self.alpha1))
        object.__setattr__(self, "alpha2", as_number(self.alpha2))
        if self.alpha1 == self.alpha2:
            raise ValueError("additive model needs alpha1 != alpha2 (use Plain)")

    kind = "additive"

    @classmethod
    def unchecked(cls, alpha1, alpha2) -> "Additive":
        """Build without the ``alpha1 != alpha2`` check (reduction probes only)."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "alpha1", as_number(alpha1))
        object.__setattr__(obj, "alpha2", as_number(alpha2))
        return obj


FitnessModel = Union[Plain, Multiplicative, Additive]


def validate_model(fm: FitnessModel, m: int) -> None:
    """Check that every attachment weight is positive for degrees >= m."""
    alphas = (fm.alpha1, fm.alpha2) if isinstance(fm, Additive) else (fm.alpha,)
    for a in alphas:
        if not a > -m:
            raise ValueError(f"alpha={a} must exceed -m={-m}")


def normalize_additive(ta: TypeAssignment, fm: Additive):
    """Relabel colours so that blue is the fitter type (``alpha2 > alpha1``).

    Returns ``(ta, fm, swapped)``.  Under the swap the red share ``q`` becomes
    ``1 - q`` and ``PA`` changes sign: ``PA'(1 - q) = -PA(q)``.
    """
    if fm.alpha1 > fm.alpha2:
        return ta.swapped(), Additive(fm.alpha2, fm.alpha1), True
    return ta, fm, False


# ---------------------------------------------------------------------------
# direct formulas


def _params_for(z, *values):
    """Keep parameters exact only when the argument is exact too."""
    if is_exact(z):
        return values
    return tuple(float(v) for v in values)


def eval_P(ta: TypeAssignment, z):
    """Half the mean excess red probability over the linear rule at share ``z``."""
    if ta.is_linear:
        return z * 0
    m = ta.m
    exact = ta.exact and is_exact(z)
    acc = 0
    for k, pk in enumerate(ta.p):
        excess = Fraction(pk) - Fraction(k, m) if exact else float(pk) - k / m
        acc = acc + math.comb(m, k) * z**k * (1 - z) ** (m - k) * excess
    return acc / 2


def eval_PM(ta: TypeAssignment, fm: Multiplicative, x):
    m = ta.m
    phi, alpha = _params_for(x, fm.phi, fm.alpha)
    s = _div(x, x + phi * (1 - x))
    c = _div(2 * (m + alpha), 2 * m + alpha)
    return c * eval_P(ta, s) + (s - x)


def eval_PA(ta: TypeAssignment, fm: Additive, z):
    m = ta.m
    a1, a2 = _params_for(z, fm.alpha1, fm.alpha2)
    return (a1 - a2) * z * (1 - z) + (2 * (m + a1) + 2 * (a2 - a1) * z) * eval_P(ta, z)


def additive_field(ta: TypeAssignment, fm: Additive, x, y):
    """Mean-field drift ``(F1, F2)`` of the scaled red/blue masses ``(x, y)``."""
    m = ta.m
    exact = is_exact(x) and is_exact(y)
    a1, a2 = (fm.alpha1, fm.alpha2) if exact else (float(fm.alpha1), float(fm.alpha2))
    q = _div(x, x + y)
    P = eval_P(ta, q)
    F1 = (2 * m + a1) * q + 2 * (m + a1) * P - x
    F2 = (2 * m + a2) * (1 - q) - 2 * (m + a2) * P - y
    return F1, F2


# ---------------------------------------------------------------------------
# polynomial forms


def _p_numerator(ta: TypeAssignment, blue_factor) -> PolyCoeffs:
    """``1/2 sum C(m,k) (p_k - k/m) x^k (b (1-x))^(m-k)`` for blue weight ``b``."""
    exact = ta.exact and is_exact(blue_factor)
    m = ta.m
    x = PolyCoeffs((0, 1))
    blue = PolyCoeffs((blue_factor, -blue_factor))
    acc = PolyCoeffs((0,))
    if ta.is_linear:
        return acc
    for k, pk in enumerate(ta.p):
        excess = pk - Fraction(k, m) if exact else float(pk) - k / m
        if excess == 0:
            continue
        acc = acc + (x**k) * (blue ** (m - k)) * (math.comb(m, k) * excess)
    return acc * _half(exact)


def _cancel_common_linear(num: PolyCoeffs, den_base: PolyCoeffs, power: int):
    """Divide ``num / den_base**power`` by common factors of ``den_base``."""
    c0, c1 = den_base.coeffs if len(den_base) == 2 else (den_base[0], 0)
    if c1 == 0:
        return num, den_base**power
    root = _div(-c0, c1)
    while power > 0 and num.degree >= 1:
        q, r = num.divmod_linear(root)
        if num.exact and is_exact(root):
            divisible = r == 0
        else:
            divisible = abs(float(r)) <= 1e-12 * max(1.0, num.rounding_bound(float(root)) / 1e-16)
        if not divisible:
            break
        num = q * (_div(1, c1))
        power -= 1
    return num, den_base**power


@dataclass(frozen=True)
class CompetitionFunction:
    """One of P / PM / PA with its expanded numerator and denominator."""

    kind: str
    ta: TypeAssignment
    fm: object
    numerator: PolyCoeffs
    denominator: PolyCoeffs

    def __call__(self, x):
        if self.kind == "P":
            return eval_P(self.ta, x)
        if self.kind == "PM":
            return eval_PM(self.ta, self.fm, x)
        return eval_PA(self.ta, self.fm, x)

    def rational(self, x):
        return self.numerator(x) / self.denominator(x)

    def derivative(self, x):
        n, d = self.numerator, self.denominator
        dv = d(x)
        return (n.deriv()(x) * dv - n(x) * d.deriv()(x)) / (dv * dv)

    @property
    def degenerate(self) -> bool:
        return self.numerator.is_zero()

    def params(self) -> dict:
        out = {"m": self.ta.m, "p": [_jsonable(v) for v in self.ta.p]}
        for name in ("alpha", "phi", "alpha1", "alpha2"):
            if hasattr(self.fm, name):
                out[name] = _jsonable(getattr(self.fm, name))
        return out


def competition_function(ta: TypeAssignment, fm: FitnessModel) -> CompetitionFunction:
    validate_model(fm, ta.m)
    m = ta.m
    if isinstance(fm, Plain):
        return CompetitionFunction("P", ta, fm, _p_numerator(ta, 1), PolyCoeffs((1,)))
    if isinstance(fm, Multiplicative):
        phi, alpha = fm.phi, fm.alpha
        exact = ta.exact and is_exact(phi) and is_exact(alpha)
        one = 1 if exact else 1.0
        c = _div(2 * (m + alpha), 2 * m + alpha)
        base = PolyCoeffs((phi, one - phi))
        x_one_minus_x = PolyCoeffs((0, one, -one))
        num = _p_numerator(ta, phi) * c + x_one_minus_x * (base ** (m - 1)) * (one - phi)
        num, den = _cancel_common_linear(num, base, m)
        return CompetitionFunction("PM", ta, fm, num, den)
    if isinstance(fm, Additive):
        a1, a2 = fm.alpha1, fm.alpha2
        z_one_minus_z = PolyCoeffs((0, 1, -1))
        weight = PolyCoeffs((2 * (m + a1), 2 * (a2 - a1)))
        num = z_one_minus_z * (a1 - a2) + weight * _p_numerator(ta, 1)
        return CompetitionFunction("PA", ta, fm, num, PolyCoeffs((1,)))
    raise TypeError(f"unknown fitness model {fm!r}")


def to_polynomial(cf: CompetitionFunction) -> tuple[PolyCoeffs, PolyCoeffs]:
    return cf.numerator, cf.denominator


# ---------------------------------------------------------------------------
# zeros


class ZeroClass(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    TOUCHPOINT = "touchpoint"
    ENDPOINT_STABLE = "endpoint_stable"
    ENDPOINT_UNSTABLE = "endpoint_unstable"


@dataclass(frozen=True)
class ClassifiedZero:
    location: float
    kind: ZeroClass
    derivative: float
    one_sided: bool = False
    warning: str | None = None

    @property
    def stable(self) -> bool:
        return self.kind in (ZeroClass.STABLE, ZeroClass.ENDPOINT_STABLE)

    def to_dict(self) -> dict:
        out = {"location": self.location, "class": self.kind.value, "derivative": self.derivative}
        if self.warning:
            out["warning"] = self.warning
        return out


@dataclass(frozen=True)
class Degenerate:
    reason: str = "competition function is identically zero"


class UnresolvedRoot(RuntimeError):
    """Several roots share one grid cell; retry with a larger ``grid_n``."""

    def __init__(self, lo: float, hi: float, grid_n: int):
        super().__init__(
            f"multiple sign changes inside [{lo:.6g}, {hi:.6g}] at grid_n={grid_n}; "
            "increase grid_n"
        )
        self.interval = (lo, hi)
        self.grid_n = grid_n


class NotApplicable(ValueError):
    pass


_TOUCH_TOL = 1e-10
_SUBSAMPLES = 33


def find_zeros(cf: CompetitionFunction, grid_n: int = 4096, tol: float = 1e-12):
    """Locate and classify the zeros of ``cf`` on ``[0, 1]``.

    Parameters
    ----------
    cf : CompetitionFunction
    grid_n : int
        Number of uniform cells used to bracket sign changes (>= 1000).
    tol : float
        Bisection width and endpoint-root threshold (relative to the largest
        numerator coefficient).

    Returns
    -------
    list of ClassifiedZero, sorted by location, or :class:`Degenerate` when the
    function vanishes identically.

    Raises
    ------
    UnresolvedRoot
        If one grid cell hides more than one sign change.
    """
    if grid_n < 1000:
        raise ValueError("grid_n must be at least 1000")
    if not tol > 0:
        raise ValueError("tol must be positive")
    num = cf.numerator
    if num.is_zero():
        return Degenerate()

    fnum = PolyCoeffs(num.to_float())
    scale = fnum.scale()
    xs = np.linspace(0.0, 1.0, grid_n + 1)
    v = fnum(xs)
    noise = fnum.rounding_bound(xs)
    sgn = np.sign(v)
    sgn[np.abs(v) <= noise] = 0

    roots: list[float] = []
    if abs(v[0]) < tol * scale:
        roots.append(0.0)
        sgn[0] = 0
    if abs(v[-1]) < tol * scale:
        roots.append(1.0)
        sgn[-1] = 0

    def f(t):
        return float(fnum(t))

    def subsample_sign_changes(lo, hi, extra=()):
        ts = np.concatenate([np.linspace(lo, hi, _SUBSAMPLES), np.asarray(extra, float)])
        ts.sort()
        vals = fnum(ts)
        s = np.sign(vals)
        s = s[np.abs(vals) > fnum.rounding_bound(ts)]
        return int(np.count_nonzero(s[1:] != s[:-1]))

    nz = np.flatnonzero(sgn)
    touch_candidates: list[tuple[float, float]] = []
    for a, b in zip(nz[:-1], nz[1:]):
        lo, hi = xs[a], xs[b]
        if sgn[a] != sgn[b]:
            if subsample_sign_changes(lo, hi) > 1:
                raise UnresolvedRoot(lo, hi, grid_n)
            roots.append(optimize.bisect(f, lo, hi, xtol=tol, maxiter=400))
        elif b > a + 1:
            touch_candidates.append((lo, hi))
    # local minima of |f| with no sign change nearby
    av = np.abs(v)
    for i in range(1, grid_n):
        if sgn[i] != 0 and sgn[i - 1] == sgn[i] == sgn[i + 1] and av[i] <= av[i - 1] and av[i] <= av[i + 1]:
            touch_candidates.append((xs[i - 1], xs[i + 1]))

    for lo, hi in touch_candidates:
        res = optimize.minimize_scalar(
            lambda t: abs(f(t)), bounds=(lo, hi), method="bounded", options={"xatol": 1e-13}
        )
        t_star = float(res.x)
        t_star = _golden_polish(lambda t: abs(f(t)), lo, hi, t_star)
        if subsample_sign_changes(lo, hi, extra=(t_star,)) > 0:
            raise UnresolvedRoot(lo, hi, grid_n)
        if abs(f(t_star)) <= _TOUCH_TOL * scale and 0 < t_star < 1:
            roots.append(float(t_star))

    roots = _dedupe(sorted(roots), tol=max(10 * tol, 1e-9))
    return [_classify(cf, fnum, r, roots, grid_n, tol) for r in roots]


def _golden_polish(g, lo, hi, guess, iters=80):
    """Golden-section refinement of a minimiser of ``g`` on a bracket around ``guess``."""
    width = (hi - lo) * 1e-3
    a, b = max(lo, guess - width), min(hi, guess + width)
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    for _ in range(iters):
        if g(c) < g(d):
            b = d
        else:
            a = c
        c, d = b - invphi * (b - a), a + invphi * (b - a)
    best = 0.5 * (a + b)
    return best if g(best) <= g(guess) else guess


def _dedupe(xs: list[float], tol: float) -> list[float]:
    out: list[float] = []
    for x in xs:
        if out and abs(x - out[-1]) <= tol:
            # keep exact endpoints over nearby interior copies
            if x in (0.0, 1.0):
                out[-1] = x
            continue
        out.append(x)
    return out


def _classify(cf, fnum: PolyCoeffs, r: float, roots, grid_n: int, tol: float) -> ClassifiedZero:
    h = max(tol, 1.0 / grid_n)
    others = [abs(r - o) for o in roots if o != r]
    if others:
        # never step across a neighbouring root
        h = min(h, 0.5 * min(others))
    deriv = float(cf.derivative(r))
    scale = fnum.scale()

    def side(t):
        val = fnum(t)
        if abs(val) <= fnum.rounding_bound(t):
            return 0
        return 1 if val > 0 else -1

    if r == 0.0 or r == 1.0:
        s = side(h) if r == 0.0 else side(1.0 - h)
        pushes_in = s < 0 if r == 0.0 else s > 0
        warning = None
        if abs(deriv) <= 1e-9 * scale:
            warning = "derivative vanishes at endpoint; stability set by higher-order terms"
        if s == 0:
            warning = "sign ambiguous next to endpoint"
        kind = ZeroClass.ENDPOINT_STABLE if pushes_in else ZeroClass.ENDPOINT_UNSTABLE
        return ClassifiedZero(r, kind, deriv, one_sided=True, warning=warning)

    left, right = side(r - h), side(r + h)
    if left == 0 or right == 0:
        return ClassifiedZero(
            r, ZeroClass.TOUCHPOINT, deriv, warning="multiplicity >= 2 suspected; sign pattern ambiguous"
        )
    if left > 0 > right:
        kind = ZeroClass.STABLE
    elif left < 0 < right:
        kind = ZeroClass.UNSTABLE
    else:
        kind = ZeroClass.TOUCHPOINT
    return ClassifiedZero(r, kind, deriv)


def find_zeros_adaptive(cf: CompetitionFunction, grid_n: int = 4096, tol: float = 1e-12, max_grid: int = 2**21):
    """``find_zeros`` that multiplies ``grid_n`` by 8 on :class:`UnresolvedRoot`."""
    while True:
        try:
            return find_zeros(cf, grid_n, tol)
        except UnresolvedRoot:
            if grid_n * 8 > max_grid:
                raise
            grid_n *= 8


def zero_signature(zeros) -> tuple:
    if isinstance(zeros, Degenerate):
        return ("degenerate",)
    return tuple(z.kind.value for z in zeros)


# ---------------------------------------------------------------------------
# parameter sweeps and thresholds

_P_NAME = re.compile(r"^p(\d+)$")


def with_parameter(ta: TypeAssignment, fm: FitnessModel, name: str, value):
    """Return ``(ta, fm)`` with one named parameter replaced."""
    match = _P_NAME.match(name)
    if match:
        return ta.replace_p(int(match.group(1)), value), fm
    if name == "phi" and isinstance(fm, Multiplicative):
        return ta, Multiplicative(value, fm.alpha)
    if name == "alpha" and isinstance(fm, (Plain, Multiplicative)):
        return ta, (Plain(value) if isinstance(fm, Plain) else Multiplicative(fm.phi, value))
    if name in ("alpha1", "alpha2") and isinstance(fm, Additive):
        a1, a2 = (value, fm.alpha2) if name == "alpha1" else (fm.alpha1, value)
        return ta, Additive.unchecked(a1, a2) if a1 == a2 else Additive(a1, a2)
    raise ValueError(f"parameter {name!r} does not apply to {type(fm).__name__}")


def _default_bracket(name: str, ta: TypeAssignment):
    if _P_NAME.match(name):
        return (0.0, 1.0)
    if name == "phi":
        return (1e-6, 1e6)
    return (-ta.m + 1e-9, 1e6)


def _current_value(ta, fm, name):
    match = _P_NAME.match(name)
    if match:
        return ta.p[int(match.group(1))]
    return getattr(fm, name)


@dataclass(frozen=True)
class EndpointThreshold:
    endpoint: int
    value: object = None
    stable_when: str | None = None
    method: str | None = None
    reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "endpoint": self.endpoint,
            "value": None if self.value is None else float(self.value),
            "exact": _jsonable(self.value) if is_exact(self.value) else None,
            "stable_when": self.stable_when,
            "method": self.method,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class ThresholdReport:
    model: str
    parameter: str
    at_zero: EndpointThreshold
    at_one: EndpointThreshold
    swapped: bool = False

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "parameter": self.parameter,
            "at_zero": self.at_zero.to_dict(),
            "at_one": self.at_one.to_dict(),
            "swapped": self.swapped,
        }


def _endpoint_slope(ta, fm, endpoint: int) -> float:
    cf = competition_function(ta, fm)
    return float(cf.numerator.deriv()(float(endpoint)))


def _closed_form(ta: TypeAssignment, fm, name: str, endpoint: int):
    m, p = ta.m, ta.p
    if isinstance(fm, Multiplicative) and fm.alpha == 0:
        if name == "phi":
            if endpoint == 0:
                return _div(m * p[1] + 1, 2), "above"
            return _div(2, m * (1 - p[m - 1]) + 1), "below"
        if name == "p1" and m == 2:
            phi = fm.phi
            if endpoint == 0:
                return phi - _div(1, 2), "below"
            return _div(3, 2) - _div(1, phi), "above"
    if isinstance(fm, Additive) and name == "p1" and m == 2:
        a1, a2 = fm.alpha1, fm.alpha2
        if endpoint == 0:
            return _div(1, 2) + _div(a2 - a1, 2 * a1 + 4), "below"
        return _div(1, 2) + _div(a2 - a1, 2 * a2 + 4), "above"
    return None


def _as_float_model(ta, fm):
    fta = TypeAssignment(ta.m, tuple(float(v) for v in ta.p))
    if isinstance(fm, Plain):
        return fta, Plain(float(fm.alpha))
    if isinstance(fm, Multiplicative):
        return fta, Multiplicative(float(fm.phi), float(fm.alpha))
    return fta, Additive.unchecked(float(fm.alpha1), float(fm.alpha2))


def _numeric_threshold(ta, fm, name, endpoint, bracket, tol=1e-13):
    lo, hi = bracket
    # the scan only needs slope signs, so skip exact arithmetic
    ta, fm = _as_float_model(ta, fm)

    def slope(v):
        t2, f2 = with_parameter(ta, fm, name, float(v))
        return _endpoint_slope(t2, f2, endpoint)

    if name == "phi" and lo > 0:
        grid = np.geomspace(lo, hi, 401)
    else:
        grid = np.linspace(lo, hi, 401)
        if hi - lo > 1e3:
            grid = np.unique(np.concatenate([np.linspace(lo, lo + 100, 501), np.geomspace(1, hi, 101)]))
            grid = grid[(grid >= lo) & (grid <= hi)]
    vals = np.array([slope(g) for g in grid])
    sg = np.sign(vals)
    # a grid value can hit the threshold exactly; count it only if the sign flips across it
    exact = [i for i in np.flatnonzero(sg == 0) if 0 < i < len(sg) - 1 and sg[i - 1] * sg[i + 1] < 0]
    idx = np.flatnonzero(sg[1:] * sg[:-1] < 0)
    if len(idx) == 0 and not exact:
        return None, None
    if exact and (len(idx) == 0 or exact[0] <= idx[0]):
        root = float(grid[exact[0]])
    else:
        i = idx[0]
        root = optimize.bisect(slope, grid[i], grid[i + 1], xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)
    above = slope(root + max(1e-7, 1e-7 * abs(root)))
    return root, "above" if above < 0 else "below"


def endpoint_thresholds(
    ta: TypeAssignment,
    fm: FitnessModel,
    vary: str | None = None,
    bracket: tuple[float, float] | None = None,
    method: str = "auto",
) -> ThresholdReport:
    """Parameter values at which the endpoint zeros change stability.

    Parameters
    ----------
    ta, fm
        Model; every parameter other than ``vary`` is held fixed.
    vary : str, optional
        ``"phi"`` (default for multiplicative), ``"alpha"``, ``"alpha1"``,
        ``"alpha2"`` (default for additive with m > 2) or ``"p<k>"``
        (default ``"p1"`` for additive with m == 2).
    bracket : (float, float), optional
        Search interval for the numeric route.
    method : {"auto", "numeric"}
        ``auto`` uses the closed forms where they exist (multiplicative with
        alpha = 0; m = 2 in ``p1``); ``numeric`` always bisects on the sign of
        the endpoint derivative.

    Raises
    ------
    NotApplicable
        If neither endpoint is a zero (``p0 != 0`` and ``p_m != 1``).
    """
    swapped = False
    if vary is None:
        if isinstance(fm, Multiplicative):
            vary = "phi"
        elif isinstance(fm, Additive):
            vary = "p1" if ta.m == 2 else "alpha2"
        else:
            vary = "alpha"
    is_zero = {0: ta.p[0] == 0, 1: ta.p[-1] == 1}
    if not any(is_zero.values()):
        raise NotApplicable("neither endpoint is a zero: need p0 = 0 or p_m = 1")
    if isinstance(fm, Plain):
        reason = "endpoint stability in the plain model does not depend on alpha"
        ends = [EndpointThreshold(e, reason=reason) for e in (0, 1)]
        return ThresholdReport("plain", vary, ends[0], ends[1])

    bracket = bracket or _default_bracket(vary, ta)
    results = []
    for endpoint in (0, 1):
        if not is_zero[endpoint]:
            results.append(
                EndpointThreshold(endpoint, reason=f"{endpoint} is not a zero (p{0 if endpoint == 0 else ta.m} unsuitable)")
            )
            continue
        closed = _closed_form(ta, fm, vary, endpoint) if method == "auto" else None
        if closed is not None:
            value, when = closed
            results.append(EndpointThreshold(endpoint, value, when, "closed_form"))
            continue
        value, when = _numeric_threshold(ta, fm, vary, endpoint, bracket)
        if value is None:
            results.append(EndpointThreshold(endpoint, method="bisection", reason="no sign change of the endpoint slope in bracket"))
        else:
            results.append(EndpointThreshold(endpoint, value, when, "bisection"))
    return ThresholdReport(fm.kind, vary, results[0], results[1], swapped)


def _endpoint_exchange(ta, fm, vary, endpoint, lo, hi, tol):
    def is_zero(v):
        t2, _ = with_parameter(ta, fm, vary, v)
        return t2.p[0] == 0 if endpoint == 0 else t2.p[-1] == 1

    if not (is_zero(lo) and is_zero(hi)):
        return None

    def slope(v):
        t2, f2 = with_parameter(ta, fm, vary, float(v))
        return _endpoint_slope(t2, f2, endpoint)

    s_lo, s_hi = slope(lo), slope(hi)
    if s_lo == 0 or s_hi == 0:
        return lo if s_lo == 0 else hi
    if s_lo * s_hi > 0:
        return None
    return optimize.bisect(slope, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)


def locate_transition(
    ta: TypeAssignment,
    fm: FitnessModel,
    vary: str,
    lo: float,
    hi: float,
    tol: float = 1e-10,
    grid_n: int = 4096,
) -> float:
    """Bisect on ``vary`` for the point where the zero signature changes.

    The zero structure (classes of all zeros, in order) must differ at ``lo``
    and ``hi``.  Works for endpoint exchanges and interior saddle-node
    collisions alike.
    """

    def sig(v):
        t2, f2 = with_parameter(ta, fm, vary, float(v))
        return zero_signature(find_zeros_adaptive(competition_function(t2, f2), grid_n))

    s_lo = sig(lo)
    if sig(hi) == s_lo:
        raise ValueError(f"zero structure identical at {vary}={lo} and {vary}={hi}")
    # an endpoint changing stability is pinned down by the sign of its slope;
    # the signature alone blurs it because a nearby interior zero merges into it
    for endpoint in (0, 1):
        root = _endpoint_exchange(ta, fm, vary, endpoint, float(lo), float(hi), tol)
        if root is not None:
            return root
    a, b = float(lo), float(hi)
    while b - a > tol:
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        if sig(mid) == s_lo:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# reporting


def _jsonable(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def analysis_report(
    ta: TypeAssignment,
    fm: FitnessModel,
    grid_n: int = 4096,
    tol: float = 1e-12,
    thresholds: bool = True,
) -> dict:
    """JSON-ready summary: zeros with classes, endpoint thresholds, degeneracy."""
    cf = competition_function(ta, fm)
    zeros = find_zeros(cf, grid_n, tol)
    report = {
        "model": fm.kind,
        "function": cf.kind,
        "params": cf.params(),
        "degenerate": isinstance(zeros, Degenerate),
        "zeros": [] if isinstance(zeros, Degenerate) else [z.to_dict() for z in zeros],
        "thresholds": None,
    }
    if isinstance(fm, Additive):
        report["params"]["fitter"] = "blue" if fm.alpha2 > fm.alpha1 else "red"
    if thresholds and not isinstance(fm, Plain):
        try:
            report["thresholds"] = endpoint_thresholds(ta, fm).to_dict()
        except NotApplicable as exc:
            report["thresholds"] = {"not_applicable": str(exc)}
    return report
