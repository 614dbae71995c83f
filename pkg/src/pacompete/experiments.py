"""Ensembles, domination classification, parameter scans and Lyapunov checks."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction

import numpy as np
from scipy import integrate, stats

from .analysis import (
    Additive,
    Degenerate,
    FitnessModel,
    Multiplicative,
    Plain,
    TypeAssignment,
    _p_numerator,
    competition_function,
    find_zeros_adaptive,
    locate_transition,
    normalize_additive,
    with_parameter,
    zero_signature,
)
from .polynomial import is_exact
from .sim import (
    InitialGraph,
    InvariantViolation,
    SimConfig,
    Trajectory,
    derive_seed,
    exact_drift,
    make_rng,
    new_simulation,
    run,
)
from .urn import enumerate_exact, run_urn, urn_supported


class MissingRecord(KeyError):
    pass


class WrongModel(TypeError):
    pass


# ---------------------------------------------------------------------------
# domination


class Domination(str, Enum):
    RED = "red"
    BLUE = "blue"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class DominationRule:
    """Declare a colour dominant if its share ends above ``threshold`` and is still rising.

    ``early_step`` defaults to ``floor(0.9 * final_step)``.
    """

    final_step: int
    early_step: int | None = None
    threshold: float = 0.5

    def __post_init__(self):
        if self.early_step is None:
            object.__setattr__(self, "early_step", math.floor(0.9 * self.final_step))
        if not 0 <= self.early_step <= self.final_step:
            raise ValueError("need 0 <= early_step <= final_step")

    def classify(self, early: float, final: float) -> Domination:
        if final > self.threshold and final > early:
            return Domination.RED
        if 1 - final > self.threshold and 1 - final > 1 - early:
            return Domination.BLUE
        return Domination.UNDECIDED


def classify_domination(traj: Trajectory, rule: DominationRule) -> Domination:
    """Classify one run by its red statistic at the rule's two checkpoints."""
    stat = traj.red_statistic
    try:
        early = stat[traj.index_of(rule.early_step)]
        final = stat[traj.index_of(rule.final_step)]
    except KeyError as exc:
        raise MissingRecord(f"trajectory has no record at step {exc.args[0]}") from None
    return rule.classify(float(early), float(final))


# ---------------------------------------------------------------------------
# ensembles


def wilson_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(k, n).proportion_ci(level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class EnsembleResult:
    runs: int
    red_dominated: int
    blue_dominated: int
    undecided: int
    terminals: np.ndarray
    master_seed: int
    path: str
    outcomes: list = field(default_factory=list)

    def __post_init__(self):
        if self.red_dominated + self.blue_dominated + self.undecided != self.runs:
            raise ValueError("counts must sum to runs")

    @property
    def counts(self) -> dict:
        return {"red": self.red_dominated, "blue": self.blue_dominated, "undecided": self.undecided}

    def frequency(self, outcome: str = "red") -> float:
        return self.counts[outcome] / self.runs

    def interval(self, outcome: str = "red", level: float = 0.95) -> tuple[float, float]:
        return wilson_interval(self.counts[outcome], self.runs, level)

    def to_dict(self, include_terminals: bool = False) -> dict:
        out = {
            "runs": self.runs,
            "master_seed": self.master_seed,
            "path": self.path,
            "counts": self.counts,
            "frequencies": {k: self.frequency(k) for k in self.counts},
            "intervals": {k: list(self.interval(k)) for k in self.counts},
        }
        if include_terminals:
            out["per_run_terminals"] = [float(v) for v in self.terminals]
        return out


def simulate(cfg: SimConfig, path: str = "auto", check: bool = True) -> Trajectory:
    """Run ``cfg`` on the urn path when it applies (``path="auto"``) or as requested."""
    if path == "auto":
        path = "urn" if urn_supported(cfg.fm) else "graph"
    if path == "urn":
        return run_urn(cfg)
    if path == "graph":
        return run(cfg, check=check)
    raise ValueError(f"unknown path {path!r}")


def run_ensemble(
    cfg: SimConfig,
    runs: int,
    rule: DominationRule | None = None,
    master_seed: int = 0,
    threads: int = 1,
    path: str = "auto",
    check: bool = False,
) -> EnsembleResult:
    """Run ``runs`` independent copies of ``cfg`` and classify each one.

    Run ``i`` uses seed ``derive_seed(master_seed, i)``, so results do not
    depend on ``threads`` or on completion order.  ``cfg.seed`` is ignored.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    if threads < 1:
        raise ValueError("threads must be at least 1")
    rule = rule or DominationRule(cfg.steps)
    if rule.final_step > cfg.steps:
        raise ValueError("rule.final_step exceeds the number of simulated steps")
    base = replace(cfg, record_every=cfg.steps or 1, record_at=(rule.early_step, rule.final_step))
    resolved = path if path != "auto" else ("urn" if urn_supported(cfg.fm) else "graph")

    def one(i):
        traj = simulate(replace(base, seed=derive_seed(master_seed, i)), resolved, check)
        return classify_domination(traj, rule), float(traj.red_statistic[traj.index_of(rule.final_step)])

    if threads == 1:
        results = [one(i) for i in range(runs)]
    else:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, range(runs)))
    outcomes = [r[0] for r in results]
    return EnsembleResult(
        runs,
        outcomes.count(Domination.RED),
        outcomes.count(Domination.BLUE),
        outcomes.count(Domination.UNDECIDED),
        np.array([r[1] for r in results]),
        int(master_seed),
        resolved,
        outcomes,
    )


def terminal_values(cfg: SimConfig, runs: int, master_seed: int = 0, path: str = "auto", threads: int = 1) -> np.ndarray:
    """Terminal red statistic of ``runs`` seeded copies of ``cfg``."""
    base = replace(cfg, record_every=cfg.steps or 1, record_at=())

    def one(i):
        return float(simulate(replace(base, seed=derive_seed(master_seed, i)), path, check=False).red_statistic[-1])

    if threads == 1:
        return np.array([one(i) for i in range(runs)])
    with ThreadPoolExecutor(threads) as pool:
        return np.array(list(pool.map(one, range(runs))))


@dataclass
class MartingaleCheck:
    max_abs_drift: object
    increments: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.increments.mean())

    @property
    def standard_error(self) -> float:
        return float(self.increments.std(ddof=1) / math.sqrt(len(self.increments)))


def martingale_check(
    ta: TypeAssignment, fm: FitnessModel, runs: int, steps: int, record_every: int, master_seed: int = 0
) -> MartingaleCheck:
    """Exact conditional drift at every record plus the terminal increments ``x_N - x_0``."""
    worst = 0
    incs = []
    for i in range(runs):
        cfg = SimConfig(ta, fm, seed=derive_seed(master_seed, i), steps=steps, record_every=record_every)
        rng = make_rng(cfg.seed)
        state = new_simulation(cfg)
        x0 = state.statistics()[1]
        for t in cfg.schedule():
            if t > state.n:
                state.advance(rng.random((t - state.n, ta.m + 1)))
            d = exact_drift(state).expected
            worst = max(worst, abs(d))
        incs.append(state.statistics()[1] - x0)
    return MartingaleCheck(worst, np.array(incs))


# ---------------------------------------------------------------------------
# phase scans


@dataclass
class ScanResult:
    parameter: str
    rows: list = field(default_factory=list)
    transitions: list = field(default_factory=list)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("param", "root", "class", "derivative"))
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def phase_scan(
    ta: TypeAssignment,
    fm: FitnessModel,
    vary: str,
    grid,
    refine: bool = True,
    grid_n: int = 4096,
) -> ScanResult:
    """Zeros and their classes at each value of ``vary`` in ``grid``.

    With ``refine`` each pair of neighbouring grid values whose zero structure
    differs is bisected down to the exact transition point.
    """
    grid = [float(v) for v in grid]
    if not grid:
        raise ValueError("grid must be nonempty")
    result = ScanResult(vary)
    signatures = []
    for v in grid:
        t2, f2 = with_parameter(ta, fm, vary, v)
        zeros = find_zeros_adaptive(competition_function(t2, f2), grid_n)
        signatures.append(zero_signature(zeros))
        if isinstance(zeros, Degenerate):
            result.rows.append((v, None, "degenerate", None))
            continue
        for z in zeros:
            result.rows.append((v, float(z.location), z.kind.value, float(z.derivative)))
    for i in range(len(grid) - 1):
        if signatures[i] != signatures[i + 1]:
            lo, hi = grid[i], grid[i + 1]
            where = locate_transition(ta, fm, vary, lo, hi, grid_n=grid_n) if refine else 0.5 * (lo + hi)
            result.transitions.append({"lo": lo, "hi": hi, "value": where, "before": signatures[i], "after": signatures[i + 1]})
    return result


# ---------------------------------------------------------------------------
# additive model: state region and Lyapunov function


def _f(v):
    return Fraction(v) if is_exact(v) else float(v)


class LyapunovSystem:
    """Region ``D`` and the Lyapunov pieces of the additive mean-field flow.

    Colours are relabelled so that blue is the fitter type (``alpha2 > alpha1``);
    ``x`` and ``y`` passed to the methods are in that orientation.

    With ``absolute=True`` the constant ``S2`` is the supremum of ``|g|``
    rather than of ``g``; only then is ``L`` guaranteed to decrease.
    """

    def __init__(self, ta: TypeAssignment, fm: FitnessModel, s2_grid: int = 512, absolute: bool = False):
        if not isinstance(fm, Additive):
            raise WrongModel("Lyapunov analysis applies to the additive model only")
        self.ta, self.fm, self.swapped = normalize_additive(ta, fm)
        m = self.ta.m
        a1, a2 = _f(self.fm.alpha1), _f(self.fm.alpha2)
        self.m, self.a1, self.a2 = m, float(a1), float(a2)
        self.P = _p_numerator(self.ta, 1)
        self.dP = self.P.deriv()
        self.PA = competition_function(self.ta, self.fm).numerator
        self._PA_int = self.PA.integ()
        self.S1 = 1 / (2 * m + a2)
        self.absolute = absolute
        self.S2, self.S2_at = self._sup_g(s2_grid)

    # region
    @property
    def vertices(self) -> np.ndarray:
        m, a1, a2 = self.m, self.a1, self.a2
        return np.array([(2 * m + a1, 0.0), (m + a1, m), (0.0, 2 * m + a2), (m, m + a2)])

    def to_region(self, a, b):
        """Map the unit square onto ``D``: corner ``(2m+a1, 0)`` plus two edge vectors."""
        v0, v1, _, v3 = self.vertices
        a, b = np.asarray(a, float), np.asarray(b, float)
        return v0[0] + a * (v1[0] - v0[0]) + b * (v3[0] - v0[0]), v0[1] + a * (v1[1] - v0[1]) + b * (v3[1] - v0[1])

    def grid_points(self, n: int, interior: bool = True):
        """About ``n`` points on a square lattice covering ``D``."""
        k = max(2, math.ceil(math.sqrt(n)))
        t = (np.arange(k) + 0.5) / k if interior else np.linspace(0.0, 1.0, k)
        a, b = np.meshgrid(t, t)
        return self.to_region(a.ravel(), b.ravel())

    def random_points(self, n: int, seed: int = 0):
        u = make_rng(seed).random((n, 2))
        return self.to_region(u[:, 0], u[:, 1])

    # pieces
    def field(self, x, y):
        m, a1, a2 = self.m, self.a1, self.a2
        q = x / (x + y)
        P = self.P(q)
        return (2 * m + a1) * q + 2 * (m + a1) * P - x, (2 * m + a2) * (1 - q) - 2 * (m + a2) * P - y

    def g(self, x, y):
        """``m (alpha2 - alpha1) P'(q) / (x + y)``, whose supremum over ``D`` is ``S2``."""
        return self.m * (self.a2 - self.a1) * self.dP(x / (x + y)) / (x + y)

    def ell(self, x, y):
        m, a1, a2 = self.m, self.a1, self.a2
        q = x / (x + y)
        return (2 * m + a1) * (2 * m + a2) + 2 * m * (a1 - a2) * self.P(q) - (2 * m + a2) * x - (2 * m + a1) * y

    def L1(self, q):
        """``-integral_1^q PA``."""
        return -(self._PA_int(q) - self._PA_int(1.0))

    def L2(self, x, y):
        return self.ell(x, y) ** 2

    def L(self, x, y):
        return self.L2(x, y) + 2 * (self.S2**2 / self.S1) * self.L1(x / (x + y))

    def derivative_along_flow(self, x, y):
        """Closed form of ``grad L . F``."""
        s = x + y
        ell = self.ell(x, y)
        pa = self.PA(x / s)
        return -2 * ell**2 - 4 * self.g(x, y) * ell * pa - 2 * (self.S2**2 / self.S1) * pa**2 / s

    def derivative_numeric(self, x, y, h: float = 1e-6):
        """``grad L . F`` by central differences (independent of the closed form)."""
        F1, F2 = self.field(x, y)
        dLx = (self.L(x + h, y) - self.L(x - h, y)) / (2 * h)
        dLy = (self.L(x, y + h) - self.L(x, y - h)) / (2 * h)
        return dLx * F1 + dLy * F2

    def claimed_bound(self, x, y):
        """``-2 (ell + S2 PA(q))^2``."""
        return -2 * (self.ell(x, y) + self.S2 * self.PA(x / (x + y))) ** 2

    def corrected_bound(self, x, y):
        """``-2 (|ell| - S2 |PA(q)|)^2``, valid when ``S2`` bounds ``|g|``."""
        return -2 * (np.abs(self.ell(x, y)) - self.S2 * np.abs(self.PA(x / (x + y)))) ** 2

    def _objective(self, x, y):
        v = self.g(x, y)
        return np.abs(v) if self.absolute else v

    def _sup_g(self, n: int):
        t = np.linspace(0.0, 1.0, n)
        a, b = np.meshgrid(t, t)
        x, y = self.to_region(a, b)
        vals = self._objective(x, y)
        i, j = np.unravel_index(np.argmax(vals), vals.shape)
        best = float(vals[i, j])
        ab = np.array([a[i, j], b[i, j]])
        # one Newton step in the unit-square coordinates, kept only if it improves
        h = 1.0 / (4 * n)

        def G(p):
            return float(self._objective(*self.to_region(p[0], p[1])))

        grad = np.zeros(2)
        hess = np.zeros((2, 2))
        e = np.eye(2) * h
        for r in range(2):
            grad[r] = (G(ab + e[r]) - G(ab - e[r])) / (2 * h)
            for c in range(2):
                hess[r, c] = (G(ab + e[r] + e[c]) - G(ab + e[r] - e[c]) - G(ab - e[r] + e[c]) + G(ab - e[r] - e[c])) / (4 * h * h)
        try:
            cand = np.clip(ab - np.linalg.solve(hess, grad), 0.0, 1.0)
            val = G(cand)
            if np.isfinite(val) and val > best:
                best, ab = val, cand
        except np.linalg.LinAlgError:
            pass
        return best, tuple(float(v) for v in self.to_region(ab[0], ab[1]))


@dataclass
class GridCheck:
    n_points: int
    violations: int
    max_excess: float
    identity_error: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def lyapunov_grid_check(
    ta: TypeAssignment, fm: Additive, n_points: int = 500, slack: float = 1e-8, corrected: bool = False
) -> GridCheck:
    """Test ``grad L . F <= -2 (ell + S2 PA)^2 + slack`` on a lattice in ``D``.

    ``corrected=True`` instead takes ``S2 = sup |g|`` and tests the bound
    ``-2 (|ell| - S2 |PA|)^2``, which holds everywhere in ``D``.

    Also reports the largest relative gap between the closed-form derivative
    and a finite-difference one, as a check on the derivative itself.
    """
    sysm = LyapunovSystem(ta, fm, absolute=corrected)
    x, y = sysm.grid_points(n_points)
    lhs = sysm.derivative_along_flow(x, y)
    rhs = sysm.corrected_bound(x, y) if corrected else sysm.claimed_bound(x, y)
    excess = lhs - rhs
    num = sysm.derivative_numeric(x, y)
    ident = float(np.max(np.abs(num - lhs) / (1 + np.abs(lhs))))
    return GridCheck(len(x), int(np.count_nonzero(excess > slack)), float(excess.max()), ident)


@dataclass
class FlowCheck:
    starts: int
    max_increase_rate: float
    terminal_ell: np.ndarray
    terminal_pa: np.ndarray
    tol_rate: float
    tol_converged: float

    @property
    def monotone(self) -> bool:
        return self.max_increase_rate <= self.tol_rate

    @property
    def converged(self) -> bool:
        return bool(np.all(np.abs(self.terminal_ell) < self.tol_converged) and np.all(np.abs(self.terminal_pa) < self.tol_converged))

    @property
    def passed(self) -> bool:
        return self.monotone and self.converged


def lyapunov_flow_check(
    ta: TypeAssignment,
    fm: Additive,
    starts: int = 20,
    t_end: float = 2000.0,
    seed: int = 0,
    tol_rate: float = 1e-7,
    tol_converged: float = 1e-4,
    corrected: bool = False,
) -> FlowCheck:
    """Integrate ``(x, y)' = F`` from random interior points of ``D`` and watch ``L``.

    ``max_increase_rate`` is the largest ``(L(t_{i+1}) - L(t_i)) / (t_{i+1} - t_i)``
    over the output times.
    """
    sysm = LyapunovSystem(ta, fm, absolute=corrected)
    x0, y0 = sysm.to_region(*(0.02 + 0.96 * make_rng(seed).random((2, starts))))
    t_eval = np.concatenate([[0.0], np.geomspace(1e-3, t_end, 400)])
    worst = -np.inf
    ells, pas = [], []
    for xs, ys in zip(x0, y0):
        sol = integrate.solve_ivp(
            lambda _t, u: sysm.field(u[0], u[1]), (0.0, t_end), [xs, ys],
            method="RK45", rtol=1e-9, atol=1e-9, t_eval=t_eval,
        )
        Lv = sysm.L(sol.y[0], sol.y[1])
        rate = np.diff(Lv) / np.diff(sol.t)
        worst = max(worst, float(rate.max()))
        xe, ye = sol.y[0, -1], sol.y[1, -1]
        ells.append(sysm.ell(xe, ye))
        pas.append(sysm.PA(xe / (xe + ye)))
    return FlowCheck(starts, worst, np.array(ells), np.array(pas), tol_rate, tol_converged)


@dataclass
class LyapunovReport:
    S1: object
    S2: float
    ell: np.ndarray
    L1: np.ndarray
    L2: np.ndarray
    L: np.ndarray
    terminal_ell: float
    terminal_pa: float
    swapped: bool

    def to_dict(self) -> dict:
        return {
            "S1": float(self.S1),
            "S2": self.S2,
            "terminal_abs_ell": self.terminal_ell,
            "terminal_abs_PA": self.terminal_pa,
            "swapped": self.swapped,
        }


def lyapunov_monitor(traj: Trajectory, ta: TypeAssignment, fm: FitnessModel) -> LyapunovReport:
    """Evaluate the Lyapunov pieces along a recorded additive trajectory."""
    if traj.model != "additive" or not isinstance(fm, Additive):
        raise WrongModel("lyapunov_monitor needs an additive trajectory and model")
    sysm = LyapunovSystem(ta, fm)
    x, y = (traj.y, traj.x) if sysm.swapped else (traj.x, traj.y)
    q = x / (x + y)
    ell = sysm.ell(x, y)
    L1 = sysm.L1(q)
    L2 = ell**2
    m, a2 = ta.m, normalize_additive(ta, fm)[1].alpha2
    S1 = Fraction(1, 1) / (2 * m + Fraction(a2)) if is_exact(a2) else sysm.S1
    return LyapunovReport(
        S1, sysm.S2, ell, L1, L2, L2 + 2 * (sysm.S2**2 / sysm.S1) * L1,
        float(abs(ell[-1])), float(abs(sysm.PA(q[-1]))), sysm.swapped,
    )


def unstable_zero_avoidance(
    ta: TypeAssignment,
    fm: Additive,
    q_star: float,
    runs: int = 200,
    steps: int = 50_000,
    window: float = 0.02,
    master_seed: int = 0,
    threads: int = 1,
) -> float:
    """Fraction of runs whose terminal ``q`` lies within ``window`` of ``q_star``."""
    cfg = SimConfig(ta, fm, steps=steps)
    q = terminal_values(cfg, runs, master_seed, "graph", threads)
    return float(np.mean(np.abs(q - q_star) < window))


# ---------------------------------------------------------------------------
# plots


_ZERO_COLOURS = {
    "stable": "tab:green",
    "endpoint_stable": "tab:green",
    "unstable": "tab:red",
    "endpoint_unstable": "tab:red",
    "touchpoint": "tab:orange",
}


def plot_competition(curves, path, title: str | None = None, samples: int = 801):
    """Write an SVG of one or more competition functions with their zeros marked.

    ``curves`` is a sequence of ``(label, TypeAssignment, FitnessModel)``.
    Zero markers are coloured by class: green stable, red unstable, orange
    touchpoint.
    """
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    xs = np.linspace(0.0, 1.0, samples)
    for label, ta, fm in curves:
        cf = competition_function(ta, fm)
        (line,) = ax.plot(xs, cf(xs), label=label)
        zeros = find_zeros_adaptive(cf)
        if isinstance(zeros, Degenerate):
            continue
        for z in zeros:
            ax.plot([z.location], [0.0], "o", color=_ZERO_COLOURS[z.kind.value], markersize=5, zorder=3)
    ax.axhline(0.0, color="0.5", linewidth=0.8)
    ax.set_xlim(0, 1)
    ax.set_xlabel("red share")
    ax.set_ylabel("drift")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


# ---------------------------------------------------------------------------
# verification suites


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: dict

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, **self.detail}


# parameter sets for the Lyapunov checks: (m, p, alpha1, alpha2)
LYAPUNOV_CASES = (
    (3, (0, Fraction(1, 2), Fraction(1, 2), 1), 0, 1),
    (3, (0, 0, Fraction(9, 10), 1), 0, 10),
    (2, (0, Fraction(7, 10), 1), 0, 1),
)


def _random_model(rng: np.random.Generator):
    m = int(rng.integers(1, 5))
    p = tuple(float(v) for v in rng.random(m + 1))
    kind = int(rng.integers(3))
    lo = -m + 0.05
    if kind == 0:
        fm = Plain(float(rng.uniform(lo, 5)))
    elif kind == 1:
        fm = Multiplicative(float(rng.uniform(0.2, 4)), float(rng.uniform(lo, 5)))
    else:
        a1, a2 = rng.uniform(lo, 5, 2)
        fm = Additive(float(a1), float(a2))
    return TypeAssignment(m, p), fm


def drift_suite(n_states: int = 1000, seed: int = 0, rel_tol: float = 1e-12) -> SuiteResult:
    """Exact one-step conditional drift against the competition-function drift.

    States are reached by simulating a random number of steps (0 to 300)
    under randomly drawn models, so every state is reachable.
    """
    rng = make_rng(seed)
    worst = 0.0
    failures = 0
    kinds = {"plain": 0, "multiplicative": 0, "additive": 0}
    for _ in range(n_states):
        ta, fm = _random_model(rng)
        state = new_simulation(SimConfig(ta, fm))
        steps = int(rng.integers(0, 301))
        if steps:
            state.advance(rng.random((steps, ta.m + 1)))
        cmp = exact_drift(state, exact=False)
        exp = np.atleast_1d(np.asarray(cmp.expected, float))
        th = np.atleast_1d(np.asarray(cmp.theory, float))
        err = float(np.max(np.abs(exp - th) / (1 + np.abs(th))))
        worst = max(worst, err)
        failures += err > rel_tol
        kinds[fm.kind] += 1
    return SuiteResult("drift", failures == 0, {"states": n_states, "failures": failures, "max_rel_error": worst, "models": kinds})


def state_space_suite(steps: int = 10_000, runs_per_case: int = 3, seed: int = 0) -> SuiteResult:
    """Run checked graph simulations and count invariant violations."""
    cases = [
        (TypeAssignment(m, p), Additive(a1, a2)) for m, p, a1, a2 in LYAPUNOV_CASES
    ] + [
        (TypeAssignment(2, (Fraction(1, 5), Fraction(1, 2), Fraction(9, 10))), Additive(Fraction(3, 2), Fraction(-1, 2))),
        (TypeAssignment(3, (0, 0, Fraction(9, 10), 1)), Multiplicative(Fraction(6, 5), 1)),
        (TypeAssignment.linear(2), Plain(-1)),
    ]
    violations = []
    for c, (ta, fm) in enumerate(cases):
        for r in range(runs_per_case):
            cfg = SimConfig(ta, fm, seed=derive_seed(seed, c * runs_per_case + r), steps=steps, record_every=max(1, steps // 200))
            try:
                run(cfg, check=True)
            except InvariantViolation as exc:
                violations.append(f"{fm.kind} case {c}: {exc}")
    return SuiteResult("state_space", not violations, {"runs": len(cases) * runs_per_case, "violations": violations})


def enumeration_suite(max_steps: int = 5) -> SuiteResult:
    """Graph-level and urn-level exact laws of ``(X_n, A_n)`` must coincide."""
    assignments = {1: TypeAssignment(1, (Fraction(1, 5), Fraction(4, 5))), 2: TypeAssignment(2, (0, Fraction(3, 10), 1))}
    worst = Fraction(0)
    compared = 0
    for m, ta in assignments.items():
        for phi in (1, Fraction(3, 2), 2):
            fm = Multiplicative(phi)
            g0 = InitialGraph.pair(m)
            for n in range(max_steps + 1):
                a = enumerate_exact(g0, ta, fm, n, "urn")
                b = enumerate_exact(g0, ta, fm, n, "graph")
                worst = max(worst, a.tv_distance(b), abs(a.total() - 1))
                compared += 1
    return SuiteResult("enumeration", worst == 0, {"comparisons": compared, "max_tv_distance": str(worst)})


def _case_label(m, p, a1, a2) -> str:
    return f"m={m} p=({', '.join(str(v) for v in p)}) alpha=({a1}, {a2})"


def _lyapunov_systems():
    for m, p, a1, a2 in LYAPUNOV_CASES:
        yield _case_label(m, p, a1, a2), TypeAssignment(m, p), Additive(a1, a2)


def lyapunov_identity_suite(n_points: int = 500, tol: float = 1e-6) -> SuiteResult:
    """Closed-form ``grad L . F`` against finite differences, plus the corrected bound."""
    rows = []
    ok = True
    for case, ta, fm in _lyapunov_systems():
        claimed = lyapunov_grid_check(ta, fm, n_points)
        corrected = lyapunov_grid_check(ta, fm, n_points, corrected=True)
        good = claimed.identity_error < tol and corrected.passed
        ok &= good
        rows.append({"case": case, "identity_error": claimed.identity_error, "corrected_violations": corrected.violations})
    return SuiteResult("lyapunov_identity", ok, {"cases": rows})


def lyapunov_bound_suite(n_points: int = 500, slack: float = 1e-8, flow_starts: int = 20) -> SuiteResult:
    """The decrease bound with ``S2 = sup g`` on a lattice in ``D``, and along the flow."""
    rows = []
    ok = True
    for case, ta, fm in _lyapunov_systems():
        grid = lyapunov_grid_check(ta, fm, n_points, slack)
        flow = lyapunov_flow_check(ta, fm, flow_starts)
        ok &= grid.passed and flow.passed
        rows.append({
            "case": case,
            "grid_points": grid.n_points,
            "grid_violations": grid.violations,
            "max_excess": grid.max_excess,
            "flow_monotone": flow.monotone,
            "flow_converged": flow.converged,
            "flow_max_increase_rate": flow.max_increase_rate,
        })
    return SuiteResult("lyapunov_bound", ok, {"cases": rows})


SUITES = {
    "drift": drift_suite,
    "state_space": state_space_suite,
    "enumeration": enumeration_suite,
    "lyapunov_identity": lyapunov_identity_suite,
    "lyapunov_bound": lyapunov_bound_suite,
}
