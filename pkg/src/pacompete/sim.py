"""Vertex-level simulation of the two-type attachment process.

Only degrees and colours are retained.  Neighbour selection uses a Fenwick
(binary indexed) tree over the per-vertex attachment weights, so a step costs
``O(m log n)`` for every fitness model, including ``alpha != 0`` and
``phi != 1`` where the edge-endpoint list trick does not apply.

The scaled masses follow the conventions

* plain / multiplicative: ``x = (X + alpha A) / ((2m + alpha) n + c)`` and
  ``q = x / (x + phi (1 - x))``, the chance that one pick is red;
* additive: ``x = (X + alpha1 A) / t``, ``y = (Y + alpha2 B) / t`` and
  ``q = x / (x + y)``, with ``t = n + |V(G_0)|``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .analysis import (
    Additive,
    FitnessModel,
    Multiplicative,
    TypeAssignment,
    additive_field,
    eval_P,
    eval_PM,
    validate_model,
)
from .polynomial import is_exact

RNG_ALGORITHM = "numpy.random.PCG64"
RED, BLUE = 1, 2
CSV_HEADER = ("n", "q", "x", "y", "red_fraction")


class InvalidInitialGraph(ValueError):
    pass


class InvariantViolation(AssertionError):
    pass


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(int(seed)))


def derive_seed(master_seed: int, index: int) -> int:
    """64-bit seed of run ``index`` in an ensemble seeded with ``master_seed``."""
    words = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),)).generate_state(2, np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


@dataclass(frozen=True)
class InitialGraph:
    """Degrees and colours (1 red, 2 blue) of the seed graph ``G_0``."""

    degrees: tuple
    types: tuple

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))
        object.__setattr__(self, "types", tuple(int(t) for t in self.types))
        if len(self.degrees) != len(self.types):
            raise InvalidInitialGraph("degrees and types differ in length")

    @classmethod
    def pair(cls, m: int, edges: int | None = None) -> "InitialGraph":
        """One red and one blue vertex joined by ``edges`` parallel edges (default ``2m``)."""
        edges = 2 * m if edges is None else edges
        return cls((edges, edges), (RED, BLUE))

    @classmethod
    def from_edges(cls, types: Sequence[int], edges: Sequence[tuple[int, int]]) -> "InitialGraph":
        deg = [0] * len(types)
        for u, v in edges:
            if u == v:
                raise InvalidInitialGraph("self-loops are not allowed")
            deg[u] += 1
            deg[v] += 1
        return cls(tuple(deg), tuple(types))

    @property
    def n_vertices(self) -> int:
        return len(self.degrees)

    def aggregates(self) -> tuple[int, int, int, int]:
        X = sum(d for d, t in zip(self.degrees, self.types) if t == RED)
        Y = sum(d for d, t in zip(self.degrees, self.types) if t == BLUE)
        A = sum(1 for t in self.types if t == RED)
        return X, Y, A, len(self.types) - A

    def balanced(self, m: int) -> bool:
        """Total degree equals ``2m`` per vertex, as if grown by the process itself."""
        return sum(self.degrees) == 2 * m * self.n_vertices

    def validate(self, m: int, fm: FitnessModel) -> None:
        if set(self.types) - {RED, BLUE}:
            raise InvalidInitialGraph("types must be 1 (red) or 2 (blue)")
        if RED not in self.types or BLUE not in self.types:
            raise InvalidInitialGraph("G_0 needs at least one vertex of each colour")
        if min(self.degrees) < m:
            raise InvalidInitialGraph(f"every initial degree must be >= m={m}")
        shift, mult = weight_rule(fm)
        for d, t in zip(self.degrees, self.types):
            if not (d + shift[t]) * mult[t] > 0:
                raise InvalidInitialGraph("non-positive attachment weight")


def weight_rule(fm: FitnessModel):
    """Per-colour ``(shift, mult)`` with weight ``(deg + shift[T]) * mult[T]``."""
    if isinstance(fm, Additive):
        shift = np.array([0.0, float(fm.alpha1), float(fm.alpha2)])
        mult = np.ones(3)
    else:
        a = float(fm.alpha)
        shift = np.array([0.0, a, a])
        phi = float(fm.phi) if isinstance(fm, Multiplicative) else 1.0
        mult = np.array([0.0, 1.0, phi])
    return shift, mult


@dataclass(frozen=True)
class SimConfig:
    ta: TypeAssignment
    fm: FitnessModel
    initial_graph: InitialGraph | None = None
    seed: int = 0
    steps: int = 0
    record_every: int | None = None
    record_at: tuple = ()

    def __post_init__(self):
        validate_model(self.fm, self.ta.m)
        if self.initial_graph is None:
            object.__setattr__(self, "initial_graph", InitialGraph.pair(self.ta.m))
        self.initial_graph.validate(self.ta.m, self.fm)
        if self.steps < 0:
            raise ValueError("steps must be non-negative")

    def schedule(self) -> list[int]:
        every = self.record_every or max(1, self.steps // 100)
        times = set(range(0, self.steps + 1, every)) | {self.steps}
        times |= {int(t) for t in self.record_at if 0 <= t <= self.steps}
        return sorted(times)


class WeightIndex:
    """Fenwick tree over vertex weights supporting ``O(log n)`` sample and update."""

    def __init__(self, weights: np.ndarray, capacity: int | None = None):
        capacity = max(capacity or 0, len(weights), 2)
        cap = 1 << (capacity - 1).bit_length()
        self.tree = np.zeros(cap + 1)
        _kernels.fw_build(np.asarray(weights, float), self.tree)

    @property
    def capacity(self) -> int:
        return self.tree.shape[0] - 1

    @property
    def total(self) -> float:
        return float(self.tree[-1])

    def add(self, i: int, delta: float) -> None:
        _kernels.fw_add(self.tree, i, delta)

    def sample(self, u: float) -> int:
        """Index selected by a uniform ``u`` in ``[0, 1)``."""
        return int(_kernels.fw_find(self.tree, u * self.total))

    def prefix(self, i: int) -> float:
        s, j = 0.0, i
        while j > 0:
            s += self.tree[j]
            j -= j & -j
        return s

    def weight(self, i: int) -> float:
        return self.prefix(i + 1) - self.prefix(i)

    def rebuild(self, weights: np.ndarray) -> None:
        _kernels.fw_build(np.asarray(weights, float), self.tree)


class SimState:
    """Mutable state of one run: per-vertex degree/colour plus aggregates."""

    def __init__(self, cfg: SimConfig, capacity: int | None = None):
        ta, fm, g0 = cfg.ta, cfg.fm, cfg.initial_graph
        self.ta, self.fm, self.m = ta, fm, ta.m
        self.initial_graph = g0
        self.pk = ta.p_float
        self.shift, self.mult = weight_rule(fm)
        n0 = g0.n_vertices
        capacity = max(capacity or 0, n0 + 1)
        self.deg = np.zeros(capacity, np.int64)
        self.typ = np.zeros(capacity, np.int8)
        self.deg[:n0] = g0.degrees
        self.typ[:n0] = g0.types
        self.nv = n0
        self.n = 0
        self.agg = np.array(g0.aggregates(), np.int64)
        self.initial = tuple(int(v) for v in self.agg)
        self.sampler = WeightIndex(self._weights(), capacity)
        self._since_rebuild = 0

    def _weights(self) -> np.ndarray:
        return _kernels.vertex_weights(self.deg, self.typ, self.nv, self.shift, self.mult)

    X = property(lambda self: int(self.agg[0]))
    Y = property(lambda self: int(self.agg[1]))
    A = property(lambda self: int(self.agg[2]))
    B = property(lambda self: int(self.agg[3]))

    @property
    def t0(self) -> int:
        return self.initial_graph.n_vertices

    @property
    def c(self):
        """Weighted initial mass: scalar for plain/multiplicative, (red, blue) for additive."""
        X0, Y0, A0, B0 = self.initial
        if isinstance(self.fm, Additive):
            return (X0 + self.fm.alpha1 * A0, Y0 + self.fm.alpha2 * B0)
        return X0 + Y0 + self.fm.alpha * (A0 + B0)

    def ensure_capacity(self, extra: int) -> None:
        need = self.nv + extra
        if need <= self.deg.shape[0]:
            return
        size = max(need, 2 * self.deg.shape[0])
        self.deg = np.concatenate([self.deg, np.zeros(size - self.deg.shape[0], np.int64)])
        self.typ = np.concatenate([self.typ, np.zeros(size - self.typ.shape[0], np.int8)])
        self.sampler = WeightIndex(self._weights(), size)

    def advance(self, uniforms: np.ndarray) -> None:
        uniforms = np.ascontiguousarray(uniforms, dtype=float).reshape(-1, self.m + 1)
        steps = uniforms.shape[0]
        if steps == 0:
            return
        self.ensure_capacity(steps)
        self.nv, self._since_rebuild = _kernels.advance_graph(
            self.deg, self.typ, self.sampler.tree, self.agg, self.nv, self.m,
            self.pk, self.shift, self.mult, uniforms, self._since_rebuild,
        )
        self.n += steps

    def masses(self):
        """Exact weighted red and blue masses (Fractions when parameters are rational)."""
        X, Y, A, B = (int(v) for v in self.agg)
        if isinstance(self.fm, Additive):
            return X + self.fm.alpha1 * A, Y + self.fm.alpha2 * B
        return X + self.fm.alpha * A, Y + self.fm.alpha * B

    def statistics(self) -> tuple[float, float, float, float]:
        """``(q, x, y, red_fraction)`` at the current step."""
        wr, wb = (float(v) for v in self.masses())
        red_fraction = self.A / (self.A + self.B)
        if isinstance(self.fm, Additive):
            t = self.n + self.t0
            x, y = wr / t, wb / t
            return x / (x + y), x, y, red_fraction
        phi = float(self.fm.phi) if isinstance(self.fm, Multiplicative) else 1.0
        x = wr / (wr + wb)
        return wr / (wr + phi * wb), x, 1.0 - x, red_fraction

    def vertex_weights(self) -> np.ndarray:
        return self._weights()


def new_simulation(cfg: SimConfig, capacity: int | None = None) -> SimState:
    return SimState(cfg, capacity if capacity is not None else cfg.initial_graph.n_vertices + cfg.steps + 1)


@dataclass
class StepOutcome:
    neighbours: tuple
    K: int
    new_type: int


def step(state: SimState, rng: np.random.Generator) -> StepOutcome:
    """Advance one vertex; consumes ``m + 1`` uniforms from ``rng``."""
    state.ensure_capacity(1)
    u = rng.random(state.m + 1)
    total = state.sampler.total
    picks = []
    for j in range(state.m):
        v = int(_kernels.fw_find(state.sampler.tree, u[j] * total))
        picks.append(min(v, state.nv - 1))
    K = sum(1 for v in picks if state.typ[v] == RED)
    state.advance(u)
    new_type = int(state.typ[state.nv - 1])
    if min(state.sampler.weight(v) for v in picks) <= 0:
        raise InvariantViolation("non-positive attachment weight after update")
    return StepOutcome(tuple(picks), K, new_type)


# ---------------------------------------------------------------------------
# drift oracle


@dataclass(frozen=True)
class DriftComparison:
    """Exact conditional mean increment next to the mean-field prediction."""

    expected: object
    theory: object

    def discrepancy(self) -> float:
        e = np.atleast_1d(np.asarray(self.expected, dtype=float))
        t = np.atleast_1d(np.asarray(self.theory, dtype=float))
        return float(np.max(np.abs(e - t) / (1.0 + np.abs(t))))


def _params_exact(ta, fm) -> bool:
    vals = [getattr(fm, k) for k in ("alpha", "phi", "alpha1", "alpha2") if hasattr(fm, k)]
    return ta.exact and all(is_exact(v) for v in vals)


def _binom_law(m: int, r):
    return [math.comb(m, k) * r**k * (1 - r) ** (m - k) for k in range(m + 1)]


def exact_drift(state: SimState, exact: bool | None = None) -> DriftComparison:
    """Conditional mean of the next increment of the tracked statistic.

    ``expected`` enumerates the ``m + 1`` outcomes of the red-pick count and
    both colours of the new vertex; ``theory`` is the competition-function
    drift.  With rational parameters and ``exact`` left at ``None`` both are
    Fractions.
    """
    ta, fm, m, n = state.ta, state.fm, state.m, state.n
    if exact is None:
        exact = _params_exact(ta, fm)
    conv = (lambda v: Fraction(v)) if exact else float
    p = [conv(v) for v in ta.p]
    wr, wb = (conv(v) for v in state.masses())

    if isinstance(fm, Additive):
        a1, a2 = conv(fm.alpha1), conv(fm.alpha2)
        t = state.n + state.t0
        x, y = wr / t, wb / t
        q = wr / (wr + wb)
        ex = ey = 0
        for K, prob in enumerate(_binom_law(m, q)):
            for red, pc in ((True, p[K]), (False, 1 - p[K])):
                x1 = (wr + K + (m + a1) * red) / (t + 1)
                y1 = (wb + (m - K) + (m + a2) * (not red)) / (t + 1)
                ex += prob * pc * x1
                ey += prob * pc * y1
        F1, F2 = additive_field(ta, fm, x, y)
        return DriftComparison((ex - x, ey - y), (F1 / (t + 1), F2 / (t + 1)))

    alpha = conv(fm.alpha)
    phi = conv(fm.phi) if isinstance(fm, Multiplicative) else conv(1)
    c = conv(state.c)
    den0 = (2 * m + alpha) * n + c
    den1 = den0 + 2 * m + alpha
    x = wr / den0
    r = wr / (wr + phi * wb)
    expected = 0
    for K, prob in enumerate(_binom_law(m, r)):
        after_red = (wr + K + m + alpha) / den1
        after_blue = (wr + K) / den1
        expected += prob * (p[K] * after_red + (1 - p[K]) * after_blue)
    expected -= x
    if isinstance(fm, Multiplicative):
        theory = eval_PM(ta, fm, x) / (n + 1 + c / (2 * m + alpha))
    else:
        theory = 2 * (m + alpha) * eval_P(ta, x) / den1
    return DriftComparison(expected, theory)


# ---------------------------------------------------------------------------
# invariants


def additive_region_violations(x: float, y: float, ta: TypeAssignment, fm: Additive, refined: bool, tol: float = 1e-9) -> list[str]:
    """Violated state-space constraints for scaled masses ``(x, y)``.

    ``refined`` adds the tighter region valid when ``p0 = 0`` and ``p_m = 1``.
    Coordinates are relabelled first when red is the fitter colour.
    """
    m = ta.m
    a1, a2 = float(fm.alpha1), float(fm.alpha2)
    if a1 > a2:
        x, y, a1, a2 = y, x, a2, a1
    out = []
    s = x + y
    if s < 2 * m + a1 - tol or s > 2 * m + a2 + tol:
        out.append(f"x+y={s} outside [{2 * m + a1}, {2 * m + a2}]")
    if y < 2 * m + a2 - x * (m + a2) / (m + a1) - tol:
        out.append("lower bound on y violated")
    if x > 2 * m + a1 - y * (m + a1) / (m + a2) + tol:
        out.append("upper bound on x violated")
    if refined:
        if y < 2 * m + a2 - x * (m + 1 + a2) / (m + 1 + a1) - tol:
            out.append("refined lower bound on y violated")
        if x > 2 * m + a1 - y * (m + 1 + a1) / (m + 1 + a2) + tol:
            out.append("refined upper bound on x violated")
    return out


def _refined_applicable(state: SimState) -> bool:
    ta = state.ta
    X0, Y0, A0, B0 = state.initial
    return ta.p[0] == 0 and ta.p[-1] == 1 and X0 >= (ta.m + 1) * A0 and Y0 >= (ta.m + 1) * B0


def check_state(state: SimState, tol: float = 1e-9) -> list[str]:
    """List every violated invariant of the current state (empty when healthy)."""
    m, n = state.m, state.n
    X, Y, A, B = (int(v) for v in state.agg)
    X0, Y0, A0, B0 = state.initial
    out = []
    if X + Y != 2 * m * n + X0 + Y0:
        out.append("total degree not conserved")
    if A + B != n + A0 + B0:
        out.append("vertex count mismatch")
    if m * A > X or m * B > Y:
        out.append("vertex with degree below m")
    refined = _refined_applicable(state)
    if refined and ((m + 1) * A > X or (m + 1) * B > Y):
        out.append("refined degree bound violated")
    wr, wb = state.masses()
    if not isinstance(state.fm, Additive):
        mass = wr + wb
        target = (2 * m + state.fm.alpha) * n + state.c
        if is_exact(mass) and is_exact(target):
            if mass != target:
                out.append("weighted mass not conserved")
        elif abs(float(mass) - float(target)) > 1e-12 * float(target):
            out.append("weighted mass not conserved")
    elif state.initial_graph.balanced(m):
        t = n + state.t0
        out += additive_region_violations(float(wr) / t, float(wb) / t, state.ta, state.fm, refined, tol)
    exact_total = float(wr) + float(wb) * (float(state.fm.phi) if isinstance(state.fm, Multiplicative) else 1.0)
    if abs(state.sampler.total - exact_total) > 1e-9 * exact_total:
        out.append("sampler total drifted")
    return out


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    """Recorded ``(n, q, x, y, red_fraction)`` rows of one run."""

    model: str
    n: np.ndarray
    q: np.ndarray
    x: np.ndarray
    y: np.ndarray
    red_fraction: np.ndarray
    final: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def red_statistic(self) -> np.ndarray:
        """Red share the limit theorems govern: ``x`` (plain/multiplicative) or ``q`` (additive)."""
        return self.q if self.model == "additive" else self.x

    def index_of(self, step: int) -> int:
        i = int(np.searchsorted(self.n, step))
        if i >= len(self.n) or self.n[i] != step:
            raise KeyError(step)
        return i

    def rows(self):
        for i in range(len(self.n)):
            yield (int(self.n[i]), float(self.q[i]), float(self.x[i]), float(self.y[i]), float(self.red_fraction[i]))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.rows():
            writer.writerow([row[0]] + [repr(v) for v in row[1:]])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


class _Recorder:
    def __init__(self, size: int):
        self.cols = {k: np.empty(size) for k in ("q", "x", "y", "red_fraction")}
        self.n = np.empty(size, np.int64)
        self.i = 0

    def add(self, n, q, x, y, rf):
        i = self.i
        self.n[i] = n
        for key, val in zip(("q", "x", "y", "red_fraction"), (q, x, y, rf)):
            self.cols[key][i] = val
        self.i += 1


def run(cfg: SimConfig, check: bool = True) -> Trajectory:
    """Simulate ``cfg.steps`` steps, recording on ``cfg.schedule()``.

    With ``check`` every recorded state is tested by :func:`check_state` and
    any violation raises :class:`InvariantViolation`.
    """
    rng = make_rng(cfg.seed)
    state = new_simulation(cfg)
    times = cfg.schedule()
    rec = _Recorder(len(times))
    m1 = cfg.ta.m + 1
    for t in times:
        if t > state.n:
            state.advance(rng.random((t - state.n, m1)))
        if check:
            problems = check_state(state)
            if problems:
                raise InvariantViolation(f"step {state.n}: " + "; ".join(problems))
        rec.add(state.n, *state.statistics())
    return Trajectory(
        cfg.fm.kind, rec.n, **rec.cols,
        final={"n": state.n, "X": state.X, "Y": state.Y, "A": state.A, "B": state.B},
        meta={"rng": RNG_ALGORITHM, "seed": int(cfg.seed), "path": "graph"},
    )
