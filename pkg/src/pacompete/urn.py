"""Aggregate (urn) representation of the multiplicative model with alpha = 0.

With ``alpha = 0`` a pick is red with probability ``X / (X + phi Y)``, which
depends on the graph only through the red and blue total degrees.  The pair
``(X, Y)`` is then a two-colour urn with activities ``1`` and ``phi`` from
which ``m`` balls are drawn with replacement each step: ``K`` red draws add
``K`` red and ``m - K`` blue balls, and the new vertex adds ``m`` balls of its
own colour.

Small instances can be enumerated exactly, either on this urn or on the full
vertex-level graph, to check that the two descriptions agree in law.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .analysis import Additive, FitnessModel, Multiplicative, Plain, TypeAssignment
from .polynomial import is_exact
from .sim import RED, RNG_ALGORITHM, InitialGraph, SimConfig, Trajectory, make_rng


class StateSpaceTooLarge(RuntimeError):
    pass


@dataclass(frozen=True)
class UrnState:
    X: int
    Y: int
    n: int = 0
    phi: object = 1
    A: int = 0
    B: int = 0

    def __post_init__(self):
        if not (self.X > 0 and self.Y > 0):
            raise ValueError("both colours need positive mass")
        if not self.phi > 0:
            raise ValueError("phi must be positive")

    @classmethod
    def from_graph(cls, g0: InitialGraph, phi=1) -> "UrnState":
        X, Y, A, B = g0.aggregates()
        return cls(X, Y, 0, phi, A, B)

    @property
    def red_probability(self) -> float:
        return self.X / (self.X + float(self.phi) * self.Y)


def urn_supported(fm: FitnessModel) -> bool:
    if isinstance(fm, Plain):
        return fm.alpha == 0
    return isinstance(fm, Multiplicative) and fm.alpha == 0


def _phi(fm) -> object:
    return fm.phi if isinstance(fm, Multiplicative) else 1


def urn_step(state: UrnState, ta: TypeAssignment, rng: np.random.Generator) -> UrnState:
    """One draw-and-replace step.

    Consumes two uniforms, in the same order as :func:`run_urn`, so stepping
    by hand reproduces a run with the same seed.
    """
    m = ta.m
    u = rng.random(2)
    K = int(_kernels.binomial_inverse(u[0], m, state.red_probability))
    red = bool(u[1] < float(ta.p[K]))
    return UrnState(
        state.X + K + m * red,
        state.Y + (m - K) + m * (not red),
        state.n + 1,
        state.phi,
        state.A + red,
        state.B + (not red),
    )


_CHUNK = 1 << 16


def run_urn(cfg: SimConfig) -> Trajectory:
    """Urn-path counterpart of :func:`pacompete.sim.run` (same schedule and CSV schema)."""
    if not urn_supported(cfg.fm):
        raise ValueError("the urn path needs the multiplicative (or plain) model with alpha = 0")
    ta = cfg.ta
    phi = float(_phi(cfg.fm))
    pk = ta.p_float
    rng = make_rng(cfg.seed)
    agg = np.array(cfg.initial_graph.aggregates(), np.int64)
    X0, Y0 = int(agg[0]), int(agg[1])
    times = cfg.schedule()
    cols = np.empty((len(times), 4))
    buf = np.empty((min(_CHUNK, max(cfg.steps, 1)), 2))
    n_done = 0
    for i, t in enumerate(times):
        while n_done < t:
            k = min(t - n_done, buf.shape[0])
            chunk = buf[:k]
            rng.random(out=chunk)
            _kernels.advance_urn(agg, ta.m, pk, phi, chunk)
            n_done += k
        X, Y, A, B = (int(v) for v in agg)
        if X + Y != X0 + Y0 + 2 * ta.m * n_done:
            raise AssertionError("urn mass not conserved")
        x = X / (X + Y)
        cols[i] = (X / (X + phi * Y), x, 1.0 - x, A / (A + B))
    X, Y, A, B = (int(v) for v in agg)
    return Trajectory(
        cfg.fm.kind, np.array(times, np.int64), cols[:, 0].copy(), cols[:, 1].copy(),
        cols[:, 2].copy(), cols[:, 3].copy(),
        final={"n": n_done, "X": X, "Y": Y, "A": A, "B": B},
        meta={"rng": RNG_ALGORITHM, "seed": int(cfg.seed), "path": "urn"},
    )


# ---------------------------------------------------------------------------
# exact enumeration


@dataclass
class ExactDistribution:
    """Law of ``(X_n, A_n)`` as exact probabilities."""

    probs: dict
    n_steps: int

    def total(self):
        return sum(self.probs.values())

    def tv_distance(self, other: "ExactDistribution"):
        keys = set(self.probs) | set(other.probs)
        return sum(abs(self.probs.get(k, 0) - other.probs.get(k, 0)) for k in keys) / 2


def _q(v):
    return Fraction(v) if is_exact(v) else v


def _check_size(states: dict, limit: int):
    if len(states) > limit:
        raise StateSpaceTooLarge(f"{len(states)} states exceed the limit of {limit}")


def _enumerate_urn(g0, ta, fm, n_steps, limit):
    if not urn_supported(fm):
        raise ValueError("urn enumeration needs alpha = 0")
    m, phi = ta.m, _q(_phi(fm))
    p = [_q(v) for v in ta.p]
    states = {g0.aggregates(): Fraction(1)}
    for _ in range(n_steps):
        nxt = defaultdict(Fraction)
        for (X, Y, A, B), pr in states.items():
            r = X / (X + phi * Y)
            for K in range(m + 1):
                pK = pr * math.comb(m, K) * r**K * (1 - r) ** (m - K)
                if pK == 0:
                    continue
                if p[K] != 0:
                    nxt[(X + K + m, Y + m - K, A + 1, B)] += pK * p[K]
                if p[K] != 1:
                    nxt[(X + K, Y + 2 * m - K, A, B + 1)] += pK * (1 - p[K])
        _check_size(nxt, limit)
        states = nxt
    out = defaultdict(Fraction)
    for (X, _, A, _), pr in states.items():
        out[(X, A)] += pr
    return dict(out)


def _vertex_weight(deg, typ, fm):
    if isinstance(fm, Additive):
        return deg + _q(fm.alpha1 if typ == RED else fm.alpha2)
    base = deg + _q(fm.alpha)
    return base * _q(_phi(fm)) if typ != RED else base


def _enumerate_graph(g0, ta, fm, n_steps, limit):
    m = ta.m
    p = [_q(v) for v in ta.p]
    # vertices with equal (degree, colour) are exchangeable, so sorted tuples suffice
    start = tuple(sorted(zip(g0.degrees, g0.types)))
    states = {start: Fraction(1)}
    for _ in range(n_steps):
        nxt = defaultdict(Fraction)
        for verts, pr in states.items():
            w = [_vertex_weight(d, t, fm) for d, t in verts]
            W = sum(w)
            for picks in itertools.product(range(len(verts)), repeat=m):
                pp = pr
                for i in picks:
                    pp = pp * w[i] / W
                K = sum(1 for i in picks if verts[i][1] == RED)
                deg = [d for d, _ in verts]
                for i in picks:
                    deg[i] += 1
                base = list(zip(deg, (t for _, t in verts)))
                for colour, pc in ((RED, p[K]), (3 - RED, 1 - p[K])):
                    if pc == 0:
                        continue
                    nxt[tuple(sorted(base + [(m, colour)]))] += pp * pc
        _check_size(nxt, limit)
        states = nxt
    out = defaultdict(Fraction)
    for verts, pr in states.items():
        X = sum(d for d, t in verts if t == RED)
        A = sum(1 for _, t in verts if t == RED)
        out[(X, A)] += pr
    return dict(out)


def enumerate_exact(
    start: InitialGraph,
    ta: TypeAssignment,
    fm: FitnessModel,
    n_steps: int,
    path: str = "urn",
    max_states: int = 100_000,
) -> ExactDistribution:
    """Exact law of ``(X_n, A_n)`` after ``n_steps`` steps from ``start``.

    ``path="urn"`` runs the aggregate chain; ``path="graph"`` tracks every
    vertex degree and sums over all ordered neighbour tuples.  Probabilities
    are Fractions when the parameters are rational.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    if path == "urn":
        probs = _enumerate_urn(start, ta, fm, n_steps, max_states)
    elif path == "graph":
        probs = _enumerate_graph(start, ta, fm, n_steps, max_states)
    else:
        raise ValueError(f"unknown path {path!r}")
    return ExactDistribution(probs, n_steps)
