from fractions import Fraction

import numpy as np
import pytest
from scipy import optimize

from pacompete.analysis import (
    Additive,
    Multiplicative,
    Plain,
    TypeAssignment,
    additive_field,
    eval_P,
    eval_PA,
)
from pacompete.sim import (
    BLUE,
    CSV_HEADER,
    RED,
    InitialGraph,
    InvalidInitialGraph,
    SimConfig,
    WeightIndex,
    additive_region_violations,
    check_state,
    derive_seed,
    exact_drift,
    make_rng,
    new_simulation,
    run,
    step,
)

half = Fraction(1, 2)
MAJORITY = TypeAssignment(3, (0, 0, Fraction(9, 10), 1))


# --- initial graph and state ------------------------------------------------------


def test_pair_with_m_edges():
    m = 3
    state = new_simulation(SimConfig(MAJORITY, Plain(0), InitialGraph.pair(m, edges=m)))
    assert (state.X, state.Y, state.A, state.B) == (m, m, 1, 1)
    assert state.c == 2 * m


def test_default_pair_is_balanced():
    g = InitialGraph.pair(3)
    assert g.degrees == (6, 6) and g.balanced(3)
    assert not InitialGraph.pair(3, edges=3).balanced(3)


def test_weights_with_alpha_near_minus_m():
    state = new_simulation(SimConfig(MAJORITY, Plain(-2), InitialGraph.pair(3, edges=3)))
    np.testing.assert_array_equal(state.vertex_weights(), [1.0, 1.0])


def test_additive_statistics_defined_at_start():
    state = new_simulation(SimConfig(TypeAssignment.linear(2), Additive(0, 1)))
    q, x, y, rf = state.statistics()
    # red mass 4, blue mass 4 + 1, normaliser |V0| = 2
    assert (x, y) == (2.0, 2.5) and q == pytest.approx(4 / 9)


@pytest.mark.parametrize(
    "graph",
    [
        InitialGraph((3, 3), (RED, RED)),
        InitialGraph((1, 1), (RED, BLUE)),
        InitialGraph((3, 3), (RED, 3)),
    ],
)
def test_invalid_initial_graphs(graph):
    with pytest.raises(InvalidInitialGraph):
        SimConfig(MAJORITY, Plain(0), graph)


def test_alpha_at_minus_m_rejected():
    with pytest.raises(ValueError):
        SimConfig(TypeAssignment.linear(2), Additive(-2, 0))


def test_from_edges():
    g = InitialGraph.from_edges((RED, BLUE, BLUE), [(0, 1), (0, 2), (1, 2), (0, 1)])
    assert g.degrees == (3, 3, 2)
    assert g.aggregates() == (3, 5, 1, 2)
    with pytest.raises(InvalidInitialGraph):
        InitialGraph.from_edges((RED, BLUE), [(0, 0)])


# --- sampler --------------------------------------------------------------------------


def test_sampler_frequencies_match_weights():
    ta = TypeAssignment(2, (0, Fraction(3, 10), 1))
    cfg = SimConfig(ta, Multiplicative(Fraction(3, 2), 1), seed=11, steps=98)
    state = new_simulation(cfg)
    state.advance(make_rng(11).random((98, 3)))
    assert state.nv == 100
    w = state.vertex_weights()
    probs = w / w.sum()
    draws = 10**6
    u = make_rng(12).random(draws)
    counts = np.bincount([state.sampler.sample(v) for v in u], minlength=100)
    se = np.sqrt(draws * probs * (1 - probs))
    assert np.all(np.abs(counts - draws * probs) <= 4 * se)


def test_weight_index_total_after_updates():
    rng = np.random.default_rng(3)
    w = rng.random(500) + 0.1
    idx = WeightIndex(w, 1024)
    for _ in range(20000):
        i = int(rng.integers(500))
        d = float(rng.random())
        idx.add(i, d)
        w[i] += d
    assert abs(idx.total - w.sum()) <= 1e-9 * w.sum()
    assert idx.weight(17) == pytest.approx(w[17])
    assert idx.prefix(10) == pytest.approx(w[:10].sum())
    idx.rebuild(w)
    assert idx.total == pytest.approx(w.sum(), rel=1e-15)


# --- step -----------------------------------------------------------------------------------


def test_step_outcome_shape():
    state = new_simulation(SimConfig(MAJORITY, Multiplicative(1.2), steps=10))
    rng = make_rng(0)
    for _ in range(50):
        out = step(state, rng)
        assert len(out.neighbours) == 3 and 0 <= out.K <= 3
        assert out.new_type in (RED, BLUE)
    assert state.n == 50 and state.nv == 52


def test_step_matches_run():
    cfg = SimConfig(MAJORITY, Additive(0, 2), seed=9, steps=300, record_every=300)
    traj = run(cfg)
    state = new_simulation(SimConfig(MAJORITY, Additive(0, 2)), capacity=4)
    rng = make_rng(9)
    for _ in range(300):
        step(state, rng)
    assert traj.final == {"n": 300, "X": state.X, "Y": state.Y, "A": state.A, "B": state.B}


def test_m1_copies_neighbour_colour():
    ta = TypeAssignment(1, (0, 1))
    state = new_simulation(SimConfig(ta, Plain(0)))
    rng = make_rng(4)
    for _ in range(200):
        out = step(state, rng)
        assert out.new_type == int(state.typ[out.neighbours[0]])


def test_red_saturated_state_stays_red():
    # blue is (almost) never picked, so K = m and p_m = 1 forces red
    ta = TypeAssignment(2, (0, 0, 1))
    state = new_simulation(SimConfig(ta, Multiplicative(1e-12)))
    rng = make_rng(1)
    assert all(step(state, rng).new_type == RED for _ in range(1000))


# --- drift oracle ------------------------------------------------------------------------------


@pytest.mark.parametrize("alpha", [-1, 0, 3])
def test_linear_plain_drift_is_zero(alpha):
    cfg = SimConfig(TypeAssignment.linear(3), Plain(alpha), seed=alpha + 5)
    state = new_simulation(cfg, capacity=200)
    rng = make_rng(alpha + 5)
    for _ in range(5):
        state.advance(rng.random((30, 4)))
        cmp = exact_drift(state)
        assert cmp.expected == 0 and cmp.theory == 0
        assert isinstance(cmp.expected, Fraction)


def test_multiplicative_drift_identity_exact():
    ta = TypeAssignment(3, (0, half, half, 1))
    state = new_simulation(SimConfig(ta, Multiplicative(Fraction(7, 6), Fraction(1, 3))), capacity=100)
    state.advance(make_rng(2).random((40, 4)))
    cmp = exact_drift(state)
    assert cmp.expected == cmp.theory


def test_additive_drift_identity_exact():
    state = new_simulation(SimConfig(MAJORITY, Additive(Fraction(1, 2), 2)), capacity=100)
    state.advance(make_rng(3).random((40, 4)))
    cmp = exact_drift(state)
    assert cmp.expected == cmp.theory


def test_plain_drift_matches_formula():
    ta = TypeAssignment(2, (0, Fraction(7, 10), 1))
    state = new_simulation(SimConfig(ta, Plain(Fraction(1, 2))), capacity=100)
    state.advance(make_rng(8).random((25, 3)))
    cmp = exact_drift(state)
    wr, wb = state.masses()
    x = wr / (wr + wb)
    den1 = (4 + half) * (state.n + 1) + state.c
    assert cmp.theory == 2 * (2 + half) * eval_P(ta, x) / den1
    assert cmp.expected == cmp.theory


def test_additive_field_vanishes_at_stationary_point():
    ta, fm = TypeAssignment(2, (0, 1, 1)), Additive(0, 4)
    m, a1, a2 = 2, 0.0, 4.0
    q = optimize.brentq(lambda z: float(eval_PA(ta, fm, z)), 0.2, 0.8, xtol=1e-15)
    P = float(eval_P(ta, q))
    x = (2 * m + a1) * q + 2 * (m + a1) * P
    y = (2 * m + a2) * (1 - q) - 2 * (m + a2) * P
    F1, F2 = additive_field(ta, fm, x, y)
    assert abs(F1) < 1e-9 and abs(F2) < 1e-9


def test_random_states_drift_identity():
    rng = make_rng(99)
    for _ in range(100):
        m = int(rng.integers(1, 5))
        ta = TypeAssignment(m, rng.random(m + 1))
        fm = [Plain(float(rng.uniform(-m + 0.1, 3))), Multiplicative(float(rng.uniform(0.3, 3)), float(rng.uniform(-m + 0.1, 3))),
              Additive(float(rng.uniform(-m + 0.1, 3)), float(rng.uniform(-m + 0.1, 3)))][int(rng.integers(3))]
        state = new_simulation(SimConfig(ta, fm), capacity=300)
        state.advance(rng.random((int(rng.integers(0, 200)), m + 1)))
        assert exact_drift(state, exact=False).discrepancy() <= 1e-12


# --- invariants -------------------------------------------------------------------------------------


def test_check_state_detects_tampering():
    state = new_simulation(SimConfig(MAJORITY, Multiplicative(1.2)), capacity=50)
    state.advance(make_rng(0).random((20, 4)))
    assert check_state(state) == []
    state.agg[0] += 1
    assert any("conserved" in v for v in check_state(state))


def test_region_check_flags_outside_points():
    ta, fm = MAJORITY, Additive(0, 1)
    assert additive_region_violations(3.0, 3.5, ta, fm, refined=False) == []
    assert additive_region_violations(1.0, 1.0, ta, fm, refined=False)
    # swapped orientation gives the mirrored verdict
    assert additive_region_violations(3.5, 3.0, ta, Additive(1, 0), refined=False) == []


@pytest.mark.parametrize(
    "ta, fm",
    [
        (MAJORITY, Additive(0, 1)),
        (TypeAssignment(2, (Fraction(1, 5), half, Fraction(9, 10))), Additive(Fraction(3, 2), Fraction(-1, 2))),
        (TypeAssignment(3, (0, half, half, 1)), Additive(-2, 5)),
    ],
)
def test_additive_run_stays_in_region(ta, fm):
    traj = run(SimConfig(ta, fm, seed=1, steps=10_000, record_every=50))
    refined = ta.p[0] == 0 and ta.p[-1] == 1
    for x, y in zip(traj.x, traj.y):
        assert additive_region_violations(x, y, ta, fm, refined) == []


def test_conservation_over_run():
    for fm in (Plain(Fraction(-3, 2)), Multiplicative(Fraction(3, 2), 2)):
        cfg = SimConfig(MAJORITY, fm, seed=2, steps=5000)
        state = new_simulation(cfg)
        state.advance(make_rng(2).random((5000, 4)))
        X0, Y0, _, _ = state.initial
        assert state.X + state.Y - 2 * 3 * state.n == X0 + Y0
        wr, wb = state.masses()
        assert wr + wb == (6 + fm.alpha) * state.n + state.c
        assert 3 * state.A <= state.X and 4 * state.A <= state.X


# --- run ----------------------------------------------------------------------------------------------


def test_steps_zero_records_initial_only():
    traj = run(SimConfig(MAJORITY, Plain(0), steps=0))
    assert list(traj.n) == [0] and traj.x[0] == 0.5


def test_run_is_deterministic(tmp_path):
    cfg = SimConfig(MAJORITY, Multiplicative(1.1), seed=123, steps=3000, record_every=100)
    a, b = run(cfg).to_csv(), run(cfg).to_csv()
    assert a == b
    assert a.splitlines()[0] == ",".join(CSV_HEADER)
    c = run(SimConfig(MAJORITY, Multiplicative(1.1), seed=124, steps=3000, record_every=100)).to_csv()
    assert a != c
    path = tmp_path / "t.csv"
    run(cfg).to_csv(path)
    assert path.read_text() == a


def test_trajectory_invariants():
    traj = run(SimConfig(MAJORITY, Additive(0, 1), seed=5, steps=2000, record_every=7, record_at=(1999,)))
    assert np.all(np.diff(traj.n) > 0)
    assert np.all((traj.q >= 0) & (traj.q <= 1))
    assert traj.index_of(1999) > 0
    with pytest.raises(KeyError):
        traj.index_of(1998)
    assert traj.meta["rng"] == "numpy.random.PCG64" and traj.meta["path"] == "graph"


def test_derive_seed():
    assert derive_seed(1, 0) == derive_seed(1, 0)
    assert len({derive_seed(1, i) for i in range(1000)}) == 1000
    assert derive_seed(1, 0) != derive_seed(2, 0)
