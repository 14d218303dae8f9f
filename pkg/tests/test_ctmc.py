import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import helpers
from floworder.ctmc import (
    EventLog,
    ReducibleChainError,
    build_generator,
    distribution_csv,
    distribution_vector,
    event_log_csv,
    simulate_path,
    stationary_distribution,
    throughput,
    transient_distribution,
    transient_mean_flow,
)
from floworder.model import ModelError, parse_model
from floworder.tandem import TandemParams, build_balanced_tandem, build_original_tandem


# ------------------------------------------------------------ generator


def test_generator_two_state_entries():
    gen = build_generator(helpers.two_state_chain())
    assert len(gen.entries) == 2
    moves = {(gen.states[i], gen.states[j]): r for i, j, r, _ in gen.entries}
    assert moves[((0,), (1,))] == 1.0
    assert moves[((1,), (0,))] == 1.0
    assert gen.unif_rate == 1.0


def test_generator_blocked_transfer_at_full_downstream():
    spec = build_original_tandem(TandemParams.linear(1, 1, 1.0))
    gen = build_generator(spec)
    src = spec.index_of((1, 1))
    out = [(e[3], e[2]) for e in gen.entries if e[0] == src]
    # transfer 1->2 is shut off when the second buffer is full
    assert out == [((2, 0), 1.0)]


def test_generator_all_zero_rates():
    doc = {"n": 1, "space": {"box": [1]}, "rates": {"0->1": "0", "1->0": "0"}}
    gen = build_generator(parse_model(doc))
    assert gen.matrix.nnz == 0
    assert gen.unif_rate == 0.0
    assert gen.entries == ()


def test_generator_row_sums_vanish():
    specs = [
        helpers.two_state_chain(),
        helpers.mm1c_chain(1.0, 2.0, 2),
        build_original_tandem(TandemParams.linear(2, 2, 1.0)),
        build_balanced_tandem(TandemParams.linear(2, 2, 1.0)),
    ]
    rng = np.random.default_rng(7)
    specs += [helpers.random_table_instance(rng, 2, 2)[0] for _ in range(5)]
    for spec in specs:
        q = build_generator(spec).matrix.toarray()
        assert np.abs(q.sum(axis=1)).max() < 1e-12
        off = q - np.diag(np.diag(q))
        assert off.min() >= 0.0


def test_generator_matches_dense_oracle():
    spec = build_original_tandem(TandemParams.linear(2, 2, 1.0))
    q = build_generator(spec).matrix.toarray()
    assert np.abs(q - helpers.dense_q(spec)).max() == 0.0


# ------------------------------------------------------------ simulation


def test_zero_horizon_empty_log():
    log = simulate_path(helpers.two_state_chain(), (0,), 0.0, seed=1)
    assert log.events == []
    assert not log.absorbed


def test_absorbing_start_flagged():
    doc = {"n": 1, "space": {"box": [1]}, "rates": {"0->1": "0", "1->0": "x1"}}
    log = simulate_path(parse_model(doc), (0,), 5.0, seed=1)
    assert log.events == []
    assert log.absorbed


def test_drain_path_absorbs_at_zero():
    doc = {"n": 1, "space": {"box": [3]}, "rates": {"0->1": "0", "1->0": "x1"}}
    log = simulate_path(parse_model(doc), (3,), 1e9, seed=4)
    assert [ev.post for ev in log.events] == [(2,), (1,), (0,)]
    assert log.absorbed


def test_switching_rate_matches_stationary_oracle():
    spec = helpers.two_state_chain()
    log = simulate_path(spec, (0,), 1000.0, seed=20260822)
    pi = stationary_distribution(build_generator(spec))
    oracle = throughput(spec, pi, (0, 1)) + throughput(spec, pi, (1, 0))
    assert oracle == pytest.approx(1.0)
    assert abs(len(log.events) / 1000.0 - oracle) <= 0.1


def test_init_outside_space_rejected():
    with pytest.raises(ModelError, match="not in the state space"):
        simulate_path(helpers.two_state_chain(), (7,), 1.0, seed=0)


def test_negative_horizon_rejected():
    with pytest.raises(ValueError, match="nonnegative"):
        simulate_path(helpers.two_state_chain(), (0,), -1.0, seed=0)


def test_same_seed_bit_identical():
    spec = build_original_tandem(TandemParams.linear(2, 2, 1.0))
    a = simulate_path(spec, (0, 0), 50.0, seed=99)
    b = simulate_path(spec, (0, 0), 50.0, seed=99)
    assert a == b
    c = simulate_path(spec, (0, 0), 50.0, seed=100)
    assert a != c


def test_event_chain_and_flow_conservation():
    spec = build_original_tandem(TandemParams.linear(2, 2, 1.0))
    log = simulate_path(spec, (0, 0), 30.0, seed=5)
    assert len(log.events) > 10
    x = log.initial
    counts = {link: 0 for link in spec.links}
    prev_t = 0.0
    for ev in log.events:
        assert ev.time > prev_t
        assert ev.pre == x
        assert ev.post == spec.target(ev.pre, ev.link)
        counts[ev.link] += 1
        x = ev.post
        prev_t = ev.time
        for node in range(1, spec.n + 1):
            inflow = sum(counts[l] for l in spec.links if l[1] == node)
            outflow = sum(counts[l] for l in spec.links if l[0] == node)
            assert x[node - 1] - log.initial[node - 1] == inflow - outflow


def test_state_at_steps_through_log():
    spec = helpers.two_state_chain()
    log = simulate_path(spec, (0,), 10.0, seed=3)
    assert log.state_at(0.0) == (0,)
    first = log.events[0]
    assert log.state_at(first.time / 2) == (0,)
    assert log.state_at(first.time) == first.post
    assert log.state_at(10.0) == log.events[-1].post


@given(st.integers(0, 2**32 - 1))
def test_path_validity_random_seeds(seed):
    spec = helpers.mm1c_chain(1.0, 2.0, 2)
    log = simulate_path(spec, (0,), 5.0, seed)
    x = log.initial
    t = 0.0
    for ev in log.events:
        assert ev.time > t
        assert ev.time <= 5.0
        assert ev.pre == x
        assert ev.post == spec.target(x, ev.link)
        assert ev.post in spec.state_index
        x = ev.post
        t = ev.time


# ------------------------------------------------------------ stationary


def test_stationary_two_state_symmetric():
    pi = stationary_distribution(build_generator(helpers.two_state_chain()))
    assert pi == pytest.approx([0.5, 0.5], abs=1e-12)


def test_stationary_birth_death_detailed_balance():
    spec = helpers.mm1c_chain(1.0, 2.0, 2)
    pi = stationary_distribution(build_generator(spec))
    # birth-death chain: pi(k+1)/pi(k) = lambda/mu, frozen from that relation
    assert pi == pytest.approx([4 / 7, 2 / 7, 1 / 7], abs=1e-12)


def test_stationary_balanced_tandem_matches_nullspace():
    spec = build_balanced_tandem(TandemParams.linear(2, 2, 1.0))
    assert len(spec.states) == 8
    pi = stationary_distribution(build_generator(spec))
    oracle = helpers.nullspace_stationary(helpers.dense_q(spec))
    assert np.abs(pi - oracle).max() < 1e-10


def test_stationary_residual_below_tol():
    spec = build_original_tandem(TandemParams.linear(3, 3, 1.0))
    gen = build_generator(spec)
    pi = stationary_distribution(gen, tol=1e-12)
    assert float(np.abs(pi @ gen.matrix).max()) < 1e-12
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)
    assert pi.min() >= 0.0


def test_stationary_node_balance():
    spec = build_original_tandem(TandemParams.linear(2, 2, 1.0))
    pi = stationary_distribution(build_generator(spec))
    t01 = throughput(spec, pi, (0, 1))
    t12 = throughput(spec, pi, (1, 2))
    t20 = throughput(spec, pi, (2, 0))
    assert abs(t01 - t12) < 1e-10
    assert abs(t12 - t20) < 1e-10


def test_stationary_with_transient_states():
    doc = {"n": 1, "space": {"box": [2]}, "rates": {"0->1": "0", "1->0": "x1"}}
    pi = stationary_distribution(build_generator(parse_model(doc)))
    assert pi == pytest.approx([1.0, 0.0, 0.0], abs=0)


def test_two_recurrent_classes_rejected():
    doc = {
        "n": 1,
        "space": {"list": [[0], [1], [3], [4]]},
        "rates": {
            "0->1": "ind(x1 = 0) + ind(x1 = 3)",
            "1->0": "ind(x1 = 1) + ind(x1 = 4)",
        },
    }
    gen = build_generator(parse_model(doc))
    with pytest.raises(ReducibleChainError) as exc:
        stationary_distribution(gen)
    classes = sorted(sorted(c) for c in exc.value.classes)
    assert classes == [[(0,), (1,)], [(3,), (4,)]]


# ------------------------------------------------------------- transient


def test_transient_zero_time_is_identity():
    gen = build_generator(helpers.two_state_chain())
    p = transient_distribution(gen, (1,), 0.0)
    assert p.tolist() == [0.0, 1.0]


def test_transient_two_state_closed_form():
    gen = build_generator(helpers.two_state_chain())
    for t in (0.3, 1.0, 20.0):
        p = transient_distribution(gen, (0,), t, tol=1e-13)
        # p0(t) = 1/2 (1 + exp(-2t)) for the symmetric switch
        assert abs(p[0] - 0.5 * (1.0 + math.exp(-2.0 * t))) < 1e-12
    p = transient_distribution(gen, (0,), 20.0, tol=1e-13)
    assert p == pytest.approx([0.5, 0.5], abs=1e-12)


def test_transient_matches_rk4_oracle():
    spec = helpers.mm1c_chain(1.0, 2.0, 2)
    gen = build_generator(spec)
    p = transient_distribution(gen, (0,), 1.0, tol=1e-12)
    q = helpers.dense_q(spec)
    oracle = helpers.rk4_transient(q, np.array([1.0, 0.0, 0.0]), 1.0)
    assert np.abs(p - oracle).max() < 1e-6


def test_transient_semigroup():
    spec = helpers.mm1c_chain(1.0, 2.0, 2)
    gen = build_generator(spec)
    tol = 1e-12
    direct = transient_distribution(gen, (0,), 1.2, tol=tol)
    staged = transient_distribution(
        gen, transient_distribution(gen, (0,), 0.7, tol=tol), 0.5, tol=tol
    )
    assert np.abs(direct - staged).max() < 2 * tol


def test_transient_long_horizon_chunking():
    spec = helpers.mm1c_chain(100.0, 200.0, 2)
    gen = build_generator(spec)
    assert gen.unif_rate * 10.0 > 500.0  # exercises the splitting branch
    p = transient_distribution(gen, (0,), 10.0, tol=1e-12)
    pi = stationary_distribution(gen)
    assert np.abs(p - pi).max() < 1e-9


def test_transient_preserves_mass_and_sign():
    spec = build_original_tandem(TandemParams.linear(2, 2, 1.0))
    gen = build_generator(spec)
    p = transient_distribution(gen, (0, 0), 3.0, tol=1e-12)
    assert p.min() >= 0.0
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


# ------------------------------------------------- distribution arguments


def test_distribution_vector_forms_agree():
    gen = build_generator(helpers.mm1c_chain(1.0, 2.0, 2))
    dense = distribution_vector(gen, [0.25, 0.5, 0.25])
    sparse = distribution_vector(gen, {(0,): 0.25, (1,): 0.5, (2,): 0.25})
    point = distribution_vector(gen, (1,))
    assert dense.tolist() == sparse.tolist() == [0.25, 0.5, 0.25]
    assert point.tolist() == [0.0, 1.0, 0.0]


def test_distribution_vector_errors():
    gen = build_generator(helpers.mm1c_chain(1.0, 2.0, 2))
    with pytest.raises(ModelError):
        distribution_vector(gen, (9,))
    with pytest.raises(ValueError, match="length"):
        distribution_vector(gen, [1.0, 0.0])
    with pytest.raises(ValueError, match="sums to"):
        distribution_vector(gen, [0.5, 0.1, 0.1])
    with pytest.raises(ValueError, match="negative"):
        distribution_vector(gen, [1.5, -0.5, 0.0])


# ------------------------------------------------------------- mean flow


def test_mean_flow_zero_time():
    spec = helpers.two_state_chain()
    assert transient_mean_flow(spec, (0,), (0, 1), 0.0) == 0.0


def test_mean_flow_pure_arrivals_monte_carlo():
    doc = helpers.single_node_doc("ind(x1 < 10)", "0", 10)
    spec = parse_model(doc)
    flow = transient_mean_flow(spec, (0,), (0, 1), 1.0, tol=1e-10)
    # arrivals form a unit Poisson process stopped at its 10th point, so the
    # count at t=1 is min(N, 10) with N ~ Poisson(1)
    rng = np.random.default_rng(20260822)
    sample = np.minimum(rng.poisson(1.0, 100_000), 10)
    se = sample.std(ddof=1) / math.sqrt(sample.size)
    assert abs(flow - sample.mean()) <= 3 * se
    assert 0.9 <= flow <= 1.0


def test_mean_flow_stationary_start_is_linear():
    spec = helpers.two_state_chain()
    pi = stationary_distribution(build_generator(spec))
    flow = transient_mean_flow(spec, pi, (0, 1), 10.0, tol=1e-10)
    assert flow == pytest.approx(5.0, abs=1e-8)


def test_mean_flow_monotone_in_time():
    spec = build_original_tandem(TandemParams.linear(2, 2, 1.0))
    values = [
        transient_mean_flow(spec, (0, 0), (0, 1), t, tol=1e-10)
        for t in (0.0, 0.5, 1.0, 2.0, 4.0)
    ]
    assert all(b >= a - 1e-10 for a, b in zip(values, values[1:]))


def test_mean_flow_flat_rate_shortcut():
    doc = {"n": 1, "space": {"list": [[0]]}, "rates": {"0->1": "0", "1->0": "0"},
           "clamp": True}
    spec = parse_model(doc)
    assert transient_mean_flow(spec, (0,), (0, 1), 7.0) == 0.0


def test_mean_flow_unknown_link():
    with pytest.raises(ModelError, match="unknown link"):
        transient_mean_flow(helpers.two_state_chain(), (0,), (3, 4), 1.0)


# ------------------------------------------------------------ throughput


def test_throughput_two_state():
    spec = helpers.two_state_chain()
    pi = stationary_distribution(build_generator(spec))
    assert throughput(spec, pi, (0, 1)) == pytest.approx(0.5, abs=1e-12)
    assert throughput(spec, pi, (1, 0)) == pytest.approx(0.5, abs=1e-12)


def test_throughput_birth_death():
    spec = helpers.mm1c_chain(1.0, 2.0, 2)
    pi = stationary_distribution(build_generator(spec))
    assert throughput(spec, pi, (0, 1)) == pytest.approx(6 / 7, abs=1e-12)


def test_throughput_all_zero_rates():
    doc = {"n": 1, "space": {"box": [1]}, "rates": {"0->1": "0", "1->0": "0"}}
    spec = parse_model(doc)
    assert throughput(spec, [1.0, 0.0], (0, 1)) == 0.0


def test_throughput_dimension_mismatch():
    with pytest.raises(ValueError):
        throughput(helpers.two_state_chain(), [1.0, 0.0, 0.0], (0, 1))


# ------------------------------------------------------------------- csv


def test_event_log_csv_shape():
    spec = build_original_tandem(TandemParams.linear(2, 2, 1.0))
    log = simulate_path(spec, (0, 0), 5.0, seed=11)
    text = event_log_csv(log)
    lines = text.strip().split("\n")
    assert lines[0] == "time,link_from,link_to,state_after"
    assert len(lines) == len(log.events) + 1
    first = lines[1].split(",")
    ev = log.events[0]
    assert float(first[0]) == ev.time
    assert (int(first[1]), int(first[2])) == ev.link
    assert first[3] == ";".join(str(v) for v in ev.post)


def test_event_log_csv_round_trips_floats():
    spec = helpers.two_state_chain()
    log = simulate_path(spec, (0,), 5.0, seed=2)
    rows = event_log_csv(log).strip().split("\n")[1:]
    times = [float(r.split(",")[0]) for r in rows]
    assert times == [ev.time for ev in log.events]


def test_distribution_csv_shape():
    spec = helpers.mm1c_chain(1.0, 2.0, 2)
    pi = stationary_distribution(build_generator(spec))
    lines = distribution_csv(spec.states, pi).strip().split("\n")
    assert lines[0] == "state,probability"
    assert lines[1].split(",")[0] == "0"
    assert float(lines[1].split(",")[1]) == pi[0]
    assert len(lines) == 4
