import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from epigsp import _kernels
from epigsp.epidemic import (
    BetaEvent,
    EpidemicState,
    IntegratorConfig,
    ScenarioSpec,
    SirParams,
    Simulator,
    airport_like_graph,
    h1n1_config,
    integrate,
    integrate_fixed_rk4,
    make_scenario,
    network_rhs,
    sir_rhs_local,
)
from epigsp.errors import ArgumentError, ConfigurationError, IntegrityError, StiffnessError
from epigsp.graph import DistanceGraphConfig, Graph, build_distance_graph, isolate_nodes

from conftest import random_graph


@pytest.fixture(scope="module")
def g60():
    return build_distance_graph(DistanceGraphConfig(n=60, box_side=5, threshold=1.5, seed=1))


def _reference(g, params, init, t_end, events=()):
    """Dense-output DOP853 solution of the same equations, restarted at events."""
    beta = np.array(params.beta)

    def f(t, y):
        st_ = EpidemicState.from_array(np.clip(y.reshape(3, -1), 0, None))
        return network_rhs(st_, SirParams(beta, params.gamma, params.kappa), g).ravel()

    y = init.as_array().ravel()
    t = 1.0
    out = {}
    for ev_t, nodes, b in list(events) + [(t_end, (), None)]:
        sol = solve_ivp(f, (t, ev_t), y, method="DOP853", rtol=1e-12, atol=1e-14, dense_output=True)
        for k in range(int(t), int(ev_t) + 1):
            out[k] = sol.sol(k).reshape(3, -1)
        y, t = sol.y[:, -1], ev_t
        if b is not None:
            beta[list(nodes)] = b
    return out


def test_local_sir_rhs():
    d = sir_rhs_local([990.0, 10.0, 0.0], 0.3, 0.1, 1000.0)
    np.testing.assert_allclose(d, [-2.97, 1.97, 1.0])
    assert d.sum() == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ArgumentError):
        sir_rhs_local([1, 0, 0], 0.3, 0.1, 0.0)


def test_single_node_matches_local_model():
    g = Graph(np.zeros((1, 1)))
    params = SirParams.uniform(1, 0.3, 0.1, 0.1)
    init = EpidemicState.seeded(1, [0], 0.002)
    run = integrate(g, params, init, horizon=200)
    H = 1000.0
    sol = solve_ivp(lambda t, y: sir_rhs_local(y, 0.3, 0.1, H), (1, 200), [H * 0.998, H * 0.002, 0.0],
                    method="DOP853", rtol=1e-12, atol=1e-12, t_eval=np.arange(1, 201))
    np.testing.assert_allclose(run.full_state[:, :, 0], sol.y.T / H, atol=1e-7)


def test_kernel_rhs_matches_numpy(g60):
    rng = np.random.default_rng(0)
    y = rng.dirichlet([1, 1, 1], size=60).T.copy()
    params = SirParams(rng.random(60), rng.random(60), 0.3)
    ref = network_rhs(EpidemicState.from_array(y), params, g60)
    from epigsp.epidemic import _csr_arrays

    out = np.empty_like(y)
    _kernels.network_rhs_csr(y, *_csr_arrays(g60), params.beta, params.gamma, params.kappa, out)
    np.testing.assert_allclose(out, ref, atol=1e-14)


@given(st.integers(2, 12), st.integers(0, 10_000))
def test_rhs_conserves_each_node(n, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, 0.5)
    y = rng.dirichlet([1, 1, 1], size=n).T
    d = network_rhs(EpidemicState.from_array(y), SirParams(rng.random(n), rng.random(n), rng.random()), g)
    assert np.abs(d.sum(axis=0)).max() <= 1e-14


def test_isolated_node_exchanges_nothing(g60):
    g = isolate_nodes(g60, [5])
    params = SirParams.uniform(60, 0.3, 0.1, 0.5)
    init = EpidemicState.seeded(60, [0, 5], 0.01)
    run = integrate(g, params, init, horizon=60)
    solo = integrate(Graph(np.zeros((1, 1))), SirParams.uniform(1, 0.3, 0.1, 0.5),
                     EpidemicState.seeded(1, [0], 0.01), horizon=60)
    np.testing.assert_allclose(run.full_state[:, :, 5], solo.full_state[:, :, 0], atol=1e-9)


def test_matches_reference_solver_with_event(g60):
    params = SirParams.uniform(60, 0.3, 0.1, 0.1)
    init = EpidemicState.seeded(60, [7], 0.002)
    events = [BetaEvent(20.0, (7, 8), 0.8)]
    run = integrate(g60, params, init, horizon=40, schedule=events)
    ref = _reference(g60, params, init, 40.0, [(20.0, (7, 8), 0.8)])
    assert run.times[0] == 1.0 and run.series.shape == (60, 40)
    err = max(np.abs(run.full_state[k - 1] - ref[k]).max() for k in range(1, 41))
    assert err < 1e-6


def test_conservation_and_bounds(g60):
    params = SirParams.uniform(60, 0.3, 0.1, 0.1)
    run = integrate(g60, params, EpidemicState.seeded(60, [3], 0.002), horizon=300)
    total = run.full_state.sum(axis=1)
    assert np.abs(total - 1).max() <= 1e-6
    assert run.full_state.min() >= 0.0


def test_split_run_is_bit_identical(g60):
    params = SirParams.uniform(60, 0.3, 0.1, 0.1)
    init = EpidemicState.seeded(60, [3], 0.002)
    whole = Simulator(g60, params, init)
    whole.advance_to(100.0)
    parts = Simulator(g60, params, init)
    for t in (5.0, 17.0, 60.0, 100.0):
        parts.advance_to(t)
    assert np.array_equal(whole.states(), parts.states())
    branch = parts.copy()
    branch.set_beta([0], 0.9)
    branch.advance_to(110.0)
    assert parts.t == 100.0 and branch.t == 110.0


def test_simulator_rejects_off_grid_and_backwards(g60):
    sim = Simulator(g60, SirParams.uniform(60, 0.3, 0.1, 0.1), EpidemicState.seeded(60, [0], 0.002))
    sim.advance_to(5.0)
    with pytest.raises(ArgumentError):
        sim.advance_to(5.5)
    with pytest.raises(ArgumentError):
        sim.advance_to(3.0)


def test_step_underflow_raises_stiffness_error(g60):
    cfg = IntegratorConfig(rel_tol=1e-15, abs_tol=1e-18, min_step=0.5, initial_step=1.0)
    with pytest.raises(StiffnessError) as exc:
        integrate(g60, SirParams.uniform(60, 5.0, 0.1, 0.1), EpidemicState.seeded(60, [0], 0.2), cfg, 20)
    assert exc.value.time is not None and exc.value.state is not None


def test_negative_state_is_reported():
    g = Graph(np.zeros((1, 1)))
    from epigsp.epidemic import _csr_arrays

    y0 = np.array([[1.0], [-1e-3], [0.0]])
    *_, status, _ = _kernels.integrate_segment(y0, 1.0, 1.0, 1, *_csr_arrays(g), np.array([0.3]),
                                               np.array([0.1]), 0.0, 1e-8, 1e-10, 1e-10, 1.0, 0.1)
    assert status == _kernels.NEGATIVE_STATE
    assert issubclass(IntegrityError, RuntimeError)


def test_fixed_step_rk4_order():
    g = Graph(np.array([[0, 1], [1, 0]], dtype=float))
    params = SirParams(np.array([1.2, 0.6]), np.array([0.2, 0.3]), 0.4)
    init = EpidemicState(np.array([0.9, 1.0]), np.array([0.1, 0.0]), np.zeros(2))
    ys = [integrate_fixed_rk4(g, params, init, h, 10.0).as_array() for h in (0.1, 0.05, 0.025)]
    p = math.log2(np.abs(ys[0] - ys[1]).max() / np.abs(ys[1] - ys[2]).max())
    assert 3.5 <= p <= 4.5


def test_state_and_config_validation():
    with pytest.raises(ConfigurationError):
        SirParams.uniform(3, -0.1, 0.1, 0.1)
    with pytest.raises(ConfigurationError):
        IntegratorConfig(min_step=2.0, max_step=1.0)
    with pytest.raises(ArgumentError):
        EpidemicState(np.array([1.2]), np.array([0.0]), np.array([0.0]))


# --- scenarios ---------------------------------------------------------------------


def test_single_perturbation_seeds_one_node():
    g = build_distance_graph(DistanceGraphConfig(n=400, seed=0))
    init, schedule = make_scenario(ScenarioSpec(), g, seed=12)
    assert np.count_nonzero(init.i) == 1 and init.i.max() == 0.002 and schedule == []
    again, _ = make_scenario(ScenarioSpec(), g, seed=12)
    assert np.array_equal(init.i, again.i)


def test_double_perturbation_targets_the_source(g60):
    init, schedule = make_scenario(ScenarioSpec(kind="double-perturbation", horizon=100), g60, 3)
    (ev,) = schedule
    assert ev.time == 50.0 and ev.beta == 0.8 and ev.nodes == tuple(np.flatnonzero(init.i))


def test_multiple_infections_are_disjoint(g60):
    spec = ScenarioSpec(kind="multiple-infections", event_times=(10, 20, 30), horizon=100)
    init, schedule = make_scenario(spec, g60, 4)
    sources = set(np.flatnonzero(init.i).tolist())
    assert len(sources) == 5
    seen = set(sources)
    for ev in schedule:
        assert len(ev.nodes) == 5 and ev.beta == 0.6 and not seen & set(ev.nodes)
        seen |= set(ev.nodes)
    small = Graph(np.zeros((12, 12)))
    with pytest.raises(ConfigurationError):
        make_scenario(spec, small, 0)


def test_scenario_spec_validation():
    with pytest.raises(ConfigurationError):
        ScenarioSpec(kind="nope")
    with pytest.raises(ConfigurationError):
        ScenarioSpec(kind="double-perturbation", event_times=(10, 20))
    with pytest.raises(ConfigurationError):
        ScenarioSpec(event_times=(2000,), horizon=100)
    spec = ScenarioSpec(kind="custom", events=[{"time": 3, "nodes": [1], "beta": 0.5}], horizon=10)
    assert ScenarioSpec.from_dict(spec.to_dict()) == spec


def test_h1n1_configuration():
    g = airport_like_graph(n=200, seed=1)
    params, spec = h1n1_config(g)
    assert params.kappa == 0.0028 and g.labels[0] == "MEX" and spec.source_nodes == (0,)
    params, spec = h1n1_config(g, super_spreader=True, event_times=(20, 40, 60))
    init, schedule = make_scenario(spec, g, 0)
    assert len(schedule) == 3
    for ev in schedule:
        assert len(ev.nodes) == math.ceil(0.02 * 200) and ev.beta == 0.8 and 0 not in ev.nodes
    with pytest.raises(ConfigurationError):
        h1n1_config(g, source=500)
