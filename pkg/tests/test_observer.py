import dataclasses

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from conftest import as_float_array, sine_source, reference_system
from waveobs import (DimensionError, InitialConditions, ObserverConfig, ObserverState, auto_sigma,
                     check_assumption, design_gain, observer_step, run_observer, simulate_forward,
                     source_rmse, validate_gain)
from waveobs.observer import max_filter_norm


def micro_config(micro):
    step = micro["observer_step"]
    cfg = ObserverConfig(L=as_float_array(step["L"]), sigma=0.5,
                         xi0_hat=as_float_array(step["xi0_hat"]), f0_hat=as_float_array(step["f0_hat"]),
                         upsilon0=as_float_array(step["upsilon0"]))
    return cfg, as_float_array(step["z"]), step["expected"]


def test_micro_step_matches_hand_fixture(micro, micro_system):
    cfg, z, expected = micro_config(micro)
    nxt = observer_step(micro_system, cfg, cfg.initial_state(micro_system), z)
    np.testing.assert_allclose(nxt.upsilon, as_float_array(expected["upsilon1"]), rtol=0, atol=1e-15)
    np.testing.assert_allclose(nxt.f_hat, as_float_array(expected["f1_hat"]), rtol=0, atol=1e-15)
    np.testing.assert_allclose(nxt.xi_hat, as_float_array(expected["xi1_hat"]), rtol=0, atol=1e-15)
    assert nxt.step_index == 1


def test_update_order_matters(micro, micro_system):
    # the source update must use the filter before its update and the state update the one after
    cfg, z, expected = micro_config(micro)
    st0 = cfg.initial_state(micro_system)
    nxt = observer_step(micro_system, cfg, st0, z)
    assert not np.allclose(nxt.upsilon, st0.upsilon)
    innov = z - st0.xi_hat[:2]
    swapped_f = st0.f_hat + cfg.sigma * nxt.upsilon[:2].T @ innov
    assert not np.allclose(swapped_f, nxt.f_hat)
    G, B = micro_system.G.toarray(), micro_system.B.toarray()
    swapped_xi = G @ st0.xi_hat + B @ st0.f_hat + cfg.L @ innov + st0.upsilon @ (nxt.f_hat - st0.f_hat)
    assert not np.allclose(swapped_xi, nxt.xi_hat)
    np.testing.assert_allclose(nxt.xi_hat, as_float_array(expected["xi1_hat"]), atol=1e-15)


def test_zero_innovation_step():
    sys = reference_system(7)
    rng = np.random.default_rng(0)
    st0 = ObserverState(rng.normal(size=14), rng.normal(size=7), rng.normal(size=(14, 7)))
    cfg = ObserverConfig(L=rng.normal(size=(14, 7)), sigma=0.3)
    nxt = observer_step(sys, cfg, st0, st0.xi_hat[:7])
    np.testing.assert_array_equal(nxt.f_hat, st0.f_hat)
    np.testing.assert_allclose(nxt.xi_hat, sys.G @ st0.xi_hat + sys.B @ st0.f_hat + sys.b, rtol=1e-14)


def test_step_dimension_errors():
    sys = reference_system(5)
    cfg = ObserverConfig(L=np.zeros((10, 5)), sigma=1.0)
    with pytest.raises(DimensionError):
        observer_step(sys, cfg, cfg.initial_state(sys), np.zeros(4))
    with pytest.raises(DimensionError):
        ObserverConfig(L=np.zeros((10, 4)), sigma=1.0).initial_state(sys)
    with pytest.raises(ValueError):
        ObserverConfig(L=np.zeros((10, 5)), sigma=0.0)


def truth_run(n_x=21, sel=None, ic=None, f=None):
    sys = reference_system(n_x, sel)
    f = sine_source(sys.grid) if f is None else f
    ic = ic or InitialConditions.zeros(n_x)
    return sys, simulate_forward(sys, ic, f)


def test_truth_initialised_observer_is_exact():
    x = reference_system(21).grid.nodes
    sys, run = truth_run(21, ic=InitialConditions(np.sin(np.pi * x / 2), np.cos(x)))
    gain = design_gain(sys, "diagonal")
    cfg = ObserverConfig(L=gain.L, sigma=1.0, xi0_hat=run.states[0], f0_hat=run.truth_source)
    traj = run_observer(sys, cfg, run.measurements)
    assert not traj.innovation_norms.any()
    np.testing.assert_array_equal(traj.f_hat, np.broadcast_to(run.truth_source, traj.f_hat.shape))
    err = np.abs(traj.xi_hat[:-1] - run.states).max()
    assert err <= 1e-12 * np.abs(run.states).max()


def test_zero_measurements_keep_zero_estimates():
    sys = reference_system(9)
    cfg = ObserverConfig(L=design_gain(sys, "diagonal").L, sigma=2.0)
    traj = run_observer(sys, cfg, np.zeros((50, 9)))
    assert not traj.xi_hat.any() and not traj.f_hat.any()
    assert traj.xi_hat.shape == (51, 18) and traj.innovation_norms.shape == (50,)


def test_replay_is_identical():
    sys, run = truth_run(11)
    cfg = ObserverConfig(L=design_gain(sys, "diagonal").L, sigma=1.0)
    a = run_observer(sys, cfg, run.measurements)
    b = run_observer(sys, cfg, run.measurements)
    assert a.xi_hat.tobytes() == b.xi_hat.tobytes() and a.f_hat.tobytes() == b.f_hat.tobytes()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 12))
def test_zero_innovation_stationarity(seed, n_x):
    # feed the observer its own predictions: the source estimate never moves
    sys = reference_system(n_x)
    rng = np.random.default_rng(seed)
    cfg = ObserverConfig(L=rng.normal(size=(2 * n_x, n_x)) * 0.1, sigma=rng.uniform(0.1, 10),
                         f0_hat=rng.normal(size=n_x), xi0_hat=rng.normal(size=2 * n_x))
    st0 = st = cfg.initial_state(sys)
    for _ in range(30):
        st = observer_step(sys, cfg, st, st.xi_hat[sys.measured])
        assert np.array_equal(st.f_hat, st0.f_hat)


def test_auto_sigma_hits_margin():
    sys = reference_system(21)
    gain = design_gain(sys, "two_block")
    sigma = auto_sigma(sys, gain.L, 500, margin=0.9)
    rep = check_assumption(sys, ObserverConfig(L=gain.L, sigma=sigma), 500, 100)
    assert rep.max_filter_norm == pytest.approx(0.9, rel=1e-12)
    assert rep.satisfied == (True, True)


def test_check_assumption_small_sigma_limit():
    sys = reference_system(9)
    L = design_gain(sys, "diagonal").L
    peak = max_filter_norm(sys, L, 300)
    rep = check_assumption(sys, ObserverConfig(L=L, sigma=1e-300), 300, 50)
    assert rep.satisfied[0] and rep.max_filter_norm <= 1e-149 * peak
    assert rep.pe_beta < 1e-290


def test_check_assumption_degenerate_filter():
    sys = reference_system(6)
    zero_B = dataclasses.replace(sys, B=sp.csr_matrix(sys.B.shape))
    rep = check_assumption(zero_B, ObserverConfig(L=np.zeros((12, 6)), sigma=1.0), 40, 10)
    assert rep.max_filter_norm == 0.0 and rep.pe_beta == 0.0
    assert rep.satisfied == (True, False)


def test_check_assumption_invalid_window():
    sys = reference_system(5)
    cfg = ObserverConfig(L=np.zeros((10, 5)), sigma=1.0)
    with pytest.raises(ValueError):
        check_assumption(sys, cfg, 10, 11)
    with pytest.raises(ValueError):
        check_assumption(sys, cfg, 10, 0)


def test_partial_sensing_has_no_steady_excitation():
    # with fewer sensors than source samples the steady filter H Y has rank <= m < n_x
    from waveobs import MeasurementSelection
    sys = reference_system(11, MeasurementSelection.window(6, 5))
    gain = design_gain(sys, "diagonal")
    sigma = auto_sigma(sys, gain.L, 20000)
    rep = check_assumption(sys, ObserverConfig(L=gain.L, sigma=sigma), 20000, 20)
    assert rep.satisfied[0] and not rep.satisfied[1]


@pytest.mark.parametrize("n_x", [11, 21, 51])
def test_converges_under_stable_gain(n_x):
    sys, run = truth_run(n_x)
    gain = design_gain(sys, "two_block")
    radius, stable = validate_gain(sys, gain.L)
    assert stable
    n_t = sys.grid.n_t
    cfg = ObserverConfig(L=gain.L, sigma=auto_sigma(sys, gain.L, n_t + 1))
    rep = check_assumption(sys, cfg, n_t + 1, 100)
    assert rep.satisfied == (True, True)
    traj = run_observer(sys, cfg, run.measurements)
    assert source_rmse(run.truth_source, traj.terminal_f_hat) < 1e-6
