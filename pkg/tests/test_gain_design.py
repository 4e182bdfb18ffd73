import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from conftest import FIXTURES, sine_source, reference_system
from waveobs import (DimensionError, EmptyTemplateError, GainTemplate, InitialConditions, MeasurementSelection,
                     ObserverConfig, auto_sigma, design_gain, run_observer, simulate_forward, spectral_radius,
                     validate_gain)
from waveobs.gain_design import design_auto, load_gain, save_gain

FIXTURE_GAIN = FIXTURES / "gain_n21_full_diagonal.csv"


def eig_oracle(M):
    M = M.toarray() if sp.issparse(M) else M
    return np.abs(np.linalg.eigvals(M)).max()


def test_spectral_radius_examples():
    assert spectral_radius(np.eye(4)) == pytest.approx(1.0)
    assert spectral_radius(np.diag([0.5, -0.9])) == pytest.approx(0.9)
    r = spectral_radius(reference_system(21).G)
    assert 1 - 1e-6 <= r <= 1 + 1e-6
    with pytest.raises(DimensionError):
        spectral_radius(np.zeros((3, 4)))


def test_spectral_radius_iterative_path():
    # above the dense limit ARPACK is used; compare with a known spectrum
    rng = np.random.default_rng(0)
    n = 1300
    d = rng.uniform(-0.5, 0.5, n)
    d[17] = -0.97
    M = sp.diags(d) + sp.random(n, n, density=2e-4, random_state=1) * 1e-3
    assert spectral_radius(M.tocsr()) == pytest.approx(eig_oracle(M), rel=1e-8)


@pytest.mark.parametrize("n_x", [11, 21, 51])
def test_diagonal_template_stabilises_full_sensing(n_x):
    sys = reference_system(n_x)
    res = design_gain(sys, "diagonal")
    assert res.spectral_radius < 1 and res.stable
    assert eig_oracle(sys.G - sp.csr_matrix(res.L) @ sys.H) == pytest.approx(res.spectral_radius, rel=1e-9)


def test_two_block_template_is_near_deadbeat_under_full_sensing():
    sys = reference_system(21)
    res = design_gain(sys, "two_block")
    assert res.spectral_radius < 1e-6
    assert res.params_used[0] == pytest.approx(2.0, abs=1e-6)
    assert res.params_used[1] * sys.grid.dt == pytest.approx(1.0, abs=1e-6)


def test_auto_picks_a_stabilising_template_for_partial_sensing():
    sys = reference_system(21, MeasurementSelection.end(21))
    two_block = design_gain(sys, "two_block")
    assert two_block.spectral_radius >= 1 - 1e-9 and not two_block.stable
    res = design_auto(sys)
    assert res.template == "diagonal" and res.stable


def test_no_measurements_leaves_G_untouched():
    import dataclasses
    sys = dataclasses.replace(reference_system(9), measured=np.array([], dtype=int))
    res = design_gain(sys, "diagonal", target_radius=0.99)
    assert res.L.shape == (18, 0)
    assert res.spectral_radius == spectral_radius(sys.G)
    assert not res.meets_target and not res.stable


def test_explicit_fixture_reproduces_radius():
    sys = reference_system(21)
    L = load_gain(FIXTURE_GAIN, (42, 21))
    res = design_gain(sys, GainTemplate.explicit(L), target_radius=0.99)
    assert res.spectral_radius == validate_gain(sys, L)[0]
    np.testing.assert_array_equal(res.L, L)
    radius, stable = validate_gain(sys, L)
    assert stable and radius == pytest.approx(eig_oracle(sys.G - sp.csr_matrix(L) @ sys.H), rel=1e-12)


def test_validate_gain_examples():
    sys = reference_system(21)
    radius, stable = validate_gain(sys, np.zeros((42, 21)))
    assert radius == spectral_radius(sys.G) and not stable
    L = load_gain(FIXTURE_GAIN, (42, 21))
    radius, stable = validate_gain(sys, 1e6 * L)
    assert not stable and radius == pytest.approx(eig_oracle(sys.G - sp.csr_matrix(1e6 * L) @ sys.H))
    with pytest.raises(DimensionError):
        validate_gain(sys, np.zeros((42, 20)))


def test_empty_template_rejected():
    sys = reference_system(5)
    with pytest.raises(EmptyTemplateError):
        design_gain(sys, GainTemplate.explicit(np.zeros((10, 5))))
    with pytest.raises(ValueError):
        design_gain(sys, "diagonal", target_radius=1.0)


@settings(max_examples=10, deadline=None)
@given(st.integers(4, 16), st.data(), st.sampled_from(["diagonal", "two_block"]))
def test_gain_respects_template_pattern(n_x, data, kind):
    count = data.draw(st.integers(1, n_x))
    start = data.draw(st.integers(0, n_x - count))
    sys = reference_system(n_x, MeasurementSelection.window(start, count))
    template = GainTemplate.named(kind, sys)
    res = design_gain(sys, template, grid_size=5, refine=False)
    assert set(zip(*np.nonzero(res.L))) <= template.pattern
    assert res.spectral_radius == validate_gain(sys, res.L)[0]


def test_gain_csv_round_trip(tmp_path):
    L = load_gain(FIXTURE_GAIN, (42, 21))
    save_gain(tmp_path / "L.csv", L)
    np.testing.assert_array_equal(load_gain(tmp_path / "L.csv", (42, 21)), L)
    with pytest.raises(DimensionError):
        load_gain(FIXTURE_GAIN, (10, 3))


def test_stable_gain_innovation_envelope_decays():
    # windowed maxima over 100 steps never grow after a burn-in, down to a round-off floor
    sys = reference_system(21)
    x = sys.grid.nodes
    run = simulate_forward(sys, InitialConditions(np.sin(np.pi * x / 2), np.zeros(21)), sine_source(sys.grid))
    L = load_gain(FIXTURE_GAIN, (42, 21))
    assert validate_gain(sys, L)[1]
    cfg = ObserverConfig(L=L, sigma=auto_sigma(sys, L, sys.grid.n_t + 1))
    innov = run_observer(sys, cfg, run.measurements).innovation_norms
    n_win = len(innov) // 100
    env = innov[:n_win * 100].reshape(n_win, 100).max(axis=1)
    floor = 1e-12 * env.max()
    burn_in = 2
    assert np.all(env[burn_in + 1:] <= env[burn_in:-1] + floor)
    assert env[-1] < 1e-2 * env.max()
