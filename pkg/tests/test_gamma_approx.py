import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from netmimo.gamma_approx import (
    GammaMix,
    GammaParams,
    interference_mix_dl_disjoint,
    interference_mix_ul,
    moment_match,
    signal_form_gap,
    signal_mix_user_centric,
    signal_single_gamma,
    table1_distribution,
    varpi,
)
from netmimo.propagation import PathLossModel

MODEL = PathLossModel()

# ---------------------------------------------------------------- containers


def test_gamma_params_moments_and_laplace():
    g = GammaParams(shape=2.5, scale=0.4)
    assert g.mean() == pytest.approx(1.0)
    assert g.variance() == pytest.approx(0.4)
    s = np.array([0.0, 1.0, 10.0])
    assert np.allclose(g.laplace(s), (1 + 0.4 * s) ** -2.5)
    x = g.sample(200000, seed=0)
    assert abs(x.mean() - 1.0) < 4 * np.sqrt(0.4 / x.size)


def test_gamma_params_validation():
    for bad in [dict(shape=0.0, scale=1.0), dict(shape=1.0, scale=0.0),
                dict(shape=-1.0, scale=1.0), dict(shape=np.inf, scale=1.0)]:
        with pytest.raises(ValueError):
            GammaParams(**bad)


def test_gamma_mix_moments():
    mix = GammaMix(coefficients=[2.0, 0.5], shapes=[3.0, 0.25])
    assert mix.mean() == pytest.approx(2 * 3 + 0.5 * 0.25)
    assert mix.variance() == pytest.approx(4 * 3 + 0.25 * 0.25)
    assert mix.n_terms == 2


def test_gamma_mix_laplace_is_product_of_parts():
    mix = GammaMix(coefficients=[1.5, 0.2, 0.7], shapes=[2.2, 0.5, 1.0])
    s = np.geomspace(1e-3, 1e3, 40)
    expect = np.ones_like(s)
    for p in mix.as_parts():
        expect *= p.laplace(s)
    assert np.allclose(mix.laplace(s), expect, rtol=1e-12)


def test_gamma_mix_laplace_against_sampling():
    mix = GammaMix(coefficients=[1.0, 0.3], shapes=[2.2, 0.5])
    x = mix.sample(200000, seed=1)
    for s in [0.1, 0.5, 2.0]:
        emp = np.exp(-s * x)
        se = emp.std() / np.sqrt(x.size)
        assert abs(emp.mean() - mix.laplace(s)) < 4 * se


def test_gamma_mix_sampling_distribution():
    # equal coefficients collapse to a single Gamma with summed shape
    c = 0.7
    mix = GammaMix(coefficients=[c, c], shapes=[1.3, 2.1])
    x = mix.sample(50000, seed=2) / c
    assert stats.kstest(x, stats.gamma(a=3.4).cdf).pvalue > 1e-3


def test_gamma_mix_empty_is_zero():
    mix = GammaMix(coefficients=[], shapes=[])
    assert mix.mean() == 0.0
    assert np.all(mix.laplace(np.array([0.0, 5.0])) == 1.0)
    assert np.all(mix.sample(10, seed=0) == 0.0)


def test_gamma_mix_validation():
    with pytest.raises(ValueError):
        GammaMix(coefficients=[1.0], shapes=[1.0, 2.0])
    with pytest.raises(ValueError):
        GammaMix(coefficients=[-0.1], shapes=[1.0])
    with pytest.raises(ValueError):
        GammaMix(coefficients=[1.0], shapes=[0.0])
    with pytest.raises(ValueError):
        GammaMix(coefficients=[1.0], shapes=[1.0]).laplace(-1.0)


# ---------------------------------------------------------------- matching


def test_moment_match_single_part_identity():
    g = GammaParams(shape=3.7, scale=0.21)
    m = moment_match([g])
    assert m.shape == pytest.approx(3.7, rel=1e-14)
    assert m.scale == pytest.approx(0.21, rel=1e-14)


def test_moment_match_identical_parts_add_shapes():
    g = GammaParams(shape=1.5, scale=2.0)
    m = moment_match([g] * 4)
    assert m.shape == pytest.approx(6.0, rel=1e-13)
    assert m.scale == pytest.approx(2.0, rel=1e-13)


def test_moment_match_frozen_example():
    # parts (1,1) and (1,2): sum kt = 3, sum kt^2 = 5 -> k = 9/5, t = 5/3
    m = moment_match([GammaParams(1.0, 1.0), GammaParams(1.0, 2.0)])
    assert m.shape == pytest.approx(1.8, rel=1e-14)
    assert m.scale == pytest.approx(5.0 / 3.0, rel=1e-14)


def test_moment_match_needs_parts():
    with pytest.raises(ValueError):
        moment_match([])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3)),
                min_size=1, max_size=8))
def test_moment_match_preserves_first_two_moments(parts):
    gs = [GammaParams(shape=k, scale=t) for k, t in parts]
    m = moment_match(gs)
    mean = sum(g.mean() for g in gs)
    var = sum(g.variance() for g in gs)
    assert m.mean() == pytest.approx(mean, rel=1e-12)
    assert m.variance() == pytest.approx(var, rel=1e-12)


# ---------------------------------------------------------------- shapes


def test_varpi_examples():
    assert varpi(4, 2, 5.0) == pytest.approx(2.2, abs=1e-15)
    assert varpi(4, 2, 1.0) == pytest.approx(3.0, abs=1e-15)
    assert varpi(4, 2, 1e9) == pytest.approx(2.0, rel=1e-8)


def test_varpi_validation():
    with pytest.raises(ValueError):
        varpi(2, 4, 1.0)
    with pytest.raises(ValueError):
        varpi(4, 2, 0.0)
    with pytest.raises(ValueError):
        varpi(0, 0, 1.0)


def test_signal_mix_shapes_and_coefficients():
    d = np.array([50.0, 120.0, 300.0])
    mix = signal_mix_user_centric(d, MODEL, m=4, k=2, bbar=5.0)
    assert np.allclose(mix.coefficients, MODEL.gain(d))
    assert np.allclose(mix.shapes, 2.2)
    assert mix.mean() == pytest.approx(2.2 * MODEL.gain(d).sum(), rel=1e-12)


def test_interference_shapes():
    d = np.array([80.0, 140.0])
    ul = interference_mix_ul(d, MODEL, bbar=4.0)
    assert np.allclose(ul.shapes, 0.25)
    assert np.allclose(ul.coefficients, MODEL.gain(d))
    dl = interference_mix_dl_disjoint(d, MODEL, k=2)
    assert np.allclose(dl.shapes, 2.0)


def test_interference_validation():
    with pytest.raises(ValueError):
        interference_mix_ul([10.0], MODEL, bbar=0.0)
    with pytest.raises(ValueError):
        interference_mix_dl_disjoint([10.0], MODEL, k=0)
    with pytest.raises(ValueError):
        signal_mix_user_centric([-5.0], MODEL, 4, 2, 2.0)


# ---------------------------------------------------------------- two forms


def test_single_gamma_coincides_with_mix_for_one_bs():
    # B = 1: mixture is Gamma(M - K + 1, beta); the rescaled matched form
    # gives shape M * (M - K + 1)/M = M - K + 1 at the same scale
    d = [75.0]
    single = signal_single_gamma(d, MODEL, m=4, k=2)
    mix = signal_mix_user_centric(d, MODEL, m=4, k=2, bbar=1.0)
    assert single.shape == pytest.approx(3.0, rel=1e-13)
    assert single.scale == pytest.approx(MODEL.gain(75.0), rel=1e-13)
    assert mix.shapes[0] == pytest.approx(3.0, rel=1e-13)


def test_signal_form_gap_reports():
    gap1 = signal_form_gap([75.0], MODEL, m=4, k=2)
    assert gap1["mean_rel_gap"] < 1e-12
    assert gap1["laplace_max_rel_gap"] < 1e-10
    gap3 = signal_form_gap([40.0, 90.0, 200.0], MODEL, m=4, k=2)
    assert gap3["mixture_mean"] > 0
    assert gap3["laplace_max_rel_gap"] > 1e-4  # the forms genuinely differ


# ---------------------------------------------------------------- dispatch


@pytest.mark.parametrize("scheme,direction,component,expect_shape", [
    ("user_centric", "ul", "signal", 2.2),
    ("user_centric", "dl", "signal", 2.2),
    ("disjoint", "ul", "signal", 2.2),
    ("disjoint", "dl", "signal", 2.2),
    ("user_centric", "ul", "interference", 0.2),
    ("user_centric", "dl", "interference", 0.2),
    ("disjoint", "ul", "interference", 0.2),
    ("disjoint", "dl", "interference", 2.0),
])
def test_table_dispatch(scheme, direction, component, expect_shape):
    mix = table1_distribution(scheme, direction, component, [60.0, 110.0],
                              MODEL, m=4, k=2, bbar=5.0)
    assert np.allclose(mix.shapes, expect_shape)
    assert np.allclose(mix.coefficients, MODEL.gain(np.array([60.0, 110.0])))


def test_table_dispatch_validation():
    with pytest.raises(ValueError):
        table1_distribution("hex", "ul", "signal", [1.0], MODEL, 4, 2, 2.0)
    with pytest.raises(ValueError):
        table1_distribution("disjoint", "sideways", "signal", [1.0], MODEL,
                            4, 2, 2.0)
    with pytest.raises(ValueError):
        table1_distribution("disjoint", "ul", "noise", [1.0], MODEL, 4, 2, 2.0)
