import numpy as np
import pytest
from scipy import stats

from netmimo.geometry import Cluster, Deployment, Window
from netmimo.propagation import (
    DEFAULT_PATH_LOSS,
    PathLossModel,
    build_channel_set,
    draw_channel,
    link_seed,
    path_loss,
)
from netmimo._kernels import rng as krng

# ---------------------------------------------------------------- oracles


def macro_fit_db(d_km):
    # urban macro distance law the default constants are calibrated to
    return 128.1 + 37.6 * np.log10(d_km)


# ---------------------------------------------------------------- path loss


def test_path_loss_bounded_at_zero():
    assert DEFAULT_PATH_LOSS.gain(0.0) == 1.0


def test_path_loss_monotone():
    r = np.linspace(0.0, 5000.0, 200)
    g = path_loss(DEFAULT_PATH_LOSS, r)
    assert np.all(np.diff(g) < 0)
    assert np.all(g > 0)


@pytest.mark.parametrize("d_m", [200.0, 500.0, 1000.0, 3000.0])
def test_path_loss_matches_macro_fit(d_m):
    loss_db = -10.0 * np.log10(DEFAULT_PATH_LOSS.gain(d_m))
    assert abs(loss_db - macro_fit_db(d_m / 1000.0)) < 0.1


def test_path_loss_validation():
    with pytest.raises(ValueError):
        PathLossModel(d0=0.0)
    with pytest.raises(ValueError):
        PathLossModel(alpha=2.0)
    with pytest.raises(ValueError):
        DEFAULT_PATH_LOSS.gain(-1.0)


# ---------------------------------------------------------------- keyed RNG


def test_mix64_avalanche_and_distinctness():
    x = np.arange(10000, dtype=np.uint64)
    y = krng.mix64(x)
    assert len(np.unique(y)) == 10000
    # flipping one input bit flips roughly half the output bits
    flips = np.unpackbits((krng.mix64(x ^ np.uint64(1)) ^ y).view(np.uint8))
    assert 0.45 < flips.mean() < 0.55


def test_pair_seed_symmetric_in_usage_not_indices():
    a = krng.pair_seed(99, 3, 7)
    b = krng.pair_seed(99, 3, 7)
    assert a == b
    assert krng.pair_seed(99, 7, 3) != a          # indices are roles, not a set
    assert krng.pair_seed(100, 3, 7) != a
    vec = krng.pair_seed(99, np.arange(5), 7)
    assert vec[3] == a


def test_standard_normals_moments_and_distribution():
    z = krng.standard_normals(np.arange(2000, dtype=np.uint64), 50).ravel()
    n = z.size
    assert abs(z.mean()) < 4.0 / np.sqrt(n)
    assert abs(z.var() - 1.0) < 4.0 * np.sqrt(2.0 / n)
    assert stats.kstest(z, "norm").pvalue > 1e-3
    with pytest.raises(ValueError):
        krng.standard_normals(np.uint64(1), 3)


def test_complex_fading_unit_variance():
    f = krng.complex_fading(np.arange(4000, dtype=np.uint64), 8)
    p = (np.abs(f) ** 2).ravel()
    assert abs(p.mean() - 1.0) < 4.0 / np.sqrt(p.size)
    # real and imaginary parts each N(0, 1/2)
    assert abs(np.var(f.real) - 0.5) < 0.01
    assert abs(np.var(f.imag) - 0.5) < 0.01


def test_fading_streams_are_uncorrelated_across_links():
    f1 = krng.complex_fading(krng.pair_seed(5, 0, np.arange(3000)), 4)
    f2 = krng.complex_fading(krng.pair_seed(5, 1, np.arange(3000)), 4)
    corr = np.vdot(f1.ravel(), f2.ravel()) / f1.size
    assert abs(corr) < 4.0 / np.sqrt(f1.size)


# ---------------------------------------------------------------- channels


def test_draw_channel_deterministic_and_scaled():
    m = PathLossModel()
    h1 = draw_channel(m, (0.0, 0.0), (100.0, 0.0), 4, seed=123)
    h2 = draw_channel(m, (0.0, 0.0), (100.0, 0.0), 4, seed=123)
    assert np.array_equal(h1, h2)
    assert h1.shape == (4,)
    # statistical power check: E|h_k|^2 = beta(r)
    seeds = np.arange(3000)
    pw = np.array([np.mean(np.abs(draw_channel(m, (0.0, 0.0), (100.0, 0.0),
                                               2, int(s))) ** 2)
                   for s in seeds[:300]])
    beta = m.gain(100.0)
    assert abs(pw.mean() / beta - 1.0) < 4.0 / np.sqrt(300 * 2)


def test_draw_channel_rejects_bad_m():
    with pytest.raises(ValueError):
        draw_channel(PathLossModel(), (0.0, 0.0), (1.0, 0.0), 0, seed=1)


def _small_deployment():
    w = Window.centered_square(500.0)
    bs = np.array([[0.0, 0.0], [200.0, 0.0], [0.0, 250.0], [-150.0, -50.0]])
    users = np.array([[10.0, 5.0], [180.0, 20.0], [-120.0, -40.0],
                      [30.0, 200.0], [90.0, 90.0]])
    return Deployment(bs_xy=bs, user_xy=users, window=w,
                      bs_intensity=4 / w.area(), user_intensity=5 / w.area())


def test_build_channel_set_block_structure():
    dep = _small_deployment()
    model = PathLossModel()
    cluster = Cluster(member_bs=np.array([2, 0]), center=(10.0, 5.0),
                      radius=300.0, scheme="user_centric")
    cs = build_channel_set(dep, cluster, [0, 4, 1], model, m=4, seed=77)
    assert cs.h_own.shape == (8,)
    assert cs.h_others.shape == (8, 2)
    assert np.array_equal(cs.cluster_bs, [0, 2])  # ascending BS order
    # each block reproduces the standalone per-link draw exactly
    for slot, b in enumerate(cs.cluster_bs):
        r = np.hypot(*(dep.bs_xy[b] - dep.user_xy[0]))
        expect = np.sqrt(model.gain(r)) * krng.complex_fading(
            krng.pair_seed(77, b, 0), 4)[0]
        assert np.allclose(cs.h_own[4 * slot:4 * slot + 4], expect,
                           rtol=0, atol=0)


def test_channel_reciprocity_across_clusters():
    # the link (b=0, u=1) must produce identical fading whether user 1 is
    # served by the cluster or is an out-of-cluster interferer
    dep = _small_deployment()
    model = PathLossModel()
    cluster = Cluster(member_bs=np.array([0]), center=(0.0, 0.0),
                      radius=300.0, scheme="user_centric")
    served = build_channel_set(dep, cluster, [1], model, m=4, seed=55)
    other = build_channel_set(dep, cluster, [0], model, m=4, seed=55)
    assert np.array_equal(served.h_own, other.cross_vector(1))


def test_build_channel_set_validation():
    dep = _small_deployment()
    empty = Cluster(member_bs=np.zeros(0, dtype=int), center=(0.0, 0.0),
                    radius=10.0, scheme="user_centric")
    with pytest.raises(ValueError):
        build_channel_set(dep, empty, [0], PathLossModel(), m=4, seed=1)
    ok = Cluster(member_bs=np.array([0]), center=(0.0, 0.0), radius=10.0,
                 scheme="user_centric")
    with pytest.raises(ValueError):
        build_channel_set(dep, ok, [], PathLossModel(), m=4, seed=1)
