"""System-trial simulator: determinism, law checks, scheme comparisons."""

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import ks_2samp

from netmimo import geometry
from netmimo import montecarlo as mc
from netmimo.analytic_rate import NetworkParams
from netmimo.gamma_approx import varpi
from netmimo.propagation import PathLossModel

LAM = 4e-6


def params_for(bbar, **kw):
    r = float(np.sqrt(bbar / (np.pi * LAM)))
    return NetworkParams(cluster_radius=r, **kw)


def se(x):
    return x.std(ddof=1) / np.sqrt(len(x))


# ------------------------------------------------------------- containers


def test_trial_config_rejects_bad_fields():
    p = params_for(4.0)
    with pytest.raises(ValueError):
        mc.TrialConfig(params=p, n_trials=0)
    with pytest.raises(ValueError):
        mc.TrialConfig(params=p, seed=-1)
    with pytest.raises(ValueError):
        mc.TrialConfig(params=p, cluster_cardinality="bernoulli")
    with pytest.raises(ValueError):
        mc.TrialConfig(params=p, window_multiplier=0.5)


def test_empirical_stats_summary_contract():
    rng = np.random.default_rng(3)
    x = rng.gamma(2.0, 1.5, 400)
    st = mc.EmpiricalStats.from_samples(x)
    vals, probs = st.cdf()
    assert np.all(np.diff(vals) >= 0) and np.all(np.diff(probs) > 0)
    assert probs[0] > 0 and probs[-1] == pytest.approx(1.0)
    assert st.mean == pytest.approx(x.mean())
    assert st.stderr == pytest.approx(x.std(ddof=1) / 20.0)
    assert st.percentile(10) == pytest.approx(np.percentile(x, 10))
    with pytest.raises(ValueError):
        mc.EmpiricalStats.from_samples([])


# ------------------------------------------------------------ determinism


@pytest.mark.parametrize("scheme", [geometry.USER_CENTRIC, geometry.DISJOINT])
def test_fixed_seed_reproduces_every_column(scheme):
    cfg = mc.TrialConfig(params=params_for(4.0), n_trials=4, seed=17)
    a = mc.simulate(cfg, scheme)
    b = mc.simulate(cfg, scheme)
    for d in ("ul", "dl"):
        for col in ("offset", "signal_power", "interference_power", "sinr",
                    "rate", "interference_radius_rule", "zf_residual"):
            va, vb = getattr(a[d], col), getattr(b[d], col)
            assert np.array_equal(va, vb, equal_nan=True), (d, col)


def test_trials_are_independent_of_schedule():
    # row t of a batch equals a standalone run of trial t
    cfg = mc.TrialConfig(params=params_for(4.0), n_trials=4, seed=23)
    batch = mc.simulate(cfg, geometry.USER_CENTRIC)
    solo = mc.run_user_centric_trial(cfg, 2)
    assert solo["ul"].rate[0] == batch["ul"].rate[2]
    assert solo["dl"].interference_power[0] == batch["dl"].interference_power[2]


# ------------------------------------------------------------- edge cases


def test_single_bs_network_has_no_interference(monkeypatch):
    # one BS, so every scheduled user shares the typical user's cluster and
    # zero-forcing removes everything but numerical residue
    bs = np.array([[120.0, -60.0]])
    monkeypatch.setattr(mc.geometry, "sample_ppp",
                        lambda intensity, window, seed: bs.copy())
    cfg = mc.TrialConfig(params=params_for(4.0), n_trials=3, seed=5)
    res = mc.simulate(cfg, geometry.USER_CENTRIC)
    for d in ("ul", "dl"):
        assert np.all(res[d].interference_power < 1e-12)
        assert np.all(res[d].interference_radius_rule < 1e-12)
        assert np.all(res[d].signal_power > 0)
        assert np.all(res[d].cluster_size == 1)


def test_typical_offset_validation():
    cfg = mc.TrialConfig(params=params_for(4.0), n_trials=1, seed=1)
    part = geometry.HexPartition.from_disk_radius(cfg.params.cluster_radius)
    outside = (1.2 * part.lattice_pitch, 0.0)
    with pytest.raises(ValueError, match="central hexagon"):
        mc.simulate(cfg, geometry.DISJOINT, typical_offset=outside)
    with pytest.raises(ValueError, match="window center"):
        mc.simulate(cfg, geometry.USER_CENTRIC, typical_offset=(0.0, 0.0))
    with pytest.raises(ValueError, match="unknown scheme"):
        mc.simulate(cfg, "strip")


# ---------------------------------------------------------------- columns


def test_result_columns_are_mutually_consistent():
    cfg = mc.TrialConfig(params=params_for(4.0), n_trials=25, seed=29)
    p = cfg.params
    for scheme in (geometry.USER_CENTRIC, geometry.DISJOINT):
        res = mc.simulate(cfg, scheme)
        for d in ("ul", "dl"):
            r = res[d]
            want = r.signal_power / (r.interference_power + p.noise(d))
            np.testing.assert_allclose(r.sinr, want, rtol=1e-12)
            np.testing.assert_allclose(
                r.rate, np.log2(1.0 + r.sinr / p.sinr_gap), rtol=1e-12)
            assert np.all(r.interference_power >= 0)
            assert np.all(r.zf_residual < 1e-8)
        if scheme == geometry.USER_CENTRIC:
            assert np.all(res["ul"].offset == 0)
            # the distance cutoff can only drop interferers that the exact
            # membership rule keeps (up to nulled-beam residue)
            slack = 1e-10 * (res["dl"].signal_power + 1.0)
            assert np.all(res["dl"].interference_radius_rule
                          <= res["dl"].interference_power + slack)
        else:
            assert np.all(np.isnan(res["dl"].interference_radius_rule))
            assert np.all(res["ul"].offset >= 0)


# -------------------------------------------------------------- law checks


def test_signal_mean_tracks_beamforming_gain_model():
    # flat-ish path loss keeps the trial variance and the isotropy error of
    # the Gamma signal model small enough for a 5% mean comparison
    pl = PathLossModel(d0=800.0, alpha=3.76)
    p = params_for(3.0, path_loss=pl)
    cfg = mc.TrialConfig(params=p, n_trials=3000, seed=21,
                         cluster_cardinality=mc.FIXED_B)
    sig = mc.simulate(cfg, geometry.USER_CENTRIC)["ul"].signal_power
    ebeta, _ = integrate.quad(lambda r: pl.gain(r) * r * 2.0 / p.cluster_radius ** 2,
                              0.0, p.cluster_radius)
    pred = varpi(p.antennas, p.users_per_bs, p.mean_cluster_size) * 3.0 * ebeta
    assert abs(sig.mean() / pred - 1.0) < 0.05


def test_centered_disjoint_user_matches_user_centric_signal():
    # a user at the cluster center is served by a same-area BS set in both
    # schemes, so its signal power must follow the same law
    p = params_for(4.0)
    n = 700
    uc = mc.simulate(mc.TrialConfig(params=p, n_trials=n, seed=31),
                     geometry.USER_CENTRIC)
    dj = mc.simulate(mc.TrialConfig(params=p, n_trials=n, seed=32),
                     geometry.DISJOINT, typical_offset=(0.0, 0.0))
    ks = ks_2samp(uc["ul"].signal_power, dj["ul"].signal_power)
    assert ks.pvalue > 0.01


def test_cluster_edge_user_sees_dominating_dl_interference():
    p = params_for(4.0)
    part = geometry.HexPartition.from_disk_radius(p.cluster_radius)
    edge = (0.92 * 0.5 * part.lattice_pitch, 0.0)
    n = 500
    ctr = mc.simulate(mc.TrialConfig(params=p, n_trials=n, seed=33),
                      geometry.DISJOINT, typical_offset=(0.0, 0.0))
    edg = mc.simulate(mc.TrialConfig(params=p, n_trials=n, seed=34),
                      geometry.DISJOINT, typical_offset=edge)
    qs = [10, 25, 50, 75, 90]
    cq = np.percentile(ctr["dl"].interference_power, qs)
    eq = np.percentile(edg["dl"].interference_power, qs)
    assert np.all(eq > cq)


def test_window_growth_stays_within_noise():
    p = params_for(3.0)
    a = mc.simulate(mc.TrialConfig(params=p, n_trials=800, seed=35,
                                   window_multiplier=4.0),
                    geometry.USER_CENTRIC)
    b = mc.simulate(mc.TrialConfig(params=p, n_trials=800, seed=35,
                                   window_multiplier=8.0),
                    geometry.USER_CENTRIC)
    for d in ("ul", "dl"):
        gap = abs(a[d].rate.mean() - b[d].rate.mean())
        assert gap < np.hypot(se(a[d].rate), se(b[d].rate))


def test_cardinality_modes_agree():
    p = params_for(4.0)
    pois = mc.simulate(mc.TrialConfig(params=p, n_trials=800, seed=36),
                       geometry.USER_CENTRIC)
    fixd = mc.simulate(mc.TrialConfig(params=p, n_trials=800, seed=36,
                                      cluster_cardinality=mc.FIXED_B),
                       geometry.USER_CENTRIC)
    for d in ("ul", "dl"):
        m1, m2 = pois[d].rate.mean(), fixd[d].rate.mean()
        tol = 0.05 + 2.0 * np.hypot(se(pois[d].rate) / m1,
                                    se(fixd[d].rate) / m2)
        assert abs(m1 / m2 - 1.0) < tol


# --------------------------------------------------------------- baselines


def test_baseline_orderings():
    cfg6 = mc.TrialConfig(params=params_for(6.0), n_trials=400, seed=41)
    base = mc.run_baselines(cfg6)
    single, isolated = base["single_cell"], base["isolated"]
    for d in ("ul", "dl"):
        assert np.all(isolated[d].interference_power == 0)
        assert isolated[d].rate.mean() > single[d].rate.mean()
    assert {c.provenance for c in base["curves"]} == {"single-cell",
                                                      "isolated-cell"}
    uc6 = mc.simulate(cfg6, geometry.USER_CENTRIC)
    for d in ("ul", "dl"):
        assert isolated[d].rate.mean() > uc6[d].rate.mean()
    cfg2 = mc.TrialConfig(params=params_for(2.0), n_trials=400, seed=43)
    uc2 = mc.simulate(cfg2, geometry.USER_CENTRIC)
    base2 = mc.run_baselines(cfg2)
    assert base2["single_cell"]["dl"].rate.mean() < uc2["dl"].rate.mean()


def test_sweep_contract():
    cfg = mc.TrialConfig(params=params_for(2.0), n_trials=150, seed=47)
    curves, stats = mc.sweep(cfg, [2.0, 4.0])
    assert len(curves) == 8  # scheme x cardinality x direction
    assert ({c.provenance for c in curves}
            == {"montecarlo-poissonB", "montecarlo-fixedB"})
    for c in curves:
        assert c.stderr is not None and np.all(c.stderr > 0)
        assert list(c.bbar) == [2.0, 4.0]
        # larger clusters cannot lose rate beyond sampling noise
        assert c.rate[1] > c.rate[0] - 2.0 * np.hypot(c.stderr[0], c.stderr[1])
    assert set(stats) == {(s, d, m, b)
                          for s in (geometry.USER_CENTRIC, geometry.DISJOINT)
                          for d in ("ul", "dl")
                          for m in (mc.POISSON_B, mc.FIXED_B)
                          for b in (2.0, 4.0)}
    with pytest.raises(ValueError):
        mc.sweep(cfg, [0.0, 2.0])
