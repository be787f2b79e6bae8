"""System-level trial simulator for the typical user's rate.

One trial draws a BS process and a scheduled-user population on a square
window, places the typical user at the window center (user-centric) or
uniformly inside the central hexagon (disjoint), forms every user's
serving cluster and zero-forcing beam, and records the typical user's
exact signal and interference powers in both directions.

Construction rules:
  * Users associate with the nearest BS in both schemes. Each BS
    schedules exactly users_per_bs users, sampled uniformly in its
    Voronoi cell, so every cluster serves K users per member BS by
    construction and the two schemes share the same user field law.
  * The typical user takes over one slot of its host BS, which keeps the
    per-BS load exact; the displaced draw is discarded.
  * The serving set is the radius-R ball around the user (user-centric)
    or the hexagon cluster its host BS belongs to (disjoint); near a
    hexagon border the latter can sit in the neighboring hexagon.
  * Downlink interference uses the exact membership rule: a beam serving
    user j interferes unless some BS of j's cluster schedules the typical
    user. The radius-based interferer rule used by the analytic model is
    measured alongside (user-centric trials) but never enforced.
  * A user whose cluster ball holds no BS falls back to nearest-BS
    service.

Per-trial RNG streams derive from (seed, trial_index), so aggregation is
order-independent and trials can run on any schedule.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from . import geometry
from ._kernels import rng as _rng
from ._kernels import solve_trial_groups
from .analytic_rate import NetworkParams, RateCurve
from .propagation import build_channel_set
from .zfbf import zf_beamformer

POISSON_B = "poisson"
FIXED_B = "fixed"
_GEO_TAG = 101
_FADE_TAG = 202
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class TrialConfig:
    """Simulation run description.

    cluster_cardinality "poisson" keeps the raw BS count in the typical
    cluster region; "fixed" conditions that region (disk around the
    typical user, or the central hexagon) to hold exactly round(B_bar)
    BSs. window_multiplier sets the measured guard region: BSs are drawn
    on a square of half-side (multiplier + 1) * R.
    """

    params: NetworkParams = NetworkParams()
    n_trials: int = 1000
    seed: int = 1
    cluster_cardinality: str = POISSON_B
    window_multiplier: float = 6.0
    engine: str = None

    def __post_init__(self):
        if not (isinstance(self.n_trials, int) and self.n_trials >= 1):
            raise ValueError("n_trials must be a positive integer")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ValueError("seed must be a nonnegative integer")
        if self.cluster_cardinality not in (POISSON_B, FIXED_B):
            raise ValueError("cluster_cardinality must be 'poisson' or 'fixed'")
        if not self.window_multiplier >= 1.0:
            raise ValueError("window multiplier below 1 leaves no guard region")


@dataclass
class TrialResult:
    """Typical-user samples for one scheme and direction, one row per trial.

    offset is the distance to the serving cluster's center (zero for
    user-centric rows). interference_power is the exact inter-beam sum;
    interference_radius_rule applies the analytic model's distance cutoff
    instead and is NaN where that rule has no counterpart (disjoint rows).
    fallback marks trials where the serving set degenerated: an empty
    cluster ball (user-centric) or a host BS outside the central hexagon,
    so the typical user was adopted by a neighboring cluster (disjoint).
    """

    scheme: str
    direction: str
    offset: np.ndarray
    signal_power: np.ndarray
    interference_power: np.ndarray
    sinr: np.ndarray
    rate: np.ndarray
    interference_radius_rule: np.ndarray = None
    zf_residual: np.ndarray = None
    cluster_size: np.ndarray = None
    fallback: np.ndarray = None

    def __post_init__(self):
        n = len(self.rate)
        for name in ("offset", "signal_power", "interference_power", "sinr"):
            if len(getattr(self, name)) != n:
                raise ValueError("result columns must align")
        if np.any(self.rate < 0):
            raise ValueError("rates must be nonnegative")

    @property
    def n_trials(self):
        return len(self.rate)


@dataclass(frozen=True)
class EmpiricalStats:
    """Sample summary: mean with standard error and the empirical CDF."""

    sorted_samples: np.ndarray
    mean: float
    stderr: float

    @classmethod
    def from_samples(cls, samples):
        x = np.sort(np.asarray(samples, dtype=float))
        if x.size == 0:
            raise ValueError("need at least one sample")
        se = float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0
        return cls(sorted_samples=x, mean=float(x.mean()), stderr=se)

    def cdf(self):
        """(values, probabilities), both non-decreasing."""
        n = self.sorted_samples.size
        return self.sorted_samples, np.arange(1, n + 1) / n

    def percentile(self, q):
        return float(np.percentile(self.sorted_samples, q))


def _trial_streams(cfg, trial_index):
    geo = np.random.default_rng((cfg.seed, int(trial_index), _GEO_TAG))
    fade = int(_rng.pair_seed(cfg.seed, int(trial_index), _FADE_TAG))
    return geo, fade


def _take_arrivals(sched_xy, filled, k, pts, owner):
    # route a batch into open slots, first-come within the batch
    idx = np.flatnonzero(owner >= 0)
    if idx.size == 0:
        return
    order = idx[np.argsort(owner[idx], kind="stable")]
    grp = owner[order]
    starts = np.flatnonzero(np.r_[True, grp[1:] != grp[:-1]])
    rank = np.arange(grp.size) - np.repeat(
        starts, np.diff(np.r_[starts, grp.size]))
    take = rank < (k - filled[grp])
    tgt = grp[take]
    sched_xy[tgt, filled[tgt] + rank[take]] = pts[order[take]]
    filled += np.bincount(tgt, minlength=filled.size)


def _fill_slots(geo, n_bs, k, owner_of, half):
    """Exactly k users per BS, uniform within each BS's Voronoi cell.

    Batched rejection: draw uniform points on the window, route each to
    its owning BS, keep arrivals while a BS still has open slots. The
    kept points are conditionally uniform in each cell because selection
    never looks at position within the cell. Tiny cells (ownership
    fraction ~1e-5 of the window) make late rounds escalate the draw
    geometrically up to a 2^21 batch cap.
    """
    sched_xy = np.empty((n_bs, k, 2))
    filled = np.zeros(n_bs, dtype=np.intp)
    n_draw = 0
    for rnd in range(60):
        deficit = int((k - filled).sum())
        if deficit == 0:
            return sched_xy
        n_draw = min(max(4 * deficit, 2 * n_draw, 1024), 1 << 21)
        pts = geo.uniform(-half, half, (n_draw, 2))
        _take_arrivals(sched_xy, filled, k, pts, owner_of(pts))
    raise RuntimeError("user scheduling failed to fill every BS slot")


def _condition_disk(geo, bs_xy, radius, want):
    # exact PPP conditioning: given the in-region count, points are iid
    # uniform, so resample the region with the requested count
    keep = bs_xy[np.hypot(bs_xy[:, 0], bs_xy[:, 1]) > radius]
    r = radius * np.sqrt(geo.uniform(0.0, 1.0, want))
    th = geo.uniform(0.0, 2.0 * np.pi, want)
    disk = np.column_stack([r * np.cos(th), r * np.sin(th)])
    return np.vstack([keep, disk])


def _condition_hex(geo, bs_xy, part, want):
    ids = geometry.hex_assign(bs_xy, part)
    keep = bs_xy[np.any(ids != 0, axis=1)]
    inside = geometry.sample_in_hexagon(part, (0, 0), want, geo)
    return np.vstack([keep, inside])


def _stacked_batch(bs_xy, bs_ids, user_xy, user_uids, m, model, master):
    """Channels from one BS set to many users, stacked per user.

    Returns (amp, fad): amp is (B, U) path amplitudes, fad is (B, U, m)
    unit fading, both keyed by the same (BS, user) streams the kernel uses.
    """
    b, u = len(bs_ids), len(user_uids)
    seeds = _rng.pair_seed(master, np.repeat(bs_ids, u), np.tile(user_uids, b))
    fad = _rng.complex_fading(seeds, m).reshape(b, u, m)
    d = np.hypot(bs_xy[bs_ids, 0][:, None] - user_xy[user_uids, 0][None, :],
                 bs_xy[bs_ids, 1][:, None] - user_xy[user_uids, 1][None, :])
    return np.sqrt(model.gain(d)), fad


def _beam_hits(w, amp, fad):
    # |w^H g_u|^2 for every user column of a stacked batch
    wb = w.reshape(amp.shape[0], -1)
    dots = np.einsum("bm,bum->bu", wb.conj(), fad)
    return np.abs((amp * dots).sum(axis=0)) ** 2


def _trial(cfg, trial_index, scheme, typical_offset=None):
    p = cfg.params
    radius, k, m = p.cluster_radius, p.users_per_bs, p.antennas
    geo, fade = _trial_streams(cfg, trial_index)
    half = (cfg.window_multiplier + 1.0) * radius
    window = geometry.Window.centered_square(half)
    bs_xy = geometry.sample_ppp(p.bs_intensity, window, geo)
    want_fixed = int(round(p.mean_cluster_size))

    if scheme == geometry.USER_CENTRIC:
        if typical_offset is not None:
            raise ValueError("user-centric trials pin the typical user at "
                             "the window center")
        if cfg.cluster_cardinality == FIXED_B:
            bs_xy = _condition_disk(geo, bs_xy, radius, want_fixed)
        if len(bs_xy) == 0:
            raise geometry.EmptyNetworkError("no BSs landed in the window")
        tree = cKDTree(bs_xy)
        sched_xy = _fill_slots(geo, len(bs_xy), k,
                               lambda pts: tree.query(pts)[1], half)
        typ_xy = np.zeros(2)
        host = int(tree.query(typ_xy)[1])
        members = np.sort(np.asarray(tree.query_ball_point(typ_xy, radius),
                                     dtype=np.intp))
        fallback = members.size == 0
        if fallback:
            members = np.array([host], dtype=np.intp)
        cluster = geometry.Cluster(member_bs=members, center=(0.0, 0.0),
                                   radius=radius, scheme=scheme)
        offset = 0.0
    else:
        part = geometry.HexPartition.from_disk_radius(radius)
        if cfg.cluster_cardinality == FIXED_B:
            bs_xy = _condition_hex(geo, bs_xy, part, want_fixed)
        if len(bs_xy) == 0:
            raise geometry.EmptyNetworkError("no BSs landed in the window")
        tree = cKDTree(bs_xy)
        sched_xy = _fill_slots(geo, len(bs_xy), k,
                               lambda pts: tree.query(pts)[1], half)
        if typical_offset is None:
            typ_xy = geometry.sample_in_hexagon(part, (0, 0), 1, geo)[0]
        else:
            typ_xy = np.asarray(typical_offset, dtype=float).reshape(2)
            if np.any(geometry.hex_assign(typ_xy[None, :], part) != 0):
                raise ValueError("typical offset falls outside the central "
                                 "hexagon")
        # association is nearest-BS; the user is served by the cluster its
        # host belongs to, which near a border can be the neighboring
        # hexagon's cluster (also covers an empty central hexagon)
        host = int(tree.query(typ_xy)[1])
        clusters = geometry.disjoint_clusters(bs_xy, part)
        serving = next(c for c in clusters if host in c.member_bs)
        cluster = serving
        members = np.asarray(serving.member_bs, dtype=np.intp)
        offset = float(np.hypot(typ_xy[0] - serving.center[0],
                                typ_xy[1] - serving.center[1]))
        fallback = bool(np.any(geometry.hex_assign(bs_xy[host][None, :],
                                                   part) != 0))

    n_bs = len(bs_xy)
    user_xy = np.vstack([sched_xy.reshape(-1, 2), typ_xy[None, :]])
    typ_uid = n_bs * k
    sched_uid = np.arange(n_bs * k, dtype=np.int64).reshape(n_bs, k)
    sched_uid[host, 0] = typ_uid

    served = sched_uid[members].ravel()
    cs = build_channel_set(
        geometry.Deployment(bs_xy=bs_xy, user_xy=user_xy,
                            window=geometry.Window.centered_square(
                                half + 3.0 * radius),
                            bs_intensity=p.bs_intensity,
                            user_intensity=p.user_intensity),
        cluster, [typ_uid] + [int(u) for u in served if u != typ_uid],
        p.path_loss, m, fade)
    w = zf_beamformer(cs.h_own, cs.h_others)
    signal = float(abs(np.vdot(w, cs.h_own)) ** 2)

    interferers = sched_uid.ravel()
    interferers = interferers[interferers != typ_uid]
    bs_sorted = np.sort(members).astype(np.int64)
    amp, fad = _stacked_batch(bs_xy, bs_sorted, user_xy, interferers, m,
                              p.path_loss, fade)
    ul_powers = _beam_hits(w, amp, fad)
    co_served = np.isin(interferers, served)
    ul_exact = float(ul_powers.sum())
    dist_to_typ = np.hypot(user_xy[interferers, 0] - typ_xy[0],
                           user_xy[interferers, 1] - typ_xy[1])

    owner = interferers // k
    if scheme == geometry.USER_CENTRIC:
        balls = tree.query_ball_point(user_xy[interferers], radius)
        nearest = tree.query(user_xy[interferers])[1]
        bs_lists, tcol, hosts_cluster = [], [], []
        for i, lst in enumerate(balls):
            mem = (np.sort(np.asarray(lst, dtype=np.int64)) if lst
                   else np.array([nearest[i]], dtype=np.int64))
            bs_lists.append(mem)
            pos = int(np.searchsorted(mem, owner[i]))
            tcol.append(pos * k + int(interferers[i] % k))
            # exact membership: the typical user is scheduled only at its
            # host BS, so "some BS in this cluster serves it" == host in mem
            j = int(np.searchsorted(mem, host))
            hosts_cluster.append(j < mem.size and mem[j] == host)
        bs_indptr = np.zeros(len(bs_lists) + 1, dtype=np.int64)
        bs_indptr[1:] = np.cumsum([len(x) for x in bs_lists])
        bs_idx = (np.concatenate(bs_lists) if bs_lists
                  else np.zeros(0, dtype=np.int64))
        user_indptr = bs_indptr * k
        user_idx = sched_uid[bs_idx].ravel()
        tcol = np.asarray(tcol, dtype=np.int64)
        own, _ = solve_trial_groups(bs_xy, user_xy, bs_indptr, bs_idx,
                                    user_indptr, user_idx, tcol, typ_uid,
                                    fade, m, p.path_loss.d0,
                                    p.path_loss.alpha, engine=cfg.engine)
        nulled = np.asarray(hosts_cluster, dtype=bool)
        dl_exact = float(own.sum())
        dl_alt = float(own[dist_to_typ > radius].sum())
        ul_alt = float(ul_powers[dist_to_typ > radius].sum())
        resid_dl = float(own[nulled].max() / signal) if nulled.any() else 0.0
    else:
        group_clusters = [c for c in clusters]
        bs_lists = [np.asarray(c.member_bs, dtype=np.int64)
                    for c in group_clusters]
        tcol = np.full(len(bs_lists), -1, dtype=np.int64)
        for i, c in enumerate(group_clusters):
            if c is serving:
                pos = int(np.searchsorted(bs_lists[i], host))
                tcol[i] = pos * k  # the typical user sits in slot 0
        bs_indptr = np.zeros(len(bs_lists) + 1, dtype=np.int64)
        bs_indptr[1:] = np.cumsum([len(x) for x in bs_lists])
        bs_idx = np.concatenate(bs_lists)
        user_indptr = bs_indptr * k
        user_idx = sched_uid[bs_idx].ravel()
        own, others = solve_trial_groups(bs_xy, user_xy, bs_indptr, bs_idx,
                                         user_indptr, user_idx, tcol,
                                         typ_uid, fade, m, p.path_loss.d0,
                                         p.path_loss.alpha, engine=cfg.engine)
        dl_exact = float(others.sum())
        dl_alt = float("nan")
        ul_alt = float("nan")
        serving_i = next(i for i, c in enumerate(group_clusters)
                         if c is serving)
        resid_dl = float(others[serving_i] / signal)

    resid_ul = (float(ul_powers[co_served].max() / signal)
                if co_served.any() else 0.0)
    return {"signal": signal, "ul": ul_exact, "dl": dl_exact,
            "ul_alt": ul_alt, "dl_alt": dl_alt, "offset": offset,
            "residual": max(resid_ul, resid_dl),
            "cluster_size": int(members.size), "fallback": bool(fallback)}


def _results_from_rows(cfg, scheme, rows):
    p = cfg.params
    cols = {key: np.array([r[key] for r in rows]) for key in rows[0]}
    out = {}
    for direction, interf, alt in (("ul", cols["ul"], cols["ul_alt"]),
                                   ("dl", cols["dl"], cols["dl_alt"])):
        sinr = cols["signal"] / (interf + p.noise(direction))
        out[direction] = TrialResult(
            scheme=scheme, direction=direction, offset=cols["offset"],
            signal_power=cols["signal"], interference_power=interf,
            sinr=sinr, rate=np.log2(1.0 + sinr / p.sinr_gap),
            interference_radius_rule=alt, zf_residual=cols["residual"],
            cluster_size=cols["cluster_size"], fallback=cols["fallback"])
    return out


def run_user_centric_trial(cfg, trial_index):
    """One user-centric trial: UL and DL rows for the typical user."""
    rows = [_trial(cfg, trial_index, geometry.USER_CENTRIC)]
    return _results_from_rows(cfg, geometry.USER_CENTRIC, rows)


def run_disjoint_trial(cfg, trial_index, typical_offset=None):
    """One disjoint trial; typical_offset pins the user (tests), default
    samples it uniformly in the central hexagon."""
    rows = [_trial(cfg, trial_index, geometry.DISJOINT, typical_offset)]
    return _results_from_rows(cfg, geometry.DISJOINT, rows)


def simulate(cfg, scheme, typical_offset=None):
    """cfg.n_trials independent trials; {'ul': TrialResult, 'dl': ...}."""
    if scheme not in (geometry.USER_CENTRIC, geometry.DISJOINT):
        raise ValueError(f"unknown scheme: {scheme!r}")
    rows = [_trial(cfg, t, scheme, typical_offset)
            for t in range(cfg.n_trials)]
    return _results_from_rows(cfg, scheme, rows)


def _single_cell_trial(cfg, trial_index):
    """Nearest-BS service, no cooperation: every other BS interferes."""
    p = cfg.params
    k, m = p.users_per_bs, p.antennas
    geo, fade = _trial_streams(cfg, trial_index)
    half = (cfg.window_multiplier + 1.0) * p.cluster_radius
    window = geometry.Window.centered_square(half)
    bs_xy = geometry.sample_ppp(p.bs_intensity, window, geo)
    if len(bs_xy) == 0:
        raise geometry.EmptyNetworkError("no BSs landed in the window")
    tree = cKDTree(bs_xy)
    sched_xy = _fill_slots(geo, len(bs_xy), k,
                           lambda pts: tree.query(pts)[1], half)
    typ_xy = np.zeros(2)
    host = int(tree.query(typ_xy)[1])
    n_bs = len(bs_xy)
    user_xy = np.vstack([sched_xy.reshape(-1, 2), typ_xy[None, :]])
    typ_uid = n_bs * k
    sched_uid = np.arange(n_bs * k, dtype=np.int64).reshape(n_bs, k)
    sched_uid[host, 0] = typ_uid

    members = np.array([host], dtype=np.intp)
    cluster = geometry.Cluster(member_bs=members, center=(0.0, 0.0),
                               radius=p.cluster_radius,
                               scheme=geometry.USER_CENTRIC)
    served = sched_uid[members].ravel()
    cs = build_channel_set(
        geometry.Deployment(bs_xy=bs_xy, user_xy=user_xy, window=window,
                            bs_intensity=p.bs_intensity,
                            user_intensity=p.user_intensity),
        cluster, [typ_uid] + [int(u) for u in served if u != typ_uid],
        p.path_loss, m, fade)
    w = zf_beamformer(cs.h_own, cs.h_others)
    signal = float(abs(np.vdot(w, cs.h_own)) ** 2)

    interferers = sched_uid.ravel()
    interferers = interferers[interferers != typ_uid]
    amp, fad = _stacked_batch(bs_xy, members.astype(np.int64), user_xy,
                              interferers, m, p.path_loss, fade)
    ul_exact = float(_beam_hits(w, amp, fad).sum())

    others_bs = np.arange(n_bs, dtype=np.int64)
    others_bs = others_bs[others_bs != host]
    bs_indptr = np.arange(len(others_bs) + 1, dtype=np.int64)
    user_indptr = bs_indptr * k
    tcol = np.full(len(others_bs), -1, dtype=np.int64)
    _, others = solve_trial_groups(bs_xy, user_xy, bs_indptr, others_bs,
                                   user_indptr, sched_uid[others_bs].ravel(),
                                   tcol, typ_uid, fade, m, p.path_loss.d0,
                                   p.path_loss.alpha, engine=cfg.engine)
    return {"signal": signal, "ul": ul_exact, "dl": float(others.sum()),
            "ul_alt": float("nan"), "dl_alt": float("nan"), "offset": 0.0,
            "residual": 0.0, "cluster_size": 1, "fallback": False}


def run_baselines(cfg):
    """Single-cell (B = 1, everyone else interferes) and isolated-cell
    (same service, zero interference) references.

    Returns {"single_cell": {...}, "isolated": {...}, "curves": [...]};
    the dicts hold per-direction TrialResults, the curves carry one
    RateCurve per baseline and direction at the configured cluster size.
    """
    p = cfg.params
    rows = [_single_cell_trial(cfg, t) for t in range(cfg.n_trials)]
    single = _results_from_rows(cfg, "single_cell", rows)
    iso_rows = [dict(r, ul=0.0, dl=0.0) for r in rows]
    isolated = _results_from_rows(cfg, "isolated", iso_rows)
    curves = []
    for name, res, prov in (("single_cell", single, "single-cell"),
                            ("isolated", isolated, "isolated-cell")):
        for direction in ("ul", "dl"):
            st = EmpiricalStats.from_samples(res[direction].rate)
            curves.append(RateCurve(scheme=name, direction=direction,
                                    bbar=[p.mean_cluster_size],
                                    rate=[st.mean], provenance=prov,
                                    stderr=[st.stderr]))
    return {"single_cell": single, "isolated": isolated, "curves": curves}


def point_config(cfg, bbar, mode):
    """Config for one sweep point: resolved radius, cardinality mode, and a
    sub-seed derived only from (seed, bbar, mode) so points can run in any
    order or process without changing results."""
    bbar = float(bbar)
    if not bbar > 0:
        raise ValueError("mean cluster sizes must be positive")
    mode_tag = 1 if mode == POISSON_B else 2
    return replace(cfg, params=cfg.params.with_mean_cluster_size(bbar),
                   cluster_cardinality=mode,
                   seed=int(_rng.pair_seed(cfg.seed, int(round(1000 * bbar)),
                                           mode_tag)))


def sweep(cfg, bbar_list, schemes=(geometry.USER_CENTRIC, geometry.DISJOINT)):
    """Rate-vs-cluster-size curves under both cardinality modes.

    Returns (curves, stats): curves is a list of RateCurve with standard
    errors; stats maps (scheme, direction, mode, bbar) -> EmpiricalStats.
    """
    bbars = [float(b) for b in bbar_list]
    if any(b <= 0 for b in bbars):
        raise ValueError("mean cluster sizes must be positive")
    stats = {}
    curves = []
    for scheme in schemes:
        for mode in (POISSON_B, FIXED_B):
            per_dir = {"ul": ([], []), "dl": ([], [])}
            for b in bbars:
                res = simulate(point_config(cfg, b, mode), scheme)
                for direction in ("ul", "dl"):
                    st = EmpiricalStats.from_samples(res[direction].rate)
                    stats[(scheme, direction, mode, b)] = st
                    per_dir[direction][0].append(st.mean)
                    per_dir[direction][1].append(st.stderr)
            for direction in ("ul", "dl"):
                curves.append(RateCurve(
                    scheme=scheme, direction=direction, bbar=bbars,
                    rate=per_dir[direction][0],
                    provenance=f"montecarlo-{mode}B",
                    stderr=per_dir[direction][1]))
    return curves, stats
