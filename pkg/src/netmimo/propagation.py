"""Large-scale path loss and small-scale fading draws.

The path-loss law is beta(r) = (1 + r/d0)^(-alpha): bounded at r = 0, with
reference distance d0 in meters. The defaults reproduce the common urban
macro fit 128.1 + 37.6 log10(d_km) dB at distances well beyond d0.

Fading is regenerated from (seed, BS index, user index) rather than stored,
so a channel draw for a link is identical no matter which direction or
engine asks for it.
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import rng as _rng


@dataclass(frozen=True)
class PathLossModel:
    d0: float = 0.3920
    alpha: float = 3.76

    def __post_init__(self):
        if self.d0 <= 0:
            raise ValueError("reference distance d0 must be positive")
        if self.alpha <= 2:
            raise ValueError("path-loss exponent must exceed 2")

    def gain(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ValueError("distance must be nonnegative")
        return (1.0 + r / self.d0) ** (-self.alpha)


DEFAULT_PATH_LOSS = PathLossModel()


def path_loss(model, r):
    """Linear power gain at distance r (meters). Vectorized."""
    return model.gain(r)


def _xy(p):
    if hasattr(p, "as_array"):
        return p.as_array()
    return np.asarray(p, dtype=float).reshape(2)


def draw_channel(model, bs, user, m, seed):
    """One M-antenna channel vector sqrt(beta(r)) * f, f_k iid CN(0,1).

    `seed` keys the fading stream directly; callers composing many links
    should derive it with link_seed so each (BS, user) pair gets its own.
    """
    if m < 1:
        raise ValueError("antenna count must be positive")
    r = float(np.hypot(*(_xy(bs) - _xy(user))))
    f = _rng.complex_fading(np.uint64(seed), m)[0]
    return np.sqrt(model.gain(r)) * f


def link_seed(master_seed, bs_index, user_index):
    """Deterministic per-link fading seed; identical for both directions."""
    return _rng.pair_seed(master_seed, bs_index, user_index)


@dataclass
class ChannelSet:
    """Channels a ZF precoder needs for one served user.

    h_own is the stacked (M * B,) vector from the cluster's BSs to the user;
    h_others has one column per other scheduled user in the same cluster.
    Rows are grouped per BS in ascending BS-index order. Interferer vectors
    are regenerated on demand so the set stays small.
    """

    h_own: np.ndarray
    h_others: np.ndarray
    cluster_bs: np.ndarray
    user_index: int
    m: int
    model: PathLossModel
    master_seed: int
    _bs_xy: np.ndarray
    _user_xy: np.ndarray

    def cross_vector(self, other_user_index):
        """Stacked channel from this cluster's BSs to any user."""
        return _stacked_channel(self._bs_xy, self.cluster_bs,
                                self._user_xy[other_user_index],
                                other_user_index, self.m, self.model,
                                self.master_seed)


def _stacked_channel(bs_xy, bs_indices, user_xy, user_index, m, model, seed):
    d = np.hypot(*(bs_xy[bs_indices] - user_xy[None, :]).T)
    amp = np.sqrt(model.gain(d))
    fad = _rng.complex_fading(_rng.pair_seed(seed, bs_indices, user_index), m)
    return (amp[:, None] * fad).ravel()


def build_channel_set(deployment, cluster, scheduled_users, model, m, seed):
    """Assemble the served-user channel and co-scheduled columns.

    scheduled_users lists the user indices served by this cluster with the
    target user first; h_others columns follow the remaining list order.
    """
    if cluster.is_empty:
        raise ValueError("cluster has no member BSs")
    sched = np.asarray(scheduled_users, dtype=np.intp)
    if sched.size == 0:
        raise ValueError("need at least the served user")
    bs_sorted = np.sort(np.asarray(cluster.member_bs, dtype=np.intp))
    target = int(sched[0])
    h_own = _stacked_channel(deployment.bs_xy, bs_sorted,
                             deployment.user_xy[target], target, m, model, seed)
    cols = [_stacked_channel(deployment.bs_xy, bs_sorted,
                             deployment.user_xy[int(j)], int(j), m, model, seed)
            for j in sched[1:]]
    h_others = (np.column_stack(cols) if cols
                else np.zeros((h_own.size, 0), dtype=complex))
    return ChannelSet(h_own=h_own, h_others=h_others, cluster_bs=bs_sorted,
                      user_index=target, m=m, model=model,
                      master_seed=seed, _bs_xy=deployment.bs_xy,
                      _user_xy=deployment.user_xy)
