"""Gamma models for beamforming gains and interference powers.

Signal and interference powers are sums of independent Gamma terms with
per-BS coefficients set by path loss. Two reductions are used downstream:

* a scale mixture ("GammaMix") that keeps one Gamma term per BS with a
  shared shape and unit scale, which is what the Laplace-transform rate
  analysis consumes; and
* second-order moment matching of a sum of Gammas to a single Gamma.

Shapes are real-valued: the averaged per-BS beamforming gain has shape
varpi = (M*Bbar - K*Bbar + 1)/Bbar and an interfering user contributes
shape 1/Bbar per BS, neither an integer in general. A fixed cluster of B
BSs serving K users each yields the integer ladder (M*B - K*B + 1)
degrees of freedom split across B BSs; the two readings of that split
(mean shape per BS vs a rescaled matched shape) do not coincide, so both
are implemented and their gap is reported rather than hidden.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import USER_CENTRIC, DISJOINT


@dataclass(frozen=True)
class GammaParams:
    """Gamma(shape, scale) with mean shape*scale."""

    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and np.isfinite(self.shape)):
            raise ValueError("shape must be positive and finite")
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise ValueError("scale must be positive and finite")

    def mean(self):
        return self.shape * self.scale

    def variance(self):
        return self.shape * self.scale ** 2

    def laplace(self, s):
        s = np.asarray(s, dtype=float)
        return (1.0 + self.scale * s) ** (-self.shape)

    def sample(self, n, seed):
        rng = np.random.default_rng(seed)
        return rng.gamma(self.shape, self.scale, n)


@dataclass(frozen=True)
class GammaMix:
    """Sum of independent unit-scale Gammas with nonnegative coefficients.

    X = sum_i coefficients[i] * G_i, G_i ~ Gamma(shapes[i], 1). An empty
    mix is the constant 0 (used for an empty serving cluster).
    """

    coefficients: np.ndarray
    shapes: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float).ravel()
        k = np.asarray(self.shapes, dtype=float).ravel()
        if c.shape != k.shape:
            raise ValueError("coefficients and shapes must align")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite and nonnegative")
        if c.size and (np.any(k <= 0) or not np.all(np.isfinite(k))):
            raise ValueError("shapes must be positive and finite")
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "shapes", k)

    @property
    def n_terms(self):
        return self.coefficients.size

    def mean(self):
        return float(np.dot(self.coefficients, self.shapes))

    def variance(self):
        return float(np.dot(self.coefficients ** 2, self.shapes))

    def laplace(self, s):
        """E[exp(-sX)] = prod_i (1 + c_i s)^(-k_i), elementwise in s."""
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("transform argument must be nonnegative")
        if self.n_terms == 0:
            return np.ones_like(s)
        # log-domain product; c_i s >= 0 keeps log1p well conditioned
        expo = -self.shapes[None, ...] * np.log1p(
            np.multiply.outer(s, self.coefficients))
        return np.exp(expo.sum(axis=-1))

    def as_parts(self):
        return [GammaParams(shape=k, scale=c)
                for k, c in zip(self.shapes, self.coefficients) if c > 0]

    def sample(self, n, seed):
        if self.n_terms == 0:
            return np.zeros(n)
        rng = np.random.default_rng(seed)
        g = rng.gamma(self.shapes[None, :], 1.0, size=(n, self.n_terms))
        return g @ self.coefficients


def moment_match(parts):
    """Single Gamma with the mean and variance of an independent sum.

    k = (sum k_i t_i)^2 / sum k_i t_i^2,  theta = sum k_i t_i^2 / sum k_i t_i.
    """
    parts = list(parts)
    if not parts:
        raise ValueError("need at least one part")
    kt = np.array([p.shape * p.scale for p in parts])
    kt2 = np.array([p.shape * p.scale ** 2 for p in parts])
    s1, s2 = kt.sum(), kt2.sum()
    return GammaParams(shape=s1 * s1 / s2, scale=s2 / s1)


def varpi(m, k, bbar):
    """Averaged per-BS beamforming-gain shape (M*Bbar - K*Bbar + 1)/Bbar."""
    if not (m >= 1 and k >= 1):
        raise ValueError("antenna and load counts must be at least 1")
    if m <= k:
        raise ValueError("loading factor must satisfy K < M")
    if not bbar > 0:
        raise ValueError("mean cluster size must be positive")
    return (m * bbar - k * bbar + 1.0) / bbar


def _beta(distances, model):
    d = np.asarray(distances, dtype=float).ravel()
    if np.any(d < 0):
        raise ValueError("distances must be nonnegative")
    return model.gain(d)


def signal_mix_user_centric(cluster_distances, model, m, k, bbar):
    """Beamforming-gain mix: one term per serving BS, common shape varpi."""
    beta = _beta(cluster_distances, model)
    w = varpi(m, k, bbar)
    return GammaMix(coefficients=beta, shapes=np.full(beta.size, w))


def interference_mix_ul(distances, model, bbar):
    """Residual power from one out-of-cluster user: shape 1/Bbar per BS.

    distances run from the receiving cluster's BSs to the interfering user;
    by reciprocity the same mix models the downlink leakage an interfering
    cluster's BSs cause at the typical user.
    """
    if not bbar > 0:
        raise ValueError("mean cluster size must be positive")
    beta = _beta(distances, model)
    return GammaMix(coefficients=beta, shapes=np.full(beta.size, 1.0 / bbar))


def interference_mix_dl_disjoint(out_of_cluster_distances, model, k):
    """Downlink interference under disjoint clustering: a non-member BS
    transmits K unit-power beams with no nulling toward the user, so each
    contributes a full Gamma(K) at its path-loss coefficient."""
    if not k >= 1:
        raise ValueError("served-user count must be at least 1")
    beta = _beta(out_of_cluster_distances, model)
    return GammaMix(coefficients=beta, shapes=np.full(beta.size, float(k)))


def signal_single_gamma(cluster_distances, model, m, k):
    """Alternative single-Gamma signal model for a fixed cluster of B BSs.

    Moment-match the full-gain sum of Gamma(M, beta_b), then rescale the
    matched shape by (M*B - K*B + 1)/(M*B), the zero-forcing dimension loss.
    """
    beta = _beta(cluster_distances, model)
    b = beta.size
    if b == 0:
        raise ValueError("cluster must be nonempty")
    if m <= k:
        raise ValueError("loading factor must satisfy K < M")
    full = moment_match(GammaParams(shape=float(m), scale=bb) for bb in beta)
    loss = (m * b - k * b + 1.0) / (m * b)
    return GammaParams(shape=full.shape * loss, scale=full.scale)


def signal_form_gap(cluster_distances, model, m, k):
    """Compare the two signal reductions on one concrete cluster.

    Returns relative mean and variance gaps plus the largest relative
    Laplace-transform gap over a geometric s-grid spanning the mean.
    """
    beta = _beta(cluster_distances, model)
    b = beta.size
    mix = signal_mix_user_centric(cluster_distances, model, m, k, float(b))
    single = signal_single_gamma(cluster_distances, model, m, k)
    s = np.geomspace(0.01, 100.0, 25) / max(mix.mean(), 1e-300)
    lm, ls = mix.laplace(s), single.laplace(s)
    return {
        "mixture_mean": mix.mean(),
        "single_mean": single.mean(),
        "mean_rel_gap": abs(mix.mean() - single.mean()) / mix.mean(),
        "variance_rel_gap": abs(mix.variance() - single.variance())
                            / mix.variance(),
        "laplace_max_rel_gap": float(np.max(np.abs(lm - ls)
                                            / np.maximum(ls, 1e-300))),
    }


_DIRECTIONS = ("ul", "dl")
_COMPONENTS = ("signal", "interference")


def table1_distribution(scheme, direction, component, distances, model,
                        m, k, bbar):
    """Dispatch to the Gamma mix for one (scheme, direction, component) cell.

    distances: user-to-serving-BS for signal cells; receiving-cluster-BS to
    interfering-user (uplink) or interfering-BS to typical-user (downlink)
    for interference cells. bbar is the mean cluster size.
    """
    if scheme not in (USER_CENTRIC, DISJOINT):
        raise ValueError(f"unknown scheme: {scheme!r}")
    if direction not in _DIRECTIONS:
        raise ValueError(f"unknown direction: {direction!r}")
    if component not in _COMPONENTS:
        raise ValueError(f"unknown component: {component!r}")
    if component == "signal":
        return signal_mix_user_centric(distances, model, m, k, bbar)
    if scheme == DISJOINT and direction == "dl":
        return interference_mix_dl_disjoint(distances, model, k)
    return interference_mix_ul(distances, model, bbar)
