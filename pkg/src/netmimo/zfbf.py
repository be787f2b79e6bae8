"""Zero-forcing beamforming and the resulting SINR bookkeeping.

The beamformer for a served user is the unit-norm projection of that user's
channel onto the orthogonal complement of the co-scheduled users' channels.
Interference then comes only from outside the serving cluster; residual
intra-cluster leakage is numerical noise and is tracked as a diagnostic,
never folded into the SINR.
"""

from dataclasses import dataclass

import numpy as np

_RANK_TOL = 1e-10   # singular values below tol * s_max count as null
_NORM_TOL = 1e-12   # projected norm below tol * |h| means h in span(H_others)


class DegenerateChannelError(RuntimeError):
    """Served channel lies (numerically) inside the co-scheduled span."""


def zf_beamformer(h_own, h_others):
    """Unit-norm ZF direction for one user.

    h_own: (N,) complex; h_others: (N, J) columns to null. The projection
    uses an SVD range basis so rank-deficient column sets are handled.
    """
    h = np.asarray(h_own, dtype=complex).ravel()
    H = np.asarray(h_others, dtype=complex)
    if H.ndim == 1:
        H = H[:, None] if H.size else H.reshape(h.size, 0)
    if H.shape[0] != h.size:
        raise ValueError("h_own and h_others row dimensions differ")
    if H.shape[1] >= h.size:
        raise ValueError("cannot null as many directions as dimensions")
    if H.shape[1] == 0:
        w = h.copy()
    else:
        u, s, _ = np.linalg.svd(H, full_matrices=False)
        basis = u[:, s > _RANK_TOL * s[0]]
        w = h - basis @ (basis.conj().T @ h)
    n = np.linalg.norm(w)
    if n <= _NORM_TOL * np.linalg.norm(h):
        raise DegenerateChannelError("channel is inside the nulled span")
    return w / n


@dataclass(frozen=True)
class SinrReport:
    signal_power: float
    interference_power: float
    noise_power: float
    sinr: float
    direction: str


def _report(signal, interference, noise, direction):
    if noise <= 0:
        raise ValueError("noise power must be positive")
    if signal < 0 or interference < 0:
        raise ValueError("powers must be nonnegative")
    return SinrReport(signal_power=float(signal),
                      interference_power=float(interference),
                      noise_power=float(noise),
                      sinr=float(signal / (interference + noise)),
                      direction=direction)


def ul_sinr(w, h_own, interferer_vectors, sigma2_u):
    """Uplink SINR at one cluster receiver.

    interferer_vectors: iterable of stacked channels from users scheduled
    elsewhere, as seen by this cluster's antennas.
    """
    w = np.asarray(w, dtype=complex).ravel()
    sig = abs(np.vdot(w, np.asarray(h_own, dtype=complex).ravel())) ** 2
    interf = 0.0
    for hj in interferer_vectors:
        hj = np.asarray(hj, dtype=complex).ravel()
        if hj.size != w.size:
            raise ValueError("interferer vector dimension mismatch")
        interf += abs(np.vdot(w, hj)) ** 2
    return _report(sig, interf, sigma2_u, "ul")


def dl_sinr(own_signal_power, interfering_channels, interfering_beamformers,
            sigma2_d):
    """Downlink SINR at the served user.

    own_signal_power is |w^H h|^2 from the serving cluster; the two lists
    pair the typical user's channel from each interfering cluster with that
    cluster's active beamformer.
    """
    if len(interfering_channels) != len(interfering_beamformers):
        raise ValueError("channel/beamformer lists must pair up")
    interf = 0.0
    for hj, wj in zip(interfering_channels, interfering_beamformers):
        hj = np.asarray(hj, dtype=complex).ravel()
        wj = np.asarray(wj, dtype=complex).ravel()
        if hj.size != wj.size:
            raise ValueError("interferer vector dimension mismatch")
        interf += abs(np.vdot(wj, hj)) ** 2
    return _report(float(own_signal_power), interf, sigma2_d, "dl")
