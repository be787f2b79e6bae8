"""Unit conversions at the toolkit boundary.

Powers cross the boundary in dBm, bandwidth in MHz, distances in meters and
rates in bits/s/Hz. Internally every power is linear and normalized to unit
transmit power per beam, so the whole link budget collapses into the single
normalized noise power computed by `normalized_noise_power`. Keeping all
dB/dBm arithmetic here is deliberate: nothing else in the package converts
units.
"""

import numpy as np

THERMAL_NOISE_DBM_PER_HZ = -174.0


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("linear power must be positive")
    return 10.0 * np.log10(x)


def dbm_to_mw(p_dbm):
    return 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0)


def mw_to_dbm(p_mw):
    p_mw = np.asarray(p_mw, dtype=float)
    if np.any(p_mw <= 0):
        raise ValueError("power must be positive")
    return 10.0 * np.log10(p_mw)


def noise_power_dbm(bandwidth_mhz, noise_figure_db,
                    psd_dbm_per_hz=THERMAL_NOISE_DBM_PER_HZ):
    """Total receiver noise power over the band, in dBm.

    psd + 10 log10(bandwidth in Hz) + noise figure.
    """
    if bandwidth_mhz <= 0:
        raise ValueError("bandwidth must be positive")
    if noise_figure_db < 0:
        raise ValueError("noise figure cannot be negative")
    return psd_dbm_per_hz + 10.0 * np.log10(bandwidth_mhz * 1e6) + noise_figure_db


def normalized_noise_power(tx_power_dbm, bandwidth_mhz, noise_figure_db,
                           psd_dbm_per_hz=THERMAL_NOISE_DBM_PER_HZ):
    """Noise power divided by transmit power (both linear).

    This is the sigma^2 that enters an SINR whose signal and interference
    terms are built from unit transmit power per beam, i.e. the only place
    the absolute power budget touches the math.
    """
    n_dbm = noise_power_dbm(bandwidth_mhz, noise_figure_db, psd_dbm_per_hz)
    return float(dbm_to_mw(n_dbm - tx_power_dbm))
