"""Unit conversions. All internal math runs in linear Watts / linear ratios."""

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    return 10.0 * np.log10(np.asarray(value, dtype=float))


def dbm_to_watt(value_dbm):
    return 10.0 ** ((np.asarray(value_dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(value_w):
    return 10.0 * np.log10(np.asarray(value_w, dtype=float)) + 30.0


def noise_power(psd_dbm_hz, bandwidth_hz):
    """Noise power in Watts for a PSD in dBm/Hz integrated over `bandwidth_hz`."""
    return float(dbm_to_watt(psd_dbm_hz) * bandwidth_hz)


def wavelength(carrier_freq_hz):
    return SPEED_OF_LIGHT / carrier_freq_hz
