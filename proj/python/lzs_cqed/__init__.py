"""Python front end to the lzs C++ core."""

import json as _json

from ._lzs import (  # noqa: F401
    InputError,
    NumericalError,
    SystemParams,
    gap_scan,
    quasienergies,
    rabi_hamiltonian,
    rate_kernel,
    region,
    static_energies,
    steady_p_up,
    time_averaged_p_up,
)
from . import _lzs


def _text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def config_hash(config):
    return _lzs.config_hash(_text(config))


def evaluate_point(config, A_over_omega, eps0_over_omega):
    return _lzs.evaluate_point(_text(config), A_over_omega, eps0_over_omega)


def run_sweep(config, workers=0):
    """values[A, eps0], A axis, eps0 axis (both in units of omega)."""
    return _lzs.run_sweep(_text(config), workers)
