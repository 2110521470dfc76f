"""Python front end for the irltrack simulator.

Configs are plain dicts with the same schema as the JSON files accepted by
the command-line tool; missing keys take their defaults.
"""

import json as _json

from . import _irltrack
from ._irltrack import (
    ConfigError,
    DomainError,
    IoError,
    NumericalFailure,
    control,
    critic_basis,
    min_eig_sym,
    normalizers,
    plant_derivative,
    plot,
    symmetric_eigenvalues,
    uub_gamma,
    utility_closed,
    utility_quadrature,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "IoError",
    "NumericalFailure",
    "ablate",
    "control",
    "critic_basis",
    "default_config",
    "min_eig_sym",
    "normalize_config",
    "normalizers",
    "plant_derivative",
    "plot",
    "run",
    "run_to_dir",
    "symmetric_eigenvalues",
    "uub_gamma",
    "utility_closed",
    "utility_quadrature",
]


def _dump(cfg):
    if cfg is None:
        cfg = {"schema_version": 1}
    return _json.dumps(cfg)


def default_config():
    return _json.loads(_irltrack.default_config())


def normalize_config(cfg):
    return _json.loads(_irltrack.normalize_config(_dump(cfg)))


def run(cfg=None, rows=True):
    """Simulate in memory. Returns {"metrics": dict, "rows": dict of arrays}."""
    return _irltrack.run(_dump(cfg), rows)


def run_to_dir(cfg, out_dir):
    """Same files as `irltrack run`. Returns the metrics dict."""
    return _json.loads(_irltrack.run_to_dir(_dump(cfg), str(out_dir)))


def ablate(cfg, variants, out_dir, workers=0):
    """variants: list of {"name": ..., "overrides": {...}}. workers=0 reads IRLTRACK_WORKERS."""
    return _irltrack.ablate(_dump(cfg), _json.dumps({"variants": variants}), str(out_dir), workers)
