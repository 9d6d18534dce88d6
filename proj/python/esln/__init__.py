"""Stochastic Liouville-von Neumann simulator for open quantum systems."""

import json

from ._core import (
    ConfigError,
    KernelContext,
    NumericalError,
    compare,
    diagonalize_bath,
    gibbs_state,
)
from . import _core

__all__ = [
    "ConfigError",
    "KernelContext",
    "NumericalError",
    "compare",
    "diagonalize_bath",
    "equilibrate",
    "gibbs_state",
    "load_config",
    "oracle",
    "oracle_csv",
    "run",
    "verify_noise",
]


def _text(config):
    """Accept a JSON string or a dict."""
    return config if isinstance(config, str) else json.dumps(config)


def load_config(path):
    """Read, validate and return the canonical form of a configuration file."""
    with open(path, encoding="utf-8") as fh:
        return json.loads(_core.normalize_config(fh.read()))


def run(config, n_traj=None, seed=None, workers=1):
    """Run the full pipeline; returns (output document dict, series CSV text)."""
    doc, csv = _core.run(_text(config), n_traj, seed, workers)
    return json.loads(doc), csv


def equilibrate(config, n_traj=None, seed=None, workers=1):
    """Mean initial density from the imaginary-time phase and the mean trajectory weight."""
    return _core.equilibrate(_text(config), n_traj, seed, workers)


def verify_noise(config, samples=100000, points=8, seed=None):
    """Per-block z-score report of the sampled pseudo-covariance."""
    return json.loads(_core.verify_noise(_text(config), samples, points, seed))


def oracle(config, n_levels=None):
    """Exact reduced densities, shape (n_t, d, d), and any truncation warnings."""
    return _core.oracle(_text(config), n_levels)


def oracle_csv(config):
    """Exact reduced densities in the same CSV schema as `run`."""
    return _core.oracle_csv(_text(config))
