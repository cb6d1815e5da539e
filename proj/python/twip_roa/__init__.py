"""Two-wheeled inverted pendulum: saturated LQR, soft MPC and tube MPC, a
Lyapunov-certified invariant set and Monte Carlo region-of-attraction runs."""

import json

from . import _core
from ._core import CertificationError, ConfigError, DomainError, SynthesisError


def default_config():
    """The built-in configuration as a dict."""
    return json.loads(_core.default_config())


def _dump(config):
    if config is None:
        return ""
    return config if isinstance(config, str) else json.dumps(config)


def continuous_dynamics(x, u, config=None):
    return _core.continuous_dynamics(x, u, _dump(config))


def step(x, u, config=None):
    """One sample period of the nonlinear plant under a held input."""
    return _core.step(x, u, _dump(config))


class System(_core.System):
    def __init__(self, config=None):
        super().__init__(_dump(config))


__all__ = [
    "CertificationError",
    "ConfigError",
    "DomainError",
    "SynthesisError",
    "System",
    "continuous_dynamics",
    "default_config",
    "step",
]
