"""Obstacle problems for parabolic SPDEs in divergence form."""

from ._core import (
    Config,
    ConfigError,
    capacity,
    check_constants,
    convergence,
    load_config,
    parse_config,
    run,
    simulate,
    verify,
)

__all__ = [
    "Config",
    "ConfigError",
    "capacity",
    "check_constants",
    "convergence",
    "load_config",
    "parse_config",
    "run",
    "simulate",
    "verify",
]
