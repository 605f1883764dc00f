"""Numerics for the radial Klein-Gordon-Schrodinger system."""

from ._kgslab import (
    ConfigError,
    Grid,
    __version__,
    experiments,
    forward_transform,
    inverse_transform,
    lq_norm,
    p_variation,
    phi,
    psi,
    run_config,
    solve,
    verify_lemma,
)

__all__ = [
    "ConfigError",
    "Grid",
    "__version__",
    "experiments",
    "forward_transform",
    "inverse_transform",
    "lq_norm",
    "p_variation",
    "phi",
    "psi",
    "run_config",
    "solve",
    "verify_lemma",
]
