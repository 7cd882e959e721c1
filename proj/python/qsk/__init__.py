"""Quantile-filtered randomized sparse Kaczmarz solvers."""

from ._qsk import (
    ProblemInstance,
    QskError,
    SpectralReport,
    acceptable_set,
    bregman_distance,
    conjugate_value,
    exact_step,
    f_value,
    generate_gaussian,
    load_bundle,
    make_instance,
    normalize_rows,
    q_quantile,
    rask_rate,
    run_cli,
    soft_shrink,
    solve,
    spectral_constants,
)

__all__ = [
    "ProblemInstance",
    "QskError",
    "SpectralReport",
    "acceptable_set",
    "bregman_distance",
    "conjugate_value",
    "exact_step",
    "f_value",
    "generate_gaussian",
    "load_bundle",
    "make_instance",
    "normalize_rows",
    "q_quantile",
    "rask_rate",
    "run_cli",
    "soft_shrink",
    "solve",
    "spectral_constants",
]
