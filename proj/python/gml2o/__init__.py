"""Stochastic multi-objective gradient methods and a guarded learned optimizer."""

from ._core import (
    CHECK_COUNT,
    CheckpointError,
    ConfigError,
    Error,
    NotFoundError,
    NumericalError,
    Problem,
    ShapeError,
    UnsupportedError,
    __version__,
    check_title,
    compare,
    front,
    hypervolume,
    hypervolume_reference,
    make_problem,
    method_names,
    pareto_front,
    problem_names,
    run,
    run_check,
    run_experiment,
    solve_min_norm,
    train_ml2o,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
