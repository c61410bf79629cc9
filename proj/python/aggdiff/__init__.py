"""Aggregation-diffusion solver with entropy and decay-rate diagnostics.

Densities are NumPy arrays of shape (N,) * dim on a :class:`Grid`; the
rescaled frame is the default everywhere.
"""

from ._aggdiff import (
    ConfigError,
    Grid,
    Potential,
    Simulation,
    SolverError,
    box_profile,
    check_suite_names,
    conv_fields,
    diagnostics,
    entropy,
    f_alpha,
    fisher_info,
    fit_decay,
    frac_laplacian,
    frac_seminorm,
    gaussian_closed_forms,
    gaussian_profile,
    heat_kernel,
    l1_distance,
    lsi_gap,
    predict_e1,
    preset_config,
    preset_names,
    relative_entropy_L1,
    relative_entropy_L2,
    run_check_suite,
    run_experiment,
    scaling_check,
    second_moment,
    simulate,
    t_from_tau,
    tau_from_t,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
