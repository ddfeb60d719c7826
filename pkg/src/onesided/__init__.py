"""Differential games with lack of information on one side: value by backward
convexification on a simplex grid, and the optimal revelation process."""

from .band import azema_structure_residual, ex1_exact_sampler, stay_probability
from .config import RunConfig, parse_config
from .errors import ConfigError, DomainError, GeometryError, KernelError, SpecError
from .games import GameSpec, eval_hamiltonian, load_builtin, tensor_spec
from .kernel import build_kernel, condition_kernel, perturb_kernel
from .paths import estimate_value_mc, path_diagnostics, posterior_consistency, sample_paths
from .pde import conjugate_pde_residual, non_revealing_set, obstacle_residual
from .simplex import convex_envelope, fenchel_conjugate, make_grid, splitting_at
from .solver import TimeGrid, ValueTable, closed_form_value, solve_backward
from .strategy import UninformedStrategy, play_match, posterior_best_response, synthesize_informed

__all__ = [
    "ConfigError", "DomainError", "GameSpec", "GeometryError", "KernelError", "RunConfig", "SpecError",
    "TimeGrid", "UninformedStrategy", "ValueTable", "azema_structure_residual", "build_kernel",
    "closed_form_value", "condition_kernel", "conjugate_pde_residual", "convex_envelope", "estimate_value_mc",
    "eval_hamiltonian", "ex1_exact_sampler", "fenchel_conjugate", "load_builtin", "make_grid",
    "non_revealing_set", "obstacle_residual", "parse_config", "path_diagnostics", "perturb_kernel",
    "play_match", "posterior_best_response", "posterior_consistency", "sample_paths", "solve_backward",
    "splitting_at", "stay_probability", "synthesize_informed", "tensor_spec",
]
