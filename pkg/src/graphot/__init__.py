"""Forward and inverse Born series for diffusion on graphs with Robin boundaries."""

from .born import SeriesConstants, forward_bound, forward_series, k_term, mixed_norm, series_constants
from .errors import GraphotError, NumericalError, SolverError, StructureError, ValidationError
from .experiment import ExperimentConfig, load_graph, run_experiment, save_graph
from .forward import (
    GreenTable,
    Measurement,
    background_green,
    robin_to_dirichlet,
    scattering_data,
    simulate,
    solve_direct,
    system_matrix,
)
from .generators import PhantomSpec, lattice_graph, make_phantom, path_graph, random_graph
from .graph import Graph, ProblemParams, build_graph, operator_blocks
from .inverse import (
    convergence_radius,
    diagnose,
    empirical_order,
    estimate_M,
    inverse_series,
    k1_matrix,
    min_gain,
    regularized_pinv,
    stability_probe,
    tau_star,
    truncation_bound,
)
from .structured import (
    invertibility_report,
    modified_inverse_series,
    multifreq_problem,
    structure_map,
)

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig", "Graph", "GraphotError", "GreenTable", "Measurement", "NumericalError",
    "PhantomSpec", "ProblemParams", "SeriesConstants", "SolverError", "StructureError",
    "ValidationError", "background_green", "build_graph", "convergence_radius", "diagnose",
    "empirical_order", "estimate_M", "forward_bound", "forward_series", "inverse_series",
    "invertibility_report", "k1_matrix", "k_term", "lattice_graph", "load_graph", "make_phantom",
    "min_gain", "mixed_norm", "modified_inverse_series", "multifreq_problem", "operator_blocks",
    "path_graph", "random_graph", "regularized_pinv", "robin_to_dirichlet", "run_experiment",
    "save_graph", "scattering_data", "series_constants", "simulate", "solve_direct",
    "stability_probe", "structure_map", "system_matrix", "tau_star", "truncation_bound",
]
