from .baselines import fold_ids, owl_fit, qlearn_fit, rwl_fit
from .config import LearnerConfig
from .hinge import hinge_map, hinge_objective, surrogate_log_density, weighted_hinge_fit
from .library import Candidate, build_library, library_size
from .pipeline import FitResult, deploy, prowl_fit
from .ridge import fit_nuisance, fit_ridge_arm, fit_treatment_free, ridge_solve

__all__ = [
    "Candidate", "FitResult", "LearnerConfig", "build_library", "deploy", "fit_nuisance",
    "fit_ridge_arm", "fit_treatment_free", "fold_ids", "hinge_map", "hinge_objective",
    "library_size", "owl_fit", "prowl_fit", "qlearn_fit", "ridge_solve", "rwl_fit",
    "surrogate_log_density", "weighted_hinge_fit",
]
