from __future__ import annotations

from dataclasses import dataclass

AUX_PENALTY_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)
CV_PENALTY_GRID = (1e-3, 1e-2, 1e-1, 1.0)


@dataclass(frozen=True)
class LearnerConfig:
    """Hyperparameters of the finite-library learner and the baselines.

    ``lambda0`` defaults to 1 / (2 prior_sd^2), the Gaussian prior's
    quadratic coefficient.
    """

    ridge_penalty_nuisance: float = 1e-6
    prior_sd: float = 5.0
    score_bound: float = 3.0
    anchors: int = 2
    prior_particles: int = 32
    perturbations_per_anchor: int = 4
    local_scale: float = 0.3
    aux_penalty_grid: tuple = AUX_PENALTY_GRID
    cv_penalty_grid: tuple = CV_PENALTY_GRID
    cv_folds: int = 5
    lambda0: float | None = None
    split_free: bool = True

    def __post_init__(self):
        for name in ("aux_penalty_grid", "cv_penalty_grid"):
            grid = tuple(float(v) for v in getattr(self, name))
            if not grid or any(v <= 0 for v in grid):
                raise ValueError(f"{name} must be nonempty and strictly positive")
            object.__setattr__(self, name, grid)
        if self.ridge_penalty_nuisance <= 0 or self.prior_sd <= 0 or self.score_bound <= 0:
            raise ValueError("penalties, prior sd and score bound must be positive")
        if min(self.anchors, self.prior_particles, self.perturbations_per_anchor, self.cv_folds) < 1:
            raise ValueError("counts must be at least 1")
        if self.lambda0 is None:
            object.__setattr__(self, "lambda0", 1.0 / (2.0 * self.prior_sd ** 2))
        elif self.lambda0 <= 0:
            raise ValueError("lambda0 must be positive")
