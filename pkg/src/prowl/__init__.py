"""Certified-reward policy learning with PAC-Bayesian temperature selection."""
from .certify import CompositeUtilitySpec, NuisancePair, composite_certificate, gamma_scores, value_hat
from .data import Dataset, FeatureKind, Observation, PolicyParams, decisions, sign_rule
from .learners import LearnerConfig, deploy, owl_fit, prowl_fit, qlearn_fit, rwl_fit
from .metrics import MetricsRecord, certificate_diagnostics, gaps, regrets
from .pacbayes import BoundConfig, catoni_lcb, xi
from .simulate import ScenarioConfig, simulate

__version__ = "0.1.0"

__all__ = [
    "BoundConfig", "CompositeUtilitySpec", "Dataset", "FeatureKind", "LearnerConfig", "MetricsRecord",
    "NuisancePair", "Observation", "PolicyParams", "ScenarioConfig", "catoni_lcb",
    "certificate_diagnostics", "composite_certificate", "decisions", "deploy", "gamma_scores", "gaps",
    "owl_fit", "prowl_fit", "qlearn_fit", "regrets", "rwl_fit", "sign_rule", "simulate", "value_hat", "xi",
]
