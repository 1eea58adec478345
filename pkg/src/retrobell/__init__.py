"""Exact and Monte Carlo checks of retrocausal hidden-variable models of
photon-pair polarization correlations."""

__version__ = "0.1.0"

from .models import (  # noqa: E402
    BUILTIN_MODELS,
    HiddenVariableModel,
    JointDist,
    LambdaLaw,
    QuantumModel,
    angular_distance,
    baseline_local_model,
    get_model,
    hall_Ahat,
    hall_lambda_law,
    hall_model,
    hall_response,
    hall_z,
    malus_prob,
    qm_joint,
    quantum_model,
    reduce_angle,
    signaling_test_model,
    simplistic_lambda_law,
    simplistic_model,
)
from .evaluator import combine, combine_quadrature, correlator, marginal, tv_distance  # noqa: E402
from .montecarlo import EmpiricalJoint, TrialRecord, run_trials, sample_lambda, sample_outcomes  # noqa: E402
from .analysis import (  # noqa: E402
    ChshSettings,
    SettingsEnsemble,
    chsh,
    chsh_scan,
    mutual_information,
    mutual_information_by_wing,
    no_signaling_deviation,
)
