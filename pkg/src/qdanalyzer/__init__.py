"""Quasi-deterministic analyzer model for two-particle correlations."""
from .analyzer import (
    AnalyzerSample,
    AnalyzerSetting,
    ChannelOutcome,
    ParticleKind,
    decide_deterministic,
    decide_probabilistic,
    sample_analyzer,
)
from .experiment import (
    CoincidenceCounts,
    CorrelationResult,
    FourAngleResult,
    chsh_bound_check,
    inequality5_diagnostic,
    run_correlation,
    run_four_angle,
    run_malus_sequence,
    run_proton_experiment,
)
from .reference import model_expectation_oracle, qm_reference
from .sources import IncidentPair, PairKind, SourceConfig, next_pair
from .stokes import (
    HermitianParams,
    MatrixStokes,
    SpinorParams,
    StokesField,
    eigencondition_residuals,
    matrix_stokes,
    stokes_from_spinor,
)

__version__ = "0.1.0"
