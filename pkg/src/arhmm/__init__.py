"""Autoregressive asymmetric linear Gaussian hidden Markov models."""

from arhmm.errors import (
    ArhmmError,
    DataError,
    DecodingError,
    NumericalError,
    SchemaError,
    SingularSystemError,
    UnitRootError,
    WindowError,
)
from arhmm.model import (
    Dataset,
    Model,
    StateStructure,
    complete_data_loglik,
    count_parameters,
    emission_logpdf,
)
from arhmm.inference import (
    PosteriorTables,
    TrellisTables,
    backward,
    forward,
    loglikelihood,
    posteriors,
    viterbi,
)
from arhmm.em import EmReport, em_step, fit_em
from arhmm.structure import SemConfig, fit_sem, greedy_search, penalized_objective, report_bic
from arhmm.lags import autocorrelation, pacf, select_model_max_lag, select_order
from arhmm.labeling import label_g1, label_g2, state_means
from arhmm.synth import ScenarioSpec, builtin_scenarios, sample

__version__ = "0.1.0"
