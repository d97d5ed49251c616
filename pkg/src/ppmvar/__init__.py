"""Bayesian Value-at-Risk with product partition models on Normal returns."""
from .backtest import BacktestReport, ExceptionSequence, christoffersen_cc, kupiec_uc, rolling_backtest
from .config import RunConfig, a_parameterization
from .errors import DataError, DomainError, NumericError, PPMError, UsageError
from .gibbs_mean import MeanHyperParams
from .gibbs_variance import VarHyperParams
from .io import ReturnSeries, export_histogram, load_returns
from .kernels import BACKEND
from .mcmc import MCMCConfig
from .outliers import OutlierResult, ScoreParams, detect_outliers
from .partition import Partition, bell_number, cluster_stats, from_values
from .rand import normal_quantile_factor
from .var import VaRReport, gaussian_var, ml_normal_var, var_estimate

__version__ = "0.1.0"
