"""Detect global bias in stock fundamental indicators against a log-normal null."""

__version__ = "0.1.0"

from .distributions import (  # noqa: E402
    DegenerateSampleError,
    DomainError,
    FitReport,
    GpdParams,
    LogNormalParams,
    gpd_cdf,
    gpd_fit,
    gpd_pdf,
    gpd_quantile,
    gpd_sample,
    lognormal_cdf,
    lognormal_fit,
    lognormal_pdf,
    lognormal_quantile,
    lognormal_sample,
)
from .gof import BootstrapConfig, GofResult, Method, ad_statistic, chi2_statistic, gof_test, ks_statistic  # noqa: E402
from .ingest import CrossSection, Indicator, IndicatorPanel, cross_section, load_panel, write_panel  # noqa: E402
from .pipeline import (  # noqa: E402
    PValueSeries,
    QQData,
    ShapeComparison,
    daily_bias_series,
    fit_bias_shape,
    qq_plot_data,
)
from .sampling import SamplingProtocol, Sign, magnitude_filter, quantile_subsample, sign_split  # noqa: E402
from .simulate import (  # noqa: E402
    ConstantNoise,
    ExponentialNoise,
    LogNormalGrowth,
    ProcessConfig,
    TailEstimate,
    gibrat_simulate,
    hill_tail_index,
    kesten_exponent,
    kesten_simulate,
)
