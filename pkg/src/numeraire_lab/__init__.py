"""Log-return statistics of foreign-exchange assets under any numeraire.

Core capabilities: analytic mean/covariance/correlation transforms between
numeraires, numeraire-invariant partial correlations via the precision
matrix, and the empirical pipeline around them (panel cleaning, threshold
clusters, most-similar-asset robustness, significance-filtered networks).
"""

from .analysis import (
    Edge,
    MaskingReport,
    NetworkEdgeList,
    SimilarityRow,
    SimilarityTable,
    ThresholdReport,
    export_network,
    masking_report,
    most_similar,
    significant_edges,
    threshold_components,
    transform_validation_r2,
)
from .errors import (
    AlignmentError,
    AssetLookupError,
    ConsistencyError,
    CoverageError,
    DataError,
    DegenerateAssetError,
    FactorizationError,
    IllConditionedError,
    InputError,
    NumeraireLabError,
    NumericalError,
    ParseError,
    PreconditionError,
    SchemaError,
    StatisticalPowerError,
)
from .ingest import (
    AlignedPanel,
    PricePanel,
    RemovalRecord,
    align_and_fill,
    apply_exclusions,
    format_removal_report,
    parse_price_panel,
    write_price_panel,
)
from .partial import (
    AssembledPartial,
    InvarianceReport,
    PartialCorrMatrix,
    PrecisionMatrix,
    assemble_full_partial_matrix,
    format_partial_matrix,
    invariance_report,
    partial_correlations,
    precision_matrix,
)
from .portfolio import (
    Portfolio,
    ReturnSeries,
    parse_portfolio,
    portfolio_cross_covariance,
    portfolio_rebase,
    portfolio_return_series,
    portfolio_variance,
    portfolio_variance_transform,
)
from .returns import (
    CorrMatrix,
    CovMatrix,
    MeanVector,
    ReturnPanel,
    correlation_from_cov,
    correlation_transform,
    covariance_transform,
    format_matrix,
    log_returns,
    mean_transform,
    mean_vector,
    rebase_returns,
    sample_covariance,
    variance_transform,
)

__version__ = "0.1.0"
