"""Correlation and transfer-entropy network analytics over daily stock returns."""

from .correlate import (
    BandStat,
    CorrelationMatrix,
    Histogram,
    NullBand,
    offdiag_histogram,
    pearson_matrix,
    shuffle_null,
)
from .embedding import Embedding, classical_mds, stress
from .entropy import (
    ComparisonStats,
    DiscretePanel,
    LabeledMatrix,
    QuadTEMatrix,
    bin_panel,
    excess_te,
    normalize_te,
    te_correlation_comparison,
    te_matrix_expanded,
    te_shuffle_null,
    transfer_entropy,
)
from .errors import DataError, NumericError, StocknetsError
from .netmetrics import (
    AssetGraph,
    DistanceMatrix,
    Edge,
    asset_graph,
    connected_components,
    correlation_distance,
    in_out_node_strength,
    node_strength,
    sector_index,
    te_distance,
)
from .panels import (
    PricePanel,
    ReturnPanel,
    SectorInfo,
    SectorTaxonomy,
    Variable,
    compute_log_returns,
    filter_liquidity,
    lag_expand,
    load_prices,
    load_taxonomy,
)
from .propagation import (
    PropagationMatrix,
    ShockTrajectory,
    build_propagation_matrix,
    group_shock,
    propagate,
    shock_propagation_strength,
    single_stock_shock,
)
from .windows import (
    WindowSeries,
    rolling_mean_correlation,
    rolling_mean_te,
    semester_slices,
    volatility_panel,
    window_slices,
)

__version__ = "0.1.0"
