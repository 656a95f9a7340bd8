"""ecorank: country-product export networks, complexity rankings, evaluation.

Builds binary country-product matrices from trade records (RCA threshold),
ranks both sides with the method of reflections or the generalized
fitness-complexity iteration, and evaluates rankings via extinction
areas, noise robustness and cross-year volatility.
"""

__version__ = "0.1.0"

from .core import (
    COUNTRY,
    HIGH,
    LOW,
    PRODUCT,
    BipartiteMatrix,
    DropReport,
    MethodConfig,
    Ranking,
    ScoreVector,
    degrees,
    drop_isolated,
    is_connected,
    ranking_from_scores,
    read_matrix,
    sort_matrix,
    write_matrix,
    write_pbm,
)
from .errors import (
    CondensationWarning,
    DegenerateInput,
    DegenerateScores,
    EcorankError,
    EmptyIntersection,
    EmptyNetwork,
    EmptyYear,
    LabelMismatch,
    NegativeValue,
    NonPositiveGamma,
    ParseError,
    ZeroDegree,
)
from .evaluation import (
    EvaluationReport,
    ExtinctionCurve,
    extinction_area,
    extinction_area_tie_averaged,
    extinction_curve,
    flip_noise,
    fractional_ranks,
    noise_robustness,
    spearman,
    volatility,
)
from .ingest import (
    CleaningConfig,
    RcaMatrix,
    TradeRecord,
    clean_dataset,
    compute_rca,
    parse_trade_records,
    restrict_countries,
    threshold_to_matrix,
)
from .ranking import (
    FcmResult,
    MrTrajectory,
    RankResult,
    eci,
    fcm_scores,
    least_fit_exporter_score,
    mr_iterate,
    mr_product_ranking,
    rank_matrix,
)
from .synth import nested_with_noise, perfectly_nested, random_bipartite
from .sweep import run_sweep

__all__ = [name for name in dir() if not name.startswith("_")]
