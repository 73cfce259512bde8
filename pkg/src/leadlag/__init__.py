"""Lead-lag discovery and trading evaluation for prediction markets.

The package finds directed leader/follower relationships between
prediction-market price series with Granger-causality screening in
log-odds space, optionally re-ranks the candidates by LLM-judged
semantic plausibility, and evaluates the surviving pairs under a fixed
signal-triggered trading protocol over rolling train/test windows.
"""

from .backtest import (
    SkippedTrade,
    TradeConfig,
    TradeLog,
    TradeRecord,
    TriggerSignal,
    execute_trade,
    generate_signals,
    run_backtest,
    trade_direction,
    write_trade_log_csv,
)
from .config import (
    IoConfig,
    RerankConfig,
    RunConfig,
    ScreeningConfig,
    WindowConfig,
    load_config,
)
from .errors import (
    DegenerateSeries,
    DivisionByZero,
    DuplicateRow,
    EmptyInput,
    IncompleteMetadata,
    InsufficientData,
    InsufficientUniverse,
    InvalidParameter,
    LeadLagError,
    LengthMismatch,
    MalformedResponse,
    NoValidDirection,
    NoWindows,
    RangeError,
    SchemaError,
    SchemaViolation,
    ScoringFailed,
    SingularDesign,
    UnknownMarket,
)
from .evaluation import (
    EvaluationReport,
    Metrics,
    PortfolioEntry,
    WindowSpec,
    aggregate_metrics,
    compare_reports,
    filter_universe,
    loss_reduction,
    make_windows,
    report_to_dict,
    run_pipeline,
    write_report_json,
)
from .granger import (
    GrangerResult,
    OlsFit,
    RankedCandidates,
    best_direction,
    f_tail,
    granger_test,
    ols_fit,
    screen_pairs,
)
from .ingest import load_metadata, load_prices
from .semantic import (
    EventMetadata,
    ResponseCache,
    ScorerConfig,
    SemanticVerdict,
    build_prompt,
    parse_verdict,
    rerank,
    score_candidates,
    score_pair,
    strength_rank,
)
from .series import (
    ComovementSign,
    PriceSeries,
    StationarySignal,
    align_prices,
    align_signals,
    as_changes,
    comovement_sign,
    difference,
    integrate,
    inverse_log_odds,
    log_odds,
    relative_change,
)
from .stationarity import AdfResult, adf_test, make_stationary
from .synth import PlantedLink, build_universe, generate_market, plant_leadlag, planted_universe

__version__ = "0.1.0"
