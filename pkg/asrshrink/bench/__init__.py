from asrshrink.bench.config import (  # noqa: F401
    BenchConfig, CorpusConfig, Decode, LMConfig, RunConfig, ShrinkConfig, Strategy, default_grid,
)
from asrshrink.bench.harness import (  # noqa: F401
    BenchReport, BenchRow, Harness, StrategyMismatchError, build_model, check_compatible, environment, run_eval,
    sweep, train_language_model,
)
from asrshrink.bench.macs import (  # noqa: F401
    WAVLM_LARGE_ENCODER, WAVLM_LARGE_FRONTEND, MacEstimate, attention_cost, decoder_macs, layer_macs, linear_cost,
    mac_estimate,
)
from asrshrink.bench.report import (  # noqa: F401
    ReportFormat, ReportFormatError, dumps, dumps_csv, emit, parse_csv, read_report,
)
