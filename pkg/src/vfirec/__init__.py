"""Voltage fluctuation indices, recreation of voltage fluctuations and flicker severity."""

__version__ = "0.1.0"

from .signal_io import (  # noqa: E402
    ModulationSpec,
    ParameterError,
    SampledWaveform,
    WaveformDataError,
    WaveformFormatError,
    load_waveform,
    save_waveform,
    synthesize_am,
)
from .vfi import (  # noqa: E402
    ChangeEvent,
    RmsSeries,
    VfiRecord,
    aggregate_vfi,
    compute_rms_series,
    compute_vfi,
    detect_changes,
)
from .recreate import (  # noqa: E402
    LevelTrajectory,
    RecreationError,
    RecreationParams,
    build_trajectory,
    representative_amplitudes,
    synthesize_from_trajectory,
)
from .flickermeter import FlickerResult, PinstSeries, compute_pinst, compute_pst, pst  # noqa: E402
from .evalstats import (  # noqa: E402
    CoefficientTable,
    EvalRow,
    StatisticsError,
    pearson_r_pst,
    run_evaluation,
    slope_a_pst,
)
