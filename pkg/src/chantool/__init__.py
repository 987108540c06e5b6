"""Millimeter-wave channel modeling toolkit.

Subpackages cover diffraction-based blockage models, path loss fitting,
non-stationary cluster channel synthesis, channel-sounder waveform
processing, and stationarity analysis, plus a batch CLI over all of them.
"""

from chantool.analysis import (
    CorrelationMatrix,
    StationaryReport,
    los_power_track,
    pdp_correlation_matrix,
    stationary_intervals,
    xpr_db,
)
from chantool.archive import (
    ArchiveError,
    capture_sequence,
    read_archive,
    write_archive,
)
from chantool.blockage import (
    BlockageScenario,
    Cylinder,
    GeometryError,
    Screen,
    airy_zero,
    default_cylinder,
    default_screen,
    gtd_cylinder_attenuation,
    kirchhoff_screen_attenuation,
    metis_multi_screen_attenuation,
    metis_screen_attenuation,
    sweep_blocker,
)
from chantool.config import Config, ConfigError, parse_config
from chantool.core import (
    BAND_28,
    BAND_32,
    BAND_39,
    DB_FLOOR,
    SPEED_OF_LIGHT,
    CirSnapshot,
    FrequencyBand,
    Mpc,
    Point3,
    PowerDelayProfile,
    RandomStream,
    derive_substream,
    from_db,
    pdp_from_cir,
    to_db,
)
from chantool.gbsm import (
    CirSequence,
    GbsmConfig,
    SizingError,
    run_scenario,
)
from chantool.pathloss import (
    AbgModel,
    CiModel,
    PathLossSample,
    abg_eval,
    abg_fit,
    fi_preset,
    ci_eval,
    ci_fit,
    ci_preset,
)
from chantool.sounder import (
    LinkBudget,
    MpcExtractionPolicy,
    WaveformSpec,
    build_tx_waveform,
    deconvolve_cir,
    extract_mpcs,
    noise_floor_db,
    path_loss_from_power,
    received_power,
    rms_delay_spread,
    simulate_capture,
)

__version__ = "0.1.0"

__all__ = [
    "BAND_28",
    "BAND_32",
    "BAND_39",
    "DB_FLOOR",
    "SPEED_OF_LIGHT",
    "AbgModel",
    "ArchiveError",
    "BlockageScenario",
    "CiModel",
    "CirSequence",
    "CirSnapshot",
    "Config",
    "ConfigError",
    "CorrelationMatrix",
    "Cylinder",
    "FrequencyBand",
    "GbsmConfig",
    "GeometryError",
    "LinkBudget",
    "Mpc",
    "MpcExtractionPolicy",
    "PathLossSample",
    "Point3",
    "PowerDelayProfile",
    "RandomStream",
    "Screen",
    "SizingError",
    "StationaryReport",
    "WaveformSpec",
    "abg_eval",
    "abg_fit",
    "fi_preset",
    "airy_zero",
    "build_tx_waveform",
    "capture_sequence",
    "ci_eval",
    "ci_fit",
    "ci_preset",
    "deconvolve_cir",
    "default_cylinder",
    "default_screen",
    "derive_substream",
    "from_db",
    "extract_mpcs",
    "gtd_cylinder_attenuation",
    "kirchhoff_screen_attenuation",
    "los_power_track",
    "metis_multi_screen_attenuation",
    "metis_screen_attenuation",
    "noise_floor_db",
    "parse_config",
    "path_loss_from_power",
    "pdp_correlation_matrix",
    "pdp_from_cir",
    "read_archive",
    "received_power",
    "rms_delay_spread",
    "run_scenario",
    "simulate_capture",
    "stationary_intervals",
    "sweep_blocker",
    "to_db",
    "write_archive",
    "xpr_db",
    "__version__",
]
