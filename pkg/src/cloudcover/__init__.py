"""Compare satellite cloud-mask grids with ground-based sky-camera coverage.

The pipeline has four stages, each usable on its own:

- `skyimage`: load fisheye captures and segment clouds by red/blue ratio
- `maskgrid`: parse CMG1 mask grids, decode codes, query neighborhoods
- `matching`: join satellite observations to nearest-in-time camera frames
- `analysis`: per-bin statistics and correlations over the matched pairs

The `cloudcover` CLI (see `cloudcover.cli`) orchestrates them end to end.
"""

from .analysis import (
    BinSpec,
    BinSummary,
    TrendReport,
    assign_bin,
    bins_for_mode,
    equal_width_bins,
    five_number_summary,
    nearest_level_bins,
    pearson,
    spearman,
    trend_report,
    write_correlation_txt,
    write_trend_csv,
    write_trend_svg,
)
from .config import (
    DEFAULT_SITE_LAT,
    DEFAULT_SITE_LON,
    ConfigError,
    PipelineConfig,
    load_config,
)
from .maskgrid import (
    INVALID,
    VALID_CODES,
    CloudMaskGrid,
    CmgParseError,
    NeighborhoodAverage,
    NoValidDataError,
    cmg_text,
    confidence_cloudiness,
    decode_clear_confidence,
    emit_cmg,
    haversine_km,
    nearest_pixel,
    neighborhood_average,
    normalize_code,
    normalized_cloudiness,
    parse_cmg,
    render_mask,
)
from .matching import (
    CAMERA,
    DEFAULT_MAX_DELTA_S,
    SATELLITE,
    Catalog,
    MatchedPair,
    MatchError,
    MatchResult,
    Observation,
    build_catalog,
    match_all,
    match_nearest,
    write_pairs_csv,
    write_unmatched_csv,
)
from .skyimage import (
    CLOUD,
    DEFAULT_THRESHOLD,
    SKY,
    UNDEFINED,
    CircleRoi,
    CloudBinaryMap,
    ImageLoadError,
    NoValidPixelsError,
    SkyImage,
    circle_mask,
    cloud_coverage,
    load_sky_image,
    read_manifest,
    segment_clouds,
)
from .synth import SynthParams, generate_dataset

__version__ = "0.1.0"
