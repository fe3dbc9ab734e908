"""looptrust: loop estimates and confidence regions for single grayscale images."""

from .grid_image import (
    EDGE_LABEL,
    GrayImage,
    ImageFormatError,
    InvalidSpecError,
    PartitionLabeling,
    RingSpec,
    RingZone,
    Role,
    generate,
    load_image,
    load_labeling,
    save_image,
    save_labeling,
)
from .filtration import Direction, FilteredComplex, build
from .persistence import (
    DiagramPoint,
    PersistenceDiagram,
    bottleneck_distance,
    compute_diagram,
    load_diagram,
    save_diagram,
)

__version__ = "0.1.0"

from .partda import (  # noqa: E402
    ConfidenceRegion,
    DegenerateRegionError,
    InsufficientPixelsError,
    MatchResult,
    PartitionStats,
    confidence_region,
    localize_value,
    match_loops,
    partition_stats,
    persistence_interval,
    region_contains,
)
from .segmentation import (  # noqa: E402
    DegenerateSegmentationError,
    EdgeSet,
    UnsupportedNestingError,
    correct_misclassified,
    detect_edges,
    infer_roles,
    label_regions,
)
from .stda import (  # noqa: E402
    BootstrapBand,
    RankDeficiencyError,
    SquareRegion,
    band_to_regions,
    local_poly_smooth,
    stda_band,
    stratified_bootstrap,
)
from .sim_harness import (  # noqa: E402
    RingGeometry,
    StudyConfig,
    StudyResult,
    run_bias_study,
    run_coverage_study,
    run_misclassification_study,
    run_study,
)
