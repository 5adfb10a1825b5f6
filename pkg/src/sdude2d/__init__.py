"""Switching discrete denoising of 2-D finite-alphabet data.

Denoises grids corrupted by a known discrete memoryless channel by
competing with quadtree-segmented, region-switching sliding-window rules:
2-D contexts select per-cell rule families, a Hilbert scan linearizes the
grid so that every dyadic quadrant is one contiguous run, and an exact
bounded-switching dynamic program picks the rules from an unbiased
estimated loss. Brute-force genie oracles certify optimality on small
instances.
"""

from .denoise import (
    MODES,
    DenoiseConfig,
    DPState,
    SwitchingSchedule,
    apply_schedule,
    denoise,
    dude_per_context,
    sdude_dp,
)
from .geometry import (
    ContextNeighborhood,
    PHOrder,
    QuadTree,
    RegionMap,
    context_at,
    ph_order,
    quadtree_enumerate,
    raster_order,
    region_map,
    spiral_offsets,
)
from .harness import (
    DEFAULT_RECIPES,
    ExperimentConfig,
    MetricsReport,
    ber,
    corrupt,
    interior_region,
    parse_experiment_config,
    run_experiment,
    synthesize_composite,
)
from .model import (
    Alphabet,
    ChannelError,
    ChannelModel,
    EstimatedLossTable,
    Grid,
    LossFunction,
    SingleSymbolDenoiser,
    bsc,
    build_estimated_loss,
    channel_from_spec,
    crop_valid,
    cumulative_estimated_loss,
    cumulative_true_loss,
    expected_loss_matrix,
    hamming_loss,
    loss_from_spec,
    make_grid,
    unbiasedness_gap,
    validate_channel,
)
from .oracle import (
    BoundParams,
    GenieReport,
    binary_entropy,
    bruteforce_ph_class,
    bruteforce_qt_class,
    format_report,
    genie_fixed,
    split_count_lower_bound,
    parse_report,
    excess_loss_bound,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
