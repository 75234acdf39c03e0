"""crowdforge: semi-synthetic supervision for human-and-shadow removal.

Builds (input, mask, ground-truth) video triplets by compositing segmented
human foregrounds with simulated shadows onto filtered background clips,
plus the scoring, curation, and provenance tooling around them.
"""

from .clips import (
    ClipSpan,
    Frame,
    FrameSequence,
    InstanceMaskSequence,
    load_frame_sequence,
    load_instance_masks,
    save_frame_sequence,
    save_instance_masks,
    segment_into_clips,
)
from .compositing import (
    Triplet,
    apply_shadow,
    compose_triplet,
    load_triplet,
    overlay_foreground,
    write_triplet,
)
from .errors import (
    ConfigError,
    CrowdforgeError,
    DependencyError,
    EmptyInputError,
    FormatError,
    ProtocolError,
    ScorerError,
    ShapeError,
    ValidationError,
)
from .filters import (
    FilterConfig,
    FilterVerdict,
    Histogram,
    detect_scene_transitions,
    evaluate_background,
    grayscale_histogram,
    histogram_correlation,
    luminance_pass,
    mean_luminance,
    person_count_pass,
    ssim,
)
from .losses import (
    LossConfig,
    NoiseResidualClip,
    base_loss,
    combined_loss,
    combined_loss_grad,
    finite_diff_grad_check,
    motion_sub_loss,
)
from .manifest import (
    DatasetManifest,
    ManifestEntry,
    ReviewDecision,
    read_manifest,
    write_manifest,
)
from .metrics import (
    ClipScore,
    ReportTable,
    build_report,
    clip_ssim,
    in_mask_psnr,
    psnr,
    render_report,
    run_external_scorer,
    score_clip,
)
from .pipeline import PipelineConfig, StageReport, run_stage
from .review import create_app, export_curated, serve
from .seeding import derive_clip_seed, fnv1a64
from .selection import (
    CrowdStats,
    SelectionConfig,
    assign_bin,
    compute_crowd_stats,
    crowd_percent,
    masked_frame_count,
    stratified_sample,
)
from .shadows import (
    Pivot,
    ShadowParams,
    ShadowSamplerConfig,
    SoftShadowMap,
    build_shadow_affine,
    estimate_pivot,
    render_clip_shadows,
    sample_shadow_params,
    soften,
    warp_mask,
)

__version__ = "0.1.0"
