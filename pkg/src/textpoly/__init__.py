"""textpoly: grow polygon annotations for scene text from single points.

A three-stage, recognition-guided pipeline: preset anchors scored by
recognition confidence, thin-plate-spline boundary refinement driven by a
recognition objective, and attention-based horizontal trimming. Ships
with a synthetic corpus generator and a detection evaluation harness.
"""

from .anchors import AnchorLattice, ScoredAnchor, default_lattice, generate_anchors, select_anchor
from .boundary import (
    BoundaryPolygon,
    RefineConfig,
    boundary_score,
    rectify_crop,
    refine_boundary,
    sample_boundary,
)
from .errors import (
    DegeneratePolygon,
    DegenerateRect,
    EmptyAnchorList,
    EmptySpan,
    FormatError,
    InstanceOutOfCanvas,
    OracleUnregistered,
    PointOutOfBounds,
    SchemaError,
    SingularSystem,
    TextPolyError,
    UnknownCharacter,
)
from .evaluate import (
    DistReport,
    EvalReport,
    MatchResult,
    match_points,
    match_polygons,
    sweep,
    sweep_grouped,
    sweep_points,
)
from .geometry import Point2, Polygon, Rect, area, centroid, iou, rect_to_polygon
from .manifest import AnnotationRecord, InstanceRecord, load_manifest, save_manifest
from .pipeline import PipelineConfig, PipelineTrace, run_corpus, run_instance
from .raster import (
    GrayImage,
    OverlayScene,
    crop_axis_aligned,
    emit_overlay_svg,
    read_image,
    sample_bilinear,
    write_image,
)
from .recognize import (
    CHARSET,
    GlyphAtlas,
    OracleRecognizer,
    RecognitionResult,
    TemplateRecognizer,
    aggregate_confidence,
    attention_row,
    default_atlas,
)
from .synth import (
    Curved,
    GroundTruth,
    Horizontal,
    Rotated,
    SceneSpec,
    TextInstance,
    make_corpus,
    render,
)
from .tps import TpsTransform, apply_tps, fit_tps
from .trim import TrimConfig, attended_span, binarize_attention, trim_boundary

__version__ = "0.1.0"
