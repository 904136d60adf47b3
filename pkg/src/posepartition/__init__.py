"""posepartition: decode multi-person poses from joint confidence maps and
dense joint-to-centroid regression maps.

The package covers the full loop: synthesizing ground-truth map pairs from
annotated scenes, detecting joint candidates, partitioning them into person
hypotheses via centroid votes, assembling per-person joint configurations
greedily, and scoring the results against ground truth.
"""
from .config import PipelineConfig, load_config
from .corpus import CorpusSpec, generate_corpus
from .detect import DetectorParams, JointCandidate, detect_candidates
from .errors import (
    AnnotationError,
    ConfigurationError,
    DimensionError,
    EvaluationError,
    MapFormatError,
    ParameterError,
    PartitionScoreError,
    PipelineError,
    SchemaError,
)
from .evaluate import (
    EvalReport,
    HeadSizeSource,
    MatchParams,
    average_precision,
    count_metrics,
    evaluate_corpus,
    match_poses,
)
from .infer import (
    JointEstimate,
    PersonPose,
    PoseSet,
    ProximityReport,
    energy,
    greedy_infer,
    infer_all,
    pairwise,
    proximity_report,
    unary,
)
from .maps import (
    ConfidenceMapSet,
    ForwardParams,
    LossBreakdown,
    RegressionMapSet,
    build_confidence_maps,
    build_regression_maps,
    combined_loss,
    map_loss,
)
from .partition import (
    ClusterParams,
    Partition,
    Vote,
    cluster_votes,
    default_link_threshold,
    embed,
    partition_score,
    vote_density,
)
from .pipeline import DecodeResult, decode_maps, synth_maps
from .pmap import read_map_set, write_map_set
from .scene import (
    AugmentParams,
    JointGroup,
    JointSpec,
    PersonAnnotation,
    Scene,
    augment,
    derive_centroid,
    load_scene,
    mpii_joint_layout,
    perturb_overlapping_centroids,
    person_centroid,
    save_scene,
)

__version__ = "0.1.0"
