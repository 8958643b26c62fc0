"""Open-vocabulary human-object interaction evaluation toolkit."""

from .aggregation import TripletFrequency, pool, select_sampling, select_topk, triplet_key
from .config import PipelineConfig, RunManifest, config_hash
from .datamodel import (
    Detection,
    EvalSample,
    GroundTruthInteraction,
    PredictedInteraction,
    Protocol,
    Rarity,
    RaritySplit,
    filter_detections,
    load_annotations,
    normalize_label,
)
from .errors import (
    ConfigurationError,
    HoiEvalError,
    ImageError,
    PhraseLookupError,
    SchemaError,
    TransportError,
    UndefinedMetricError,
    ValidationError,
)
from .extraction import (
    RawTriplet,
    RefinementConfig,
    extract_rule_based,
    extract_t2g,
    parse_structured,
    refine,
)
from .generation import (
    ChatCompletionsProvider,
    GenerationRequest,
    GenerationResponse,
    MockProvider,
    PromptKind,
    generate_batch,
    render_prompt,
)
from .geometry import BoundingBox, iou, spatial_match, union_box
from .metrics import (
    EvalConfig,
    MetricReport,
    aggregate_report,
    report_to_dict,
    report_to_json,
    semantic_map,
    semantic_recall,
)
from .pairing import HumanObjectPair, VisualPromptMode, build_pairs, render_visual_prompt
from .vocabulary import (
    FileVectorProvider,
    HttpEmbeddingProvider,
    IdentityStringSimilarity,
    SimilarityProvider,
    VerbVocabulary,
    filter_wordnet_verbs,
    map_to_vocabulary,
)

__version__ = "0.1.0"
