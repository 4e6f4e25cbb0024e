"""regionkit: region-grounded report parsing, matching, and evaluation.

The package splits into small layers: geometry (boxes, masks, IoU), markup
(the <ref>/<box> grammar), assignment (optimal matching), region_eval and
text_metrics (scoring), forge (dataset construction), cot (two-stage
orchestration against a model endpoint), and the cli gluing them into batch
workflows.
"""

from .assignment import Assignment, ScoreMatrix, hungarian_match
from .corpus import (
    CorpusRecord,
    RunConfig,
    load_config_file,
    load_synonyms,
    read_corpus,
    resolve_config,
    write_corpus,
)
from .cot import (
    CotConfig,
    CotTrace,
    HttpModelTransport,
    MockTransport,
    ModelTransport,
    RetryingTransport,
    compose_detect_prompt,
    compose_final_prompt,
    run_regional_cot,
)
from .errors import (
    ConfigError,
    CorpusError,
    DanglingBoxError,
    DegenerateBoxError,
    EmptyCorpusError,
    EmptyMaskError,
    EmptyReferenceError,
    InvalidBoxError,
    LexiconError,
    MalformedBoxError,
    MarkupError,
    MissingPlaceholderError,
    RefWithoutBoxError,
    RegionKitError,
    TemplateDirectionMismatchError,
    TemplateError,
    TransportError,
    TransportTimeoutError,
    UnclosedTagError,
)
from .forge import (
    AssembledReport,
    Direction,
    ForgedSample,
    HttpSegmenterClient,
    OrganLexicon,
    SegmenterClient,
    Template,
    assemble_grounded_report,
    default_lexicon,
    default_templates,
    fill_template,
    forge_region_samples,
    load_mask,
    load_templates,
    segment_report,
    segment_report_with_fallback,
    split_sentences,
)
from .geometry import BBox, MaskGrid, PixelBox, iou, mask_to_boxes, normalize_box
from .markup import (
    Annotation,
    GroundedDocument,
    ObjectRegionPair,
    ParseIssue,
    ParseResult,
    PlainText,
    extract_pairs,
    parse_grounded_text,
    parse_pairs,
    render_boxes,
    render_pair,
    serialize_grounded_text,
)
from .region_eval import (
    CorpusMetrics,
    MetricSummary,
    SampleMetrics,
    TaskKind,
    aggregate,
    classify_task,
    eval_sample,
    normalize_object_text,
)
from .report import (
    flatten_report,
    render_tables,
    write_metrics_csv,
    write_metrics_file,
    write_metrics_json,
)
from .scoring import (
    EvalReport,
    RecordError,
    RecordScore,
    TextSummary,
    build_report,
    evaluate_corpus,
    score_record,
)
from .text_metrics import (
    Language,
    TextScores,
    TokenSequence,
    VqaScores,
    bleu,
    meteor_lite,
    rouge_l,
    score_text_pair,
    tokenize,
    vqa_scores,
)

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "AssembledReport",
    "Assignment",
    "BBox",
    "ConfigError",
    "CorpusError",
    "CorpusMetrics",
    "CorpusRecord",
    "CotConfig",
    "CotTrace",
    "DanglingBoxError",
    "DegenerateBoxError",
    "Direction",
    "EmptyCorpusError",
    "EmptyMaskError",
    "EmptyReferenceError",
    "EvalReport",
    "ForgedSample",
    "GroundedDocument",
    "HttpModelTransport",
    "HttpSegmenterClient",
    "InvalidBoxError",
    "Language",
    "LexiconError",
    "MalformedBoxError",
    "MarkupError",
    "MaskGrid",
    "MetricSummary",
    "MissingPlaceholderError",
    "MockTransport",
    "ModelTransport",
    "ObjectRegionPair",
    "OrganLexicon",
    "ParseIssue",
    "ParseResult",
    "PixelBox",
    "PlainText",
    "RecordError",
    "RecordScore",
    "RefWithoutBoxError",
    "RegionKitError",
    "RetryingTransport",
    "RunConfig",
    "SampleMetrics",
    "ScoreMatrix",
    "SegmenterClient",
    "TaskKind",
    "Template",
    "TemplateDirectionMismatchError",
    "TemplateError",
    "TextScores",
    "TextSummary",
    "TokenSequence",
    "TransportError",
    "TransportTimeoutError",
    "UnclosedTagError",
    "VqaScores",
    "aggregate",
    "assemble_grounded_report",
    "bleu",
    "build_report",
    "classify_task",
    "compose_detect_prompt",
    "compose_final_prompt",
    "default_lexicon",
    "default_templates",
    "eval_sample",
    "evaluate_corpus",
    "extract_pairs",
    "fill_template",
    "flatten_report",
    "forge_region_samples",
    "hungarian_match",
    "iou",
    "load_config_file",
    "load_mask",
    "load_synonyms",
    "load_templates",
    "mask_to_boxes",
    "meteor_lite",
    "normalize_box",
    "normalize_object_text",
    "parse_grounded_text",
    "parse_pairs",
    "read_corpus",
    "render_boxes",
    "render_pair",
    "render_tables",
    "rouge_l",
    "run_regional_cot",
    "score_record",
    "score_text_pair",
    "serialize_grounded_text",
    "split_sentences",
    "tokenize",
    "vqa_scores",
    "write_corpus",
    "write_metrics_csv",
    "write_metrics_file",
    "write_metrics_json",
]
