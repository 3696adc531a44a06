"""layoutloop: an iterative layout-revision engine.

Design codes are small line-based documents; revision trajectories record how
a layout evolves toward a final design. The package synthesizes trajectories,
samples training examples from them, builds multimodal prompt bundles, runs
multi-round refinement with pluggable reviser backends (detecting echo-chamber
collapse), and evaluates outcomes with rendered-layout Frechet distance,
ROUGE-L, and identical-rate metrics.
"""

from .core import (
    ClassRegistry,
    Element,
    ElementClass,
    LayoutDoc,
    ParseError,
    ValidationReport,
    Violation,
    clip_layout,
    default_registry,
    parse_layout_code,
    serialize_layout_code,
    token_count,
    validate_layout,
)
from .render import Bitmap, ColorLegend, default_legend, encode_png, render, render_png
from .metrics import (
    FidResult,
    TextMetrics,
    embed,
    embed_population,
    fid,
    identical_rate,
    rouge_l,
    text_metrics,
)
from .trajectory import (
    Corpus,
    CorpusError,
    RevisionTrajectory,
    Source,
    Split,
    StageProfile,
    SynthConfig,
    load_corpus,
    save_corpus,
    stage_profile,
    synthesize_corpus,
    synthesize_trajectory,
)
from .sampler import (
    SamplerConfig,
    Setup,
    Strategy,
    TrainingExample,
    expand_corpus,
    sample_direct,
    sample_hop_j_then_i,
    sample_hop_quantized,
    sample_multi_revision,
    sample_single_revision,
)
from .prompts import (
    DecodingParams,
    PartKind,
    PromptBudgetError,
    PromptBundle,
    PromptPart,
    build_direct_prompt,
    build_revision_prompt,
    render_prompt_text,
)
from .backends import (
    BackendError,
    EchoReviser,
    GenerationResult,
    HeuristicReviser,
    RecordingBackend,
    RemoteConfig,
    RemoteReviser,
    ReviserBackend,
)
from .orchestrator import (
    ChainConfig,
    ChainReport,
    ChainSession,
    SessionState,
    SessionStatus,
    direct_infer,
    evaluate_run,
    guided_infer,
    run_chain,
    run_chain_with_human,
)

__version__ = "0.1.0"
