"""bwckit: body-worn-camera footage analysis pipeline."""

from .corpus import (
    AudioChunk,
    AudioTrack,
    DatasetSummary,
    VideoAsset,
    dataset_stats,
    extract_audio,
    scan_dataset,
    split_audio,
)
from .ensemble import (
    EnsembleWeights,
    FeatureVector,
    LabeledExample,
    calibrate_weights,
    extract_audio_features,
    extract_image_features,
    extract_text_features,
    fuse,
)
from .insights import (
    Correction,
    IncidentSummary,
    apply_corrections,
    extract_indicators,
    save_insights,
    summarize,
)
from .quality import (
    ComparisonReport,
    QualityMetrics,
    TokenizedTranscript,
    compare_models,
    coverage_gap,
    nonstandard_chars,
    oov_words,
    repeated_lines,
    tokenize,
)
from .separation import SeparationBackendDescriptor, SpeakerLinkage, SpeakerStream, link_speakers, separate
from .store import IncidentRecord, IncidentStore, QueryFilter
from .transcription import (
    MergedTranscript,
    TranscriptSegment,
    TranscriptionBackendDescriptor,
    attribute_roles,
    merge_transcripts,
    transcribe,
)

__version__ = "0.1.0"
