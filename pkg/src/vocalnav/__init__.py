"""Audio-guided navigation with trust assessment of spoken commands.

Pipeline: decode audio -> prosodic cue extraction -> transcript disfluency
analysis -> cue/word alignment -> multiple-choice action prompt -> label
probabilities -> action selection -> simulated navigation and metrics.
"""

__version__ = "0.1.0"

from ._kernels import KERNEL_BACKEND
from .audio import AudioClip, VocalCueReport, decode_audio, extract_vocal_cues
from .backends import HttpBackend, MockBackend
from .config import PipelineConfig, load_config
from .corpus import CorpusSpec, generate_corpus, load_manifest
from .decision import confidence_score, decide, pssr, select_action
from .language import Transcript, align, detect_semantic_flags, parse_transcript
from .navsim import Environment, episode_metrics, execute, shortest_path
from .pipeline import run_clips, run_robustness
from .prompting import TokenDistribution, build_prompt, request_options, score_options

__all__ = [
    "KERNEL_BACKEND",
    "__version__",
    "AudioClip",
    "VocalCueReport",
    "decode_audio",
    "extract_vocal_cues",
    "HttpBackend",
    "MockBackend",
    "PipelineConfig",
    "load_config",
    "CorpusSpec",
    "generate_corpus",
    "load_manifest",
    "confidence_score",
    "decide",
    "pssr",
    "select_action",
    "Transcript",
    "align",
    "detect_semantic_flags",
    "parse_transcript",
    "Environment",
    "episode_metrics",
    "execute",
    "shortest_path",
    "run_clips",
    "run_robustness",
    "TokenDistribution",
    "build_prompt",
    "request_options",
    "score_options",
]
