"""Link-preview card engine plus a sharing-card forgery scanner.

Exposes the pieces most callers need: the card model, the persona
fetcher, the differential detector, the SDK emulator, the preview cache,
and the lab scenario servers.
"""

from .cards import (
    BUILTIN_PROFILES,
    CardMetadata,
    Namespace,
    PlatformProfile,
    TagBag,
    extract_tags,
    render_card,
    resolve_card,
)
from .detector import (
    DivergenceReport,
    ReputationList,
    Thresholds,
    Verdict,
    consistency_audit,
    differential_scan,
    direct_link_gate,
    reputation_check,
)
from .fetcher import (
    BROWSER_PERSONA,
    CRAWLER_PERSONA,
    FetchLimits,
    Fetcher,
    Hop,
    HopKind,
    Persona,
    PersonaLabel,
    RedirectChain,
)
from .app import AppState
from .cache import PreviewCache
from .config import Config, load_config
from .lab import builtin_scenario, lab_start, lab_stop
from .sdk import SdkCardRequest, SdkEmulator, SdkMode
from .unfurl import UnfurlResult, unfurl

__version__ = "0.1.0"

__all__ = [
    "AppState",
    "BUILTIN_PROFILES",
    "BROWSER_PERSONA",
    "CRAWLER_PERSONA",
    "CardMetadata",
    "Config",
    "DivergenceReport",
    "FetchLimits",
    "Fetcher",
    "Hop",
    "HopKind",
    "Namespace",
    "Persona",
    "PersonaLabel",
    "PlatformProfile",
    "PreviewCache",
    "RedirectChain",
    "ReputationList",
    "SdkCardRequest",
    "SdkEmulator",
    "SdkMode",
    "TagBag",
    "Thresholds",
    "UnfurlResult",
    "Verdict",
    "builtin_scenario",
    "consistency_audit",
    "differential_scan",
    "direct_link_gate",
    "extract_tags",
    "lab_start",
    "lab_stop",
    "load_config",
    "render_card",
    "reputation_check",
    "resolve_card",
    "unfurl",
]
