"""dialogcraft: documents -> dialogue flows -> collected dialogues -> evaluation."""

__version__ = "0.1.0"

from .models import (
    DataError,
    DialogueAct,
    DialogueFlow,
    DialogueRecord,
    DialogueScene,
    Document,
    Paragraph,
    RejectionReason,
    Section,
    Span,
    Turn,
)

__all__ = [
    "DataError",
    "DialogueAct",
    "DialogueFlow",
    "DialogueRecord",
    "DialogueScene",
    "Document",
    "Paragraph",
    "RejectionReason",
    "Section",
    "Span",
    "Turn",
    "__version__",
]
