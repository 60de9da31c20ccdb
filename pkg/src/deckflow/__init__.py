"""DeckFlow: a collaborative generative canvas.

Documents are dataflow graphs of multimodal cards. Action cards compose
their connected inputs into three prompt variants and fan each out to three
samples; a model-affinity hub schedules the resulting jobs across workers.
"""

from .adapters import AdapterSet, AdapterSpec, FixtureTable, load_adapter_specs
from .docfile import (
    CLIP_FORMAT,
    DOC_FORMAT,
    LOG_FORMAT,
    build_clipboard,
    canonical_json,
    document_hash,
    document_payload,
    documents_equal,
    load_document,
    read_log,
    save_document,
    write_log,
)
from .document import Document
from .engine import Engine
from .errors import DeckFlowError
from .hub import Job, JobState, JobType, WorkerHub
from .model import (
    ActionCard,
    AssetRef,
    Cluster,
    DataCard,
    GenState,
    GenStateName,
    Modality,
    Position,
    Provenance,
    Size,
    Slot,
)
from .replay import replay_log
from .store import DocumentStore
from .templates import TemplateStore

__version__ = "0.1.0"

__all__ = [
    "ActionCard",
    "AdapterSet",
    "AdapterSpec",
    "AssetRef",
    "CLIP_FORMAT",
    "Cluster",
    "DOC_FORMAT",
    "DataCard",
    "DeckFlowError",
    "Document",
    "DocumentStore",
    "Engine",
    "FixtureTable",
    "GenState",
    "GenStateName",
    "Job",
    "JobState",
    "JobType",
    "LOG_FORMAT",
    "Modality",
    "Position",
    "Provenance",
    "Size",
    "Slot",
    "TemplateStore",
    "WorkerHub",
    "build_clipboard",
    "canonical_json",
    "document_hash",
    "document_payload",
    "documents_equal",
    "load_adapter_specs",
    "load_document",
    "read_log",
    "replay_log",
    "save_document",
    "write_log",
    "__version__",
]
