"""Error types shared across the document, composition, scheduling, and network layers.

Every error carries a stable ``code`` string so the wire protocol and the CLI
can report failures uniformly without string-matching exception classes.
"""

from __future__ import annotations


class DeckFlowError(Exception):
    """Base class; ``code`` is the stable machine-readable identifier."""

    code = "error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__doc__ or self.code)

    @property
    def message(self) -> str:
        return str(self)


# --- document graph ---

class InvalidPosition(DeckFlowError):
    """Position coordinates must be finite numbers."""
    code = "invalid_position"


class ContentTypeMismatch(DeckFlowError):
    """Card content does not match the card kind."""
    code = "content_type_mismatch"


class MissingCard(DeckFlowError):
    """No card with that id in the document."""
    code = "missing_card"


class MissingAction(DeckFlowError):
    """No action card with that id in the document."""
    code = "missing_action"


class MissingSlot(DeckFlowError):
    """No slot with that id on the action card."""
    code = "missing_slot"


class MissingEndpoint(DeckFlowError):
    """Connection endpoint does not resolve to a data card or cluster."""
    code = "missing_endpoint"


class SelfConnection(DeckFlowError):
    """A slot may not be connected to its own action card."""
    code = "self_connection"


class AlreadyClustered(DeckFlowError):
    """A data card can belong to at most one cluster."""
    code = "already_clustered"


class NonDataMember(DeckFlowError):
    """Only data cards can be cluster members."""
    code = "non_data_member"


class EmptySelection(DeckFlowError):
    """The selection resolves to no entities."""
    code = "empty_selection"


class MalformedClipboard(DeckFlowError):
    """Clipboard text is not a valid clip payload; ``position`` locates the first error."""
    code = "malformed_clipboard"

    def __init__(self, message: str, position: int = 0):
        super().__init__(message)
        self.position = position


class MediaImmutable(DeckFlowError):
    """Image/audio content cannot change once generation succeeded."""
    code = "media_immutable"


# --- lifecycle ---

class IllegalTransition(DeckFlowError):
    """Requested state change is not in the transition table."""
    code = "illegal_transition"

    def __init__(self, from_state: str, to_state: str):
        super().__init__(f"illegal transition: {from_state} -> {to_state}")
        self.from_state = from_state
        self.to_state = to_state


class MissingPayload(DeckFlowError):
    """Success transition for a media card requires content bytes."""
    code = "missing_payload"


# --- composition ---

class SourceNotReady(DeckFlowError):
    """Input card is not in the success state."""
    code = "source_not_ready"


class InterpretationFailed(DeckFlowError):
    """No way to resolve the input to text."""
    code = "interpretation_failed"


class NoInputs(DeckFlowError):
    """Nothing usable is connected to the action card."""
    code = "no_inputs"


class EmptyGoal(DeckFlowError):
    """Goal text is empty after trimming."""
    code = "empty_goal"


class DecompositionParseError(DeckFlowError):
    """Adapter output did not parse as a label/value list; carries the raw text."""
    code = "decomposition_parse_error"

    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


class EmptyCluster(DeckFlowError):
    """Cluster has no members to interpret."""
    code = "empty_cluster"


# --- adapters ---

class AdapterFailure(DeckFlowError):
    """A generation/interpretation backend call failed."""
    code = "adapter_failure"


class ConfigMissing(DeckFlowError):
    """Adapter configuration is incomplete; raised at startup, not at call time."""
    code = "config_missing"


# --- scheduling ---

class TargetMissing(DeckFlowError):
    """Job target card does not exist or is not awaiting generation."""
    code = "target_missing"


class UnknownJob(DeckFlowError):
    """Job id does not name a live job (finished, cancelled, or never existed)."""
    code = "unknown_job"


class DuplicateRegistration(DeckFlowError):
    """This connection already registered a worker."""
    code = "duplicate_registration"


# --- storage / gateway ---

class AssetNotFound(DeckFlowError):
    """No stored asset with that id."""
    code = "asset_not_found"


class AssetTooLarge(DeckFlowError):
    """Asset exceeds the configured size cap."""
    code = "asset_too_large"


class AssetCorrupt(DeckFlowError):
    """Stored bytes no longer hash to the asset id."""
    code = "asset_corrupt"


class UnsupportedMediaType(DeckFlowError):
    """Uploaded file is not a recognized text/image/audio format."""
    code = "unsupported_media_type"


class StorageFailure(DeckFlowError):
    """Persistence layer failed; mutations are rejected until it recovers."""
    code = "storage_failure"


class DocLoadFailure(DeckFlowError):
    """Stored document could not be read or parsed."""
    code = "doc_load_failure"


class DocNotFound(DeckFlowError):
    """No document with that id."""
    code = "doc_not_found"


# --- cli ---

class PortInUse(DeckFlowError):
    """The requested listen port is already bound."""
    code = "port_in_use"


class BadConfig(DeckFlowError):
    """Configuration file is invalid; message names the offending field."""
    code = "bad_config"


class LogFormatError(DeckFlowError):
    """Event log line is not a valid request envelope."""
    code = "log_format_error"
