from .engine import (
    EngineOutput,
    LaunchRequest,
    ProblemSetError,
    SessionNotFound,
    SessionState,
    TutoringEngine,
)
from .eventlog import EventRecord, LogCorrupt, LogWriter, read_records, record_to_json
from .notify import DeliveryError, DeliveryReceipt, notify_caregiver
from .replay import Divergence, ReplayResult, replay

__all__ = [
    "Divergence",
    "DeliveryError",
    "DeliveryReceipt",
    "EngineOutput",
    "EventRecord",
    "LaunchRequest",
    "LogCorrupt",
    "LogWriter",
    "ProblemSetError",
    "ReplayResult",
    "SessionNotFound",
    "SessionState",
    "TutoringEngine",
    "notify_caregiver",
    "read_records",
    "record_to_json",
    "replay",
]
