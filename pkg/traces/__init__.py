from traces.generate import NotDiscreet, generate_traces
from traces.matching import (
    QAMatch,
    StackDeltaMismatch,
    UniquenessViolation,
    check_wellbracketed,
    classify,
    match_qa,
    matched_segments,
    segments_are_matched,
)
from traces.trace import StepKind, Trace, TraceStep, dump_trace, load_trace, parse_action

__all__ = [
    "NotDiscreet",
    "QAMatch",
    "StackDeltaMismatch",
    "StepKind",
    "Trace",
    "TraceStep",
    "UniquenessViolation",
    "check_wellbracketed",
    "classify",
    "dump_trace",
    "generate_traces",
    "load_trace",
    "match_qa",
    "matched_segments",
    "parse_action",
    "segments_are_matched",
]
