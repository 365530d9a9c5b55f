"""Streaming checkers for priority-queue operation histories."""

from .bidir import BidirVerdict, check_bidir, check_bidir_dup, pad_trace
from .fingerprint import FingerprintContext, context_for, make_context
from .oracle import check_collection, check_pq, check_pq_ts
from .reverse import ReverseVerdict, check_reverse
from .trace import Operation, Trace, compute_stats, ext, ins, parse_trace, serialize_trace

__all__ = [
    "BidirVerdict", "FingerprintContext", "Operation", "ReverseVerdict", "Trace",
    "check_bidir", "check_bidir_dup", "check_collection", "check_pq", "check_pq_ts",
    "check_reverse", "compute_stats", "context_for", "ext", "ins", "make_context",
    "pad_trace", "parse_trace", "serialize_trace",
]
