from equiv.certificate import acheck_certificate, check_certificate
from equiv.deciders import ConfigurationMismatch, bisim_ordinary, bisim_seq, bisim_wb, seq_config
from equiv.dispatch import MODES, Query, acheck_many, check
from equiv.engine import Engine, replay
from equiv.games import SeqTyping, game_for
from equiv.spotcheck import TypedContext, barbed_spotcheck, sample_contexts
from equiv.verdict import ChallengeFailure, Outcome, Verdict, WitnessStep

__all__ = [
    "MODES",
    "ChallengeFailure",
    "ConfigurationMismatch",
    "Engine",
    "Outcome",
    "Query",
    "SeqTyping",
    "TypedContext",
    "Verdict",
    "WitnessStep",
    "acheck_certificate",
    "acheck_many",
    "barbed_spotcheck",
    "bisim_ordinary",
    "bisim_seq",
    "bisim_wb",
    "check",
    "check_certificate",
    "game_for",
    "replay",
    "sample_contexts",
    "seq_config",
]
