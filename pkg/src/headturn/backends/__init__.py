"""Perception/decision backend implementations."""

from __future__ import annotations

from typing import Optional

from .remote import BackendConfig, RemoteDecision, RemotePerception, parse_action, remote_call
from .scripted import ScriptedDecision, ScriptedPerception, ScriptedPolicy, scripted_decide, scripted_perceive


def make_backends(config: BackendConfig, policy: Optional[ScriptedPolicy] = None):
    """Return ``(perception, decision)`` backends for ``config``."""
    if config.kind == "remote":
        return RemotePerception(config), RemoteDecision(config)
    return ScriptedPerception(policy), ScriptedDecision(policy, seed=config.seed)


__all__ = [
    "BackendConfig",
    "RemoteDecision",
    "RemotePerception",
    "ScriptedDecision",
    "ScriptedPerception",
    "ScriptedPolicy",
    "make_backends",
    "parse_action",
    "remote_call",
    "scripted_decide",
    "scripted_perceive",
]
