"""Outcome classes shared by the pipeline stages."""
from __future__ import annotations

from .regime import ConfigError


class InvariantBreach(RuntimeError):
    """A checked invariant failed; the run cannot be trusted."""

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}


class HonestFailure(RuntimeError):
    """The construction got stuck; nothing invalid was produced."""

    def __init__(self, stage: str, message: str, report: dict | None = None):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.report = report or {}


__all__ = ["ConfigError", "InvariantBreach", "HonestFailure"]
