"""Reports shared by the theorem harnesses."""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["RedEvent", "HarnessReport", "PreconditionError", "SAMPLED_NOTE"]

SAMPLED_NOTE = "hypotheses verified on samples only"


class PreconditionError(ValueError):
    """A harness input does not meet a structural requirement (not a sampled hypothesis)."""


@dataclass(frozen=True)
class RedEvent:
    """A conclusion that failed while every hypothesis held on the samples."""

    message: str
    witness: dict | None = None
    annotation: str | None = None

    def to_json(self) -> dict:
        out = {"message": self.message, "witness": self.witness}
        if self.annotation:
            out["annotation"] = self.annotation
        return out


@dataclass(frozen=True)
class HarnessReport:
    theorem: str
    hypotheses: tuple = ()
    conclusions: tuple = ()
    red_events: tuple = ()
    skipped: bool = False
    skip_reasons: tuple = ()
    notes: tuple = (SAMPLED_NOTE,)
    details: dict = field(default_factory=dict)

    @property
    def red_event(self) -> bool:
        return bool(self.red_events)

    @property
    def passed(self) -> bool:
        return not self.skipped and not self.red_events

    def to_json(self) -> dict:
        return {
            "theorem": self.theorem,
            "skipped": self.skipped,
            "skip_reasons": list(self.skip_reasons),
            "red_event": self.red_event,
            "red_events": [e.to_json() for e in self.red_events],
            "hypotheses": [_json(v) for v in self.hypotheses],
            "conclusions": [_json(v) for v in self.conclusions],
            "notes": list(self.notes),
            "details": self.details,
        }


def _json(obj):
    return obj.to_json() if hasattr(obj, "to_json") else obj


def skipped(theorem: str, reasons, hypotheses=(), notes=(SAMPLED_NOTE,), details=None) -> HarnessReport:
    return HarnessReport(
        theorem,
        hypotheses=tuple(hypotheses),
        skipped=True,
        skip_reasons=tuple(reasons),
        notes=tuple(notes),
        details=details or {},
    )
