"""Exception hierarchy.

Every error carries a short machine-readable ``reason`` string so that the
command line layer can report failures without parsing messages.
"""

from __future__ import annotations

from typing import Any


class BlochGaugeError(Exception):
    """Base class; ``reason`` is a stable identifier, ``details`` is JSON-able."""

    reason = "error"

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.details = details

    def to_dict(self) -> dict[str, Any]:
        return {"reason": self.reason, "message": str(self), **self.details}


class ShapeError(BlochGaugeError):
    reason = "shape"


class SymmetryError(BlochGaugeError):
    reason = "symmetry"


class UnitarityError(BlochGaugeError):
    reason = "unitarity"


class BranchCutCollision(BlochGaugeError):
    reason = "branch-cut-collision"


class RefinementNeeded(BlochGaugeError):
    """The grid is too coarse for a continuity-based step to be trusted."""

    reason = "refinement-needed"


class StepTooLarge(RefinementNeeded):
    reason = "step-too-large"


class InvalidInput(BlochGaugeError):
    reason = "invalid-input"


class SplitTooLarge(BlochGaugeError):
    reason = "split-too-large"


class RetryExhausted(BlochGaugeError):
    reason = "retry-exhausted"


class SubdivisionNeeded(BlochGaugeError):
    reason = "subdivision-needed"


class LabelingFailure(RefinementNeeded):
    reason = "labeling-failure"


class ObstructionError(BlochGaugeError):
    """A nonzero Z2 index prevents the requested symmetric construction.

    Attributes
    ----------
    report : Z2Report
        Indices and certificate data of the failing family.
    stage : str
        Which step of the construction detected the obstruction.
    """

    reason = "obstructed"

    def __init__(self, message: str, report: Any = None, stage: str = "") -> None:
        super().__init__(message, stage=stage)
        self.report = report
        self.stage = stage

    def to_dict(self) -> dict[str, Any]:
        out = super().to_dict()
        if self.report is not None:
            out["report"] = self.report.to_dict()
        return out
