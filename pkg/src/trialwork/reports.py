"""Verdict records for inequality and identity checks."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

DEFAULT_TOL = 1e-9
_TINY = 5e-324


@dataclass(frozen=True)
class BoundReport:
    """Outcome of checking ``lhs <= rhs``.

    ``slack = rhs - lhs`` and the bound counts as satisfied when
    ``slack >= -tol * scale``; ``tol`` and ``scale`` are kept in ``context``.
    """

    name: str
    lhs: float
    rhs: float
    slack: float
    satisfied: bool
    context: dict[str, Any] = field(default_factory=dict)

    @property
    def scale(self) -> float:
        return float(self.context.get("scale", 1.0))

    @property
    def relative_slack(self) -> float:
        return self.slack / self.scale

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "satisfied": self.satisfied,
            "context": self.context,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def upper_bound_report(name: str, lhs: float, rhs: float, tol: float = DEFAULT_TOL, scale: float | None = None, **context) -> BoundReport:
    """Report for ``lhs <= rhs``; ``scale`` defaults to ``|rhs|`` (floored to the tiniest positive double)."""
    lhs = float(lhs)
    rhs = float(rhs)
    scale = max(abs(rhs) if scale is None else scale, _TINY)
    slack = rhs - lhs
    ok = bool(math.isfinite(slack) and slack >= -tol * scale)
    context = {"tol": tol, "scale": float(scale), **context}
    return BoundReport(name, lhs, rhs, slack, ok, context)


def lower_bound_report(name: str, lhs: float, rhs: float, tol: float = DEFAULT_TOL, scale: float | None = None, **context) -> BoundReport:
    """Report for ``lhs >= rhs``; slack is ``lhs - rhs``."""
    lhs = float(lhs)
    rhs = float(rhs)
    scale = max(abs(rhs) if scale is None else scale, _TINY)
    slack = lhs - rhs
    ok = bool(math.isfinite(slack) and slack >= -tol * scale)
    context = {"tol": tol, "scale": float(scale), "direction": ">=", **context}
    return BoundReport(name, lhs, rhs, slack, ok, context)
