"""Chaos verdicts from curvature, Jacobi and entropy indicators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .ige import GrowthClass, GrowthClassification
from .jacobi import ExponentFit

#: Stretching requires an exponential fit at least this good.
STRETCH_R2 = 0.98
#: A Jacobi exponent counts as "zero" below this magnitude ...
REGULAR_EXPONENT = 0.05
#: ... or when the exponential fit is this poor.
REGULAR_R2 = 0.9

FOLDING_NOTE = (
    "folding supplied statistically: averaging over a Gaussian frequency spectrum "
    "compactifies the otherwise unbounded oscillator flow"
)


class Verdict:
    CHAOTIC = "chaotic"
    REGULAR = "regular"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class CurvatureSummary:
    """Scalar curvature sampled at one or more points of an experiment."""

    values: tuple
    config_hash: Optional[str] = None

    @property
    def minimum(self) -> float:
        return float(min(self.values))

    @property
    def maximum(self) -> float:
        return float(max(self.values))

    @property
    def sign(self) -> str:
        tol = 1e-6
        if self.maximum < -tol:
            return "negative"
        if self.minimum > tol:
            return "positive"
        if abs(self.minimum) <= tol and abs(self.maximum) <= tol:
            return "zero"
        if self.maximum <= tol:
            return "nonpositive"
        if self.minimum >= -tol:
            return "nonnegative"
        return "mixed"

    @classmethod
    def from_values(cls, values: Sequence[float], config_hash: Optional[str] = None):
        values = tuple(float(v) for v in values)
        if not values:
            raise ValueError("need at least one curvature value")
        return cls(values, config_hash)


@dataclass(frozen=True)
class ChaosReport:
    manifold: str
    curvature: Optional[CurvatureSummary]
    exponent: Optional[ExponentFit]
    growth: Optional[GrowthClassification]
    verdict: str
    notes: tuple = ()
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"manifold": self.manifold, "verdict": self.verdict, "notes": list(self.notes)}
        if self.curvature is not None:
            c = self.curvature
            out["curvature"] = {"min": c.minimum, "max": c.maximum, "sign": c.sign,
                                "n_points": len(c.values)}
        else:
            out["curvature"] = None
        if self.exponent is not None:
            e = self.exponent
            out["jacobi"] = {"exponent": e.exponent, "r2": e.r2, "window": list(e.window)}
        else:
            out["jacobi"] = None
        if self.growth is not None:
            g = self.growth
            out["ige"] = {"class": g.label, "rate": g.rate, "r2_linear": g.r2_linear,
                          "r2_log": g.r2_log, "window": list(g.window)}
        else:
            out["ige"] = None
        out["provenance"] = dict(self.provenance)
        return out


def stretching(fit: Optional[ExponentFit]) -> bool:
    return fit is not None and fit.exponent > 0 and fit.r2 >= STRETCH_R2


def no_stretching(fit: Optional[ExponentFit]) -> bool:
    return fit is not None and (abs(fit.exponent) <= REGULAR_EXPONENT or fit.r2 < REGULAR_R2)


def verdict(fit: Optional[ExponentFit], growth: Optional[GrowthClassification]) -> str:
    """Total verdict rule; curvature never enters it."""
    cls = growth.growth if growth is not None else None
    if stretching(fit) and cls == GrowthClass.LINEAR:
        return Verdict.CHAOTIC
    if no_stretching(fit) and cls == GrowthClass.LOGARITHMIC:
        return Verdict.REGULAR
    return Verdict.INCONCLUSIVE


def chaos_report(curvature: Optional[CurvatureSummary], fit: Optional[ExponentFit],
                 growth: Optional[GrowthClassification], manifold: str = "",
                 provenance: Optional[dict] = None, ensemble: bool = False) -> ChaosReport:
    """Combine indicators into a :class:`ChaosReport`.

    Chaos needs both stretching (positive Jacobi exponent with a good
    exponential fit) and linear entropy growth; a negative curvature is
    reported as supporting evidence only.

    Raises:
        ValueError: inputs stamped with different configuration hashes.
    """
    hashes = {getattr(x, "config_hash", None) for x in (curvature, fit, growth) if x is not None}
    hashes.discard(None)
    if len(hashes) > 1:
        raise ValueError(f"inputs come from different experiments: {sorted(hashes)}")
    notes = []
    if curvature is not None and curvature.sign == "negative":
        notes.append("negative scalar curvature: expanding directions exist (sufficient, not necessary, for instability)")
    if ensemble:
        notes.append(FOLDING_NOTE)
    if fit is not None and not math.isfinite(fit.exponent):
        notes.append("Jacobi exponent is not finite")
    return ChaosReport(manifold, curvature, fit, growth, verdict(fit, growth), tuple(notes),
                       dict(provenance or {}))


__all__ = [
    "ChaosReport",
    "CurvatureSummary",
    "FOLDING_NOTE",
    "Verdict",
    "chaos_report",
    "verdict",
]
