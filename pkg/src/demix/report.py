"""Report record shared by the estimate checks."""

from dataclasses import dataclass, field

HOLD_RTOL = 1e-9
HOLD_ATOL = 1e-12


def inequality_holds(lhs: float, rhs: float) -> bool:
    return lhs <= rhs * (1.0 + HOLD_RTOL) + HOLD_ATOL


@dataclass(frozen=True)
class EstimateReport:
    """One checked inequality: lhs <= rhs with scalar context attached."""

    name: str
    lhs: float
    rhs: float
    holds: bool
    margin: float
    context: dict = field(default_factory=dict)

    @classmethod
    def from_sides(cls, name: str, lhs: float, rhs: float, context: dict | None = None):
        return cls(
            name=name,
            lhs=float(lhs),
            rhs=float(rhs),
            holds=inequality_holds(lhs, rhs),
            margin=float(rhs - lhs),
            context=dict(context or {}),
        )

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "holds": self.holds,
            "margin": self.margin,
            "context": self.context,
        }
