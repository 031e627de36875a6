"""Verdict records shared by the coupling checks and the Monte Carlo harness."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field


@dataclass
class VerdictReport:
    """One estimate compared against one bound.

    ``passed`` is ``None`` for informational probes.  ``slack`` is what is
    added to ``bound`` before comparing (typically ``3 * se``).
    """

    statistic: str
    estimate: float
    bound: float | None
    passed: bool | None
    replicates: int
    seed: int
    se: float | None = None
    slack: float = 0.0
    bound_formula: str = ""
    ci: tuple[float, float] | None = None
    n: int | None = None
    details: dict = field(default_factory=dict)

    @property
    def hard(self) -> bool:
        return self.passed is not None

    def to_json(self) -> dict:
        out = asdict(self)
        if self.ci is not None:
            out["ci"] = list(self.ci)
        return _finite(out)


def _finite(obj):
    # JSON has no inf/nan; encode them as strings
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def verdict(statistic: str, estimate: float, bound: float, se: float, *, replicates: int, seed: int,
            bound_formula: str, n: int | None = None, k_se: float = 3.0, **details) -> VerdictReport:
    """Pass iff ``estimate <= bound + k_se * se``."""
    slack = k_se * se
    return VerdictReport(
        statistic=statistic,
        estimate=float(estimate),
        bound=float(bound),
        passed=bool(estimate <= bound + slack),
        replicates=int(replicates),
        seed=int(seed),
        se=float(se),
        slack=float(slack),
        bound_formula=bound_formula,
        n=n,
        details=details,
    )
