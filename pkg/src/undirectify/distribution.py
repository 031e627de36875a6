"""Exact probability mass functions over all (di)graphs on ``n`` vertices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SpecError
from .graphs import N_MAX_DIGRAPHS, N_MAX_GRAPHS, format_code, n_pairs, parse_code

KINDS = ("graph", "digraph")
MASS_TOL = 1e-12


def state_count(n: int, kind: str) -> int:
    c = n_pairs(n)
    return 1 << (c if kind == "graph" else 2 * c)


@dataclass
class GraphDistribution:
    """Dense pmf indexed by canonical code (see :mod:`undirectify.graphs`)."""

    n: int
    kind: str
    pmf: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"distribution kind must be graph or digraph, got {self.kind!r}")
        cap = N_MAX_GRAPHS if self.kind == "graph" else N_MAX_DIGRAPHS
        if not 1 <= self.n <= cap:
            raise SpecError(f"{self.kind} distributions are capped at n_max={cap}, got n={self.n}")
        self.pmf = np.asarray(self.pmf, dtype=np.float64)
        if self.pmf.shape != (state_count(self.n, self.kind),):
            raise SpecError(f"pmf has shape {self.pmf.shape}, expected ({state_count(self.n, self.kind)},)")
        if (self.pmf < 0).any():
            raise SpecError("pmf has negative entries")

    def total(self) -> float:
        return math.fsum(self.pmf)

    def check_normalized(self, tol: float = MASS_TOL) -> None:
        t = self.total()
        if abs(t - 1.0) > tol:
            raise SpecError(f"pmf sums to {t!r}, not 1 within {tol}")

    def prob(self, code: int) -> float:
        return float(self.pmf[code])

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.pmf)

    @classmethod
    def point_mass(cls, n: int, kind: str, code: int) -> "GraphDistribution":
        pmf = np.zeros(state_count(n, kind))
        pmf[code] = 1.0
        return cls(n, kind, pmf)

    def to_json(self) -> dict:
        out = {
            "n": self.n,
            "kind": self.kind,
            "pmf": {format_code(int(c)): float(self.pmf[c]) for c in self.support()},
        }
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "GraphDistribution":
        try:
            n, kind = int(obj["n"]), obj["kind"]
            if kind not in KINDS:
                raise SpecError(f"distribution kind must be graph or digraph, got {kind!r}")
            pmf = np.zeros(state_count(n, kind))
            for key, p in obj["pmf"].items():
                code = parse_code(key)
                if code >= len(pmf):
                    raise SpecError(f"code {key} out of range for n={n} {kind}")
                pmf[code] += float(p)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(f"malformed distribution JSON: {exc}") from None
        return cls(n, kind, pmf, dict(obj.get("meta", {})))
