"""Random (di)graph model classes and their named instances.

Four classes share one pipeline: realize the vertex vector ``V_n`` (types),
evaluate the connection function on the realized vertices, then place
edges/arcs.

* ``IEG`` / ``IAG``: one independent Bernoulli per unordered / ordered pair.
* ``ESRG`` / ``ASRG``: exactly ``m`` edges / arcs, each drawn from a mass
  function by rejection until a new location comes up.

A :class:`ModelSpec` names a class, an instance and its parameters; ``realize``
turns it into a :class:`Realization` holding the concrete ``n x n`` matrix.
When ``ModelSpec.seed`` is set, ``V_n`` is the one realized from that seed and
every sample is conditional on it.  Otherwise each sample realizes its own
``V_n`` from its sample seed.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import rng
from .distribution import GraphDistribution
from .errors import (
    DegenerateRealizationError,
    InfeasibleSpecError,
    SamplerDiagnosticError,
    SizeCapError,
    SpecError,
)
from .graphs import (
    N_MAX_DIGRAPHS,
    N_MAX_GRAPHS,
    Digraph,
    Graph,
    bits_to_codes,
    n_pairs,
    pair_index,
)

CLASSES = ("IAG", "IEG", "ASRG", "ESRG")
DIRECTED = {"IAG": True, "IEG": False, "ASRG": True, "ESRG": False}

INSTANCE_CLASSES = {
    "gilbert": ("IEG",),
    "directed-gilbert": ("IAG",),
    "irg": ("IEG",),
    "ird": ("IAG",),
    "girg": ("IEG", "IAG"),
    "classical-er": ("ESRG",),
    "directed-classical-er": ("ASRG",),
    "cci": ("ASRG", "ESRG"),
    "custom": CLASSES,
}

REJECTION_CAP = 1_000_000
SELECTION_M_MAX = 6
SYMMETRY_TOL = 1e-12
MASS_SUM_TOL = 1e-9


# --- domain types -------------------------------------------------------------


@dataclass(frozen=True)
class TypedVertexVector:
    n: int
    types: tuple
    rng_seed: int | None = None

    def __post_init__(self):
        if len(self.types) != self.n:
            raise SpecError(f"type vector has length {len(self.types)}, expected n={self.n}")


@dataclass(frozen=True)
class EdgeProbabilityFn:
    evaluate: Callable
    symmetric: bool = False

    def __call__(self, a, b) -> float:
        return min(max(float(self.evaluate(a, b)), 0.0), 1.0)

    def matrix(self, v_n: TypedVertexVector) -> np.ndarray:
        n = v_n.n
        out = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i != j:
                    out[i, j] = self(v_n.types[i], v_n.types[j])
        if self.symmetric and not np.allclose(out, out.T, rtol=0, atol=SYMMETRY_TOL):
            raise SpecError("connection function flagged symmetric but evaluates asymmetrically")
        return out


@dataclass(frozen=True)
class EdgeMassFn:
    """Mass on the pairs of a realized ``V_n``.

    ``ordered=True``: ``matrix[v, w]`` is the mass of arc ``(v, w)``.
    ``ordered=False``: ``matrix`` is symmetric and ``matrix[v, w]`` is the mass
    of the edge ``{v, w}``; only the upper triangle is summed.
    """

    matrix: np.ndarray
    ordered: bool = True

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise SpecError(f"mass matrix must be square, got shape {m.shape}")
        if (m < 0).any():
            raise SpecError("mass function has negative entries")
        if np.any(np.diag(m) != 0):
            raise SpecError("mass on self-pairs must be zero")
        if not self.ordered and not np.allclose(m, m.T, rtol=0, atol=SYMMETRY_TOL):
            raise SpecError("edge mass function must be symmetric")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        total = self.total()
        if abs(total - 1.0) > MASS_SUM_TOL:
            raise SpecError(f"mass function sums to {total!r}, not 1")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def total(self) -> float:
        if self.ordered:
            return math.fsum(self.matrix.ravel())
        return math.fsum(self.matrix[np.triu_indices(self.n, 1)])

    def mass(self, v: int, w: int) -> float:
        """Mass of ``(v, w)`` (1-based)."""
        return float(self.matrix[v - 1, w - 1])

    def pair_masses(self) -> np.ndarray:
        lo, hi = pair_index(self.n).endpoints
        if self.ordered:
            return self.matrix[lo, hi] + self.matrix[hi, lo]
        return self.matrix[lo, hi].copy()

    def ordered_masses(self) -> np.ndarray:
        if not self.ordered:
            raise SpecError("edge mass functions have no ordered masses")
        lo, hi = pair_index(self.n).endpoints
        out = np.empty(2 * len(lo))
        out[0::2] = self.matrix[lo, hi]
        out[1::2] = self.matrix[hi, lo]
        return out

    @property
    def up(self) -> float:
        """Largest mass over realized pairs."""
        return float(self.matrix.max()) if self.n > 1 else 0.0

    def symmetrized(self) -> "EdgeMassFn":
        """``mu°(v,w) = mu(v,w) + mu(w,v)`` as an edge mass function."""
        if not self.ordered:
            return self
        return EdgeMassFn(self.matrix + self.matrix.T, ordered=False)


def _validate_prob_matrix(p: np.ndarray) -> np.ndarray:
    p = np.array(p, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise SpecError(f"probability matrix must be square, got shape {p.shape}")
    if not np.isfinite(p).all():
        raise SpecError("probability matrix has non-finite entries")
    p = np.clip(p, 0.0, 1.0)
    np.fill_diagonal(p, 0.0)
    return p


@dataclass(frozen=True)
class CciParameters:
    """Typed in/out channel parameters of the cell-cell interaction model.

    ``q[k]``: type pmf over ``[tau]``; ``p[i][j]``: channel pmf over
    ``[l] x [r]``; ``I[k][i]``, ``J[k][j]``: 0/1 channel indicators.
    """

    q: tuple
    p: tuple
    I: tuple
    J: tuple
    alpha: float

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        ind_i = np.asarray(self.I, dtype=int)
        ind_j = np.asarray(self.J, dtype=int)
        if q.ndim != 1 or p.ndim != 2:
            raise SpecError("CCI q must be a vector and p a matrix")
        tau, (l, r) = len(q), p.shape
        if ind_i.shape != (tau, l) or ind_j.shape != (tau, r):
            raise SpecError(f"CCI indicator shapes {ind_i.shape}, {ind_j.shape} do not match tau={tau}, l={l}, r={r}")
        if not np.isin(ind_i, (0, 1)).all() or not np.isin(ind_j, (0, 1)).all():
            raise SpecError("CCI indicators must be 0/1")
        for name, arr in (("q", q), ("p", p)):
            if (arr < 0).any() or abs(arr.sum() - 1.0) > MASS_SUM_TOL:
                raise SpecError(f"CCI {name} must be a pmf")
        if not self.alpha > 0:
            raise SpecError(f"CCI alpha must be positive, got {self.alpha}")
        if (self.lambdas <= 0).any() or (self.rhos <= 0).any():
            raise SpecError(
                f"CCI assumption violated: every channel needs a supported type "
                f"(lambda={self.lambdas.tolist()}, rho={self.rhos.tolist()})"
            )

    @classmethod
    def from_dict(cls, d: dict) -> "CciParameters":
        try:
            return cls(
                q=tuple(float(x) for x in d["q"]),
                p=tuple(tuple(float(x) for x in row) for row in d["p"]),
                I=tuple(tuple(int(x) for x in row) for row in d["I"]),
                J=tuple(tuple(int(x) for x in row) for row in d["J"]),
                alpha=float(d["alpha"]),
            )
        except (KeyError, TypeError) as exc:
            raise SpecError(f"incomplete CCI parameters: {exc}") from None

    def to_dict(self) -> dict:
        return {"q": list(self.q), "p": [list(r) for r in self.p], "I": [list(r) for r in self.I],
                "J": [list(r) for r in self.J], "alpha": self.alpha}

    @property
    def tau(self) -> int:
        return len(self.q)

    @property
    def lambdas(self) -> np.ndarray:
        return np.asarray(self.q, float) @ np.asarray(self.I, float)

    @property
    def rhos(self) -> np.ndarray:
        return np.asarray(self.q, float) @ np.asarray(self.J, float)

    def m(self, n: int) -> int:
        return math.floor(self.alpha * n)


# --- connection functions -----------------------------------------------------


def irg_probability(kernel: Callable, n: int) -> EdgeProbabilityFn:
    """``pi_n(t, s) = min(kappa(t, s) / n, 1)`` on type labels."""
    return EdgeProbabilityFn(lambda t, s: min(kernel(t, s) / n, 1.0))


def _torus_distance(x, y) -> float:
    d = np.abs(np.asarray(x, float) - np.asarray(y, float)) % 1.0
    return float(np.max(np.minimum(d, 1.0 - d))) if d.size else 0.0


def girg_probability(params: dict, n: int) -> EdgeProbabilityFn:
    """GIRG connection probability on types ``(position, weight)``.

    Coincident positions get probability 1 (the limit of the formula).
    """
    alpha, lam = float(params["alpha"]), float(params["lambda"])
    if not (alpha > 0 and lam > 0):
        raise SpecError("GIRG needs alpha > 0 and lambda > 0")
    dim = int(params.get("dim", 1))

    def evaluate(a, b) -> float:
        (x, wa), (y, wb) = a, b
        dist = _torus_distance(x, y)
        if dist == 0.0:
            return 1.0
        return min(dist ** (-alpha * dim) * (wa * wb / (n * lam)) ** alpha, 1.0)

    return EdgeProbabilityFn(evaluate, symmetric=True)


def cci_kernel(params: CciParameters) -> Callable:
    """``kappa(t, s) = alpha * sum_ij p_ij I(t,i) J(s,j) / (lambda_i rho_j)`` (types 1-based)."""
    mat = cci_kernel_matrix(params)

    def kappa(t: int, s: int) -> float:
        return float(mat[t - 1, s - 1])

    kappa.matrix = mat
    return kappa


def cci_kernel_matrix(params: CciParameters) -> np.ndarray:
    p = np.asarray(params.p, float)
    ind_i = np.asarray(params.I, float)
    ind_j = np.asarray(params.J, float)
    weighted = p / np.outer(params.lambdas, params.rhos)
    return params.alpha * ind_i @ weighted @ ind_j.T


def cci_channel_counts(params: CciParameters, types: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    counts = np.bincount(np.asarray(types, int) - 1, minlength=params.tau).astype(float)
    return counts @ np.asarray(params.I, float), counts @ np.asarray(params.J, float)


def cci_mass(params: CciParameters, v_n: TypedVertexVector, renormalize: bool = True) -> EdgeMassFn:
    """Arc mass ``mu_n(v, w) = sum_ij p_ij I(T_v,i) J(T_w,j) / (L_i R_j)``.

    Self-pairs are dropped; with ``renormalize`` the remaining mass is scaled
    back to 1, otherwise the raw off-diagonal values are kept (and the result
    is returned unvalidated as a sub-probability).
    """
    types = np.asarray(v_n.types, int)
    if types.min() < 1 or types.max() > params.tau:
        raise SpecError(f"CCI types must lie in [1, {params.tau}]")
    L, R = cci_channel_counts(params, types)
    if (L == 0).any() or (R == 0).any():
        raise DegenerateRealizationError(
            f"channel counts vanish on this realization (L={L.tolist()}, R={R.tolist()}); resample V_n"
        )
    per_type = np.asarray(params.I, float) @ (np.asarray(params.p, float) / np.outer(L, R)) @ np.asarray(params.J, float).T
    mat = per_type[np.ix_(types - 1, types - 1)]
    np.fill_diagonal(mat, 0.0)
    if renormalize:
        mat = mat / math.fsum(mat.ravel())
        return EdgeMassFn(mat, ordered=True)
    fn = object.__new__(EdgeMassFn)
    mat.setflags(write=False)
    object.__setattr__(fn, "matrix", mat)
    object.__setattr__(fn, "ordered", True)
    return fn


def cci_mass_up_from_counts(params: CciParameters, counts: np.ndarray, renormalize: bool = False) -> np.ndarray:
    """``mu_n`` maximum over realized pairs, from type counts alone.

    ``counts`` has shape ``(R, tau)``; returns ``(R,)``.  Realizations with a
    vanishing channel count give ``inf``.
    """
    counts = np.asarray(counts, float)
    ind_i = np.asarray(params.I, float)
    ind_j = np.asarray(params.J, float)
    p = np.asarray(params.p, float)
    L, R = counts @ ind_i, counts @ ind_j
    bad = (L == 0).any(axis=1) | (R == 0).any(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = p[None] / (L[:, :, None] * R[:, None, :])
        w[bad] = 0.0
        per_type = np.einsum("ti,kij,sj->kts", ind_i, w, ind_j)
    present = counts > 0
    pair_ok = present[:, :, None] & present[:, None, :]
    diag = np.arange(params.tau)
    pair_ok[:, diag, diag] = counts >= 2
    up = np.where(pair_ok, per_type, 0.0).reshape(len(counts), -1).max(axis=1)
    if renormalize:
        self_mass = np.einsum("kt,ktt->k", counts, per_type)
        up = up / (1.0 - self_mass)
    up[bad] = np.inf
    return up


# --- model spec ---------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    cls: str
    instance: str
    params: dict = field(default_factory=dict)
    n: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.cls not in CLASSES:
            raise SpecError(f"unknown model class {self.cls!r}; expected one of {CLASSES}")
        if self.instance not in INSTANCE_CLASSES:
            raise SpecError(f"unknown instance {self.instance!r}; expected one of {tuple(INSTANCE_CLASSES)}")
        if self.cls not in INSTANCE_CLASSES[self.instance]:
            raise SpecError(f"instance {self.instance!r} is not a {self.cls} model")
        if not isinstance(self.n, int) or self.n < 1:
            raise SpecError(f"n must be a positive integer, got {self.n!r}")
        _validate_params(self)

    @property
    def directed(self) -> bool:
        return DIRECTED[self.cls]

    @property
    def kind(self) -> str:
        return "digraph" if self.directed else "graph"

    def with_n(self, n: int) -> "ModelSpec":
        return replace(self, n=n)

    def to_json(self) -> dict:
        out = {"class": self.cls, "instance": self.instance, "params": self.params, "n": self.n}
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ModelSpec":
        if not isinstance(obj, dict):
            raise SpecError("model spec must be a JSON object")
        try:
            seed = obj.get("seed")
            return cls(
                cls=obj["class"],
                instance=obj["instance"],
                params=dict(obj.get("params", {})),
                n=int(obj["n"]),
                seed=None if seed is None else int(seed),
            )
        except KeyError as exc:
            raise SpecError(f"model spec missing field {exc}") from None

    def type_free(self) -> bool:
        return self.instance in ("gilbert", "directed-gilbert", "classical-er", "directed-classical-er", "custom")


def _need(params: dict, *names: str, spec: "ModelSpec") -> None:
    missing = [k for k in names if k not in params]
    if missing:
        raise SpecError(f"{spec.instance} spec missing parameter(s) {missing}")


def _validate_params(spec: ModelSpec) -> None:
    p, inst = spec.params, spec.instance
    if inst in ("gilbert", "directed-gilbert"):
        if "p" not in p and "c" not in p:
            raise SpecError(f"{inst} needs 'p' (or 'c' for p = c/(n-1))")
        prob = _gilbert_p(spec)
        if not 0.0 <= prob <= 1.0:
            raise SpecError(f"{inst} edge probability {prob} outside [0,1]")
    elif inst in ("irg", "ird"):
        if "cci" in p:
            CciParameters.from_dict(p["cci"])
        else:
            _need(p, "kernel", "type_pmf", spec=spec)
            k = np.asarray(p["kernel"], float)
            q = np.asarray(p["type_pmf"], float)
            if k.shape != (len(q), len(q)) or (k < 0).any():
                raise SpecError("kernel must be a nonnegative tau x tau matrix matching type_pmf")
            if (q < 0).any() or abs(q.sum() - 1) > MASS_SUM_TOL:
                raise SpecError("type_pmf must be a pmf")
            if inst == "irg" and not np.allclose(k, k.T, rtol=0, atol=SYMMETRY_TOL):
                raise SpecError("irg (undirected) needs a symmetric kernel")
    elif inst == "girg":
        _need(p, "alpha", "lambda", spec=spec)
        girg_probability(p, spec.n)
        law = p.get("weights", {"law": "constant", "value": 1.0})
        if law.get("law") not in ("constant", "pareto"):
            raise SpecError(f"GIRG weight law must be constant or pareto, got {law.get('law')!r}")
    elif inst in ("classical-er", "directed-classical-er"):
        if "m" not in p and "alpha" not in p:
            raise SpecError(f"{inst} needs 'm' (or 'alpha' for m = floor(alpha n))")
        if _selection_m(spec) < 0:
            raise SpecError("m must be nonnegative")
    elif inst == "cci":
        CciParameters.from_dict(p)
    elif inst == "custom":
        key = "pi" if spec.cls in ("IAG", "IEG") else "mu"
        _need(p, key, spec=spec)
        if np.asarray(p[key], float).shape != (spec.n, spec.n):
            raise SpecError(f"custom {key} must be an n x n matrix")
        if spec.cls in ("ASRG", "ESRG"):
            _need(p, "m", spec=spec)


def _gilbert_p(spec: ModelSpec) -> float:
    if "p" in spec.params:
        return float(spec.params["p"])
    return min(float(spec.params["c"]) / max(spec.n - 1, 1), 1.0)


def _selection_m(spec: ModelSpec) -> int:
    p = spec.params
    if "m" in p:
        return int(p["m"])
    return math.floor(float(p["alpha"]) * spec.n)


# --- realization --------------------------------------------------------------


@dataclass(frozen=True)
class Realization:
    """A model with its vertex vector fixed."""

    cls: str
    v_n: TypedVertexVector
    prob: np.ndarray | None = None
    mass: EdgeMassFn | None = None
    m: int = 0
    conditioned: bool = False

    @property
    def n(self) -> int:
        return self.v_n.n

    @property
    def directed(self) -> bool:
        return DIRECTED[self.cls]

    @property
    def kind(self) -> str:
        return "digraph" if self.directed else "graph"

    @property
    def pi_up(self) -> float:
        return float(self.prob.max()) if self.n > 1 else 0.0

    @property
    def mu_up(self) -> float:
        return self.mass.up

    def pair_probs(self) -> np.ndarray:
        lo, hi = pair_index(self.n).endpoints
        return self.prob[lo, hi]

    def ordered_probs(self) -> np.ndarray:
        lo, hi = pair_index(self.n).endpoints
        out = np.empty(2 * len(lo))
        out[0::2] = self.prob[lo, hi]
        out[1::2] = self.prob[hi, lo]
        return out

    def support_size(self) -> int:
        w = self.mass.ordered_masses() if self.directed else self.mass.pair_masses()
        return int(np.count_nonzero(w > 0))


def independent_realization(cls: str, prob: np.ndarray, v_n: TypedVertexVector | None = None) -> Realization:
    prob = _validate_prob_matrix(prob)
    if v_n is None:
        v_n = TypedVertexVector(prob.shape[0], tuple(range(1, prob.shape[0] + 1)))
    if cls == "IEG" and not np.allclose(prob, prob.T, rtol=0, atol=SYMMETRY_TOL):
        raise SpecError("IEG needs a symmetric edge probability function")
    if cls not in ("IEG", "IAG"):
        raise SpecError(f"{cls} is not an independent-indicator class")
    prob.setflags(write=False)
    return Realization(cls, v_n, prob=prob, conditioned=True)


def selection_realization(cls: str, mass: EdgeMassFn, m: int, v_n: TypedVertexVector | None = None) -> Realization:
    if cls == "ASRG" and not mass.ordered:
        raise SpecError("ASRG needs an arc (ordered) mass function")
    if cls == "ESRG" and mass.ordered:
        mass = mass.symmetrized()
    if v_n is None:
        v_n = TypedVertexVector(mass.n, tuple(range(1, mass.n + 1)))
    real = Realization(cls, v_n, mass=mass, m=int(m), conditioned=True)
    _check_feasible(real)
    return real


def _check_feasible(real: Realization) -> None:
    if real.m < 0:
        raise SpecError(f"m must be nonnegative, got {real.m}")
    support = real.support_size()
    if real.m > support:
        what = "ordered" if real.directed else "unordered"
        raise InfeasibleSpecError(
            f"m={real.m} exceeds the {support} {what} pairs of positive mass"
        )


def realize_types(spec: ModelSpec, type_seed: int) -> TypedVertexVector:
    n, p = spec.n, spec.params
    if spec.instance in ("irg", "ird", "cci"):
        if spec.instance == "cci":
            q = p["q"]
        else:
            q = p["cci"]["q"] if "cci" in p else p["type_pmf"]
        cdf = np.cumsum(np.asarray(q, float))
        u = rng.uniforms(type_seed, n)
        types = np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), len(cdf) - 1) + 1
        return TypedVertexVector(n, tuple(int(t) for t in types), type_seed)
    if spec.instance == "girg":
        dim = int(p.get("dim", 1))
        u = rng.uniforms(type_seed, n * (dim + 1)).reshape(n, dim + 1)
        law = p.get("weights", {"law": "constant", "value": 1.0})
        if law["law"] == "pareto":
            beta, wmin = float(law["exponent"]), float(law.get("wmin", 1.0))
            if beta <= 1:
                raise SpecError("pareto weight exponent must exceed 1")
            weights = wmin * (1.0 - u[:, dim]) ** (-1.0 / (beta - 1.0))
        else:
            weights = np.full(n, float(law.get("value", 1.0)))
        return TypedVertexVector(
            n, tuple((tuple(float(x) for x in u[i, :dim]), float(weights[i])) for i in range(n)), type_seed
        )
    return TypedVertexVector(n, tuple(range(1, n + 1)), None)


def _type_seed(spec: ModelSpec, sample_seed: int | None) -> tuple[int, bool]:
    if spec.seed is not None:
        return spec.seed, True
    if spec.type_free():
        return 0, True
    if sample_seed is None:
        return rng.DEFAULT_SEED, True
    return rng.split(sample_seed, rng.STREAM_TYPES), False


def realize(spec: ModelSpec, sample_seed: int | None = None) -> Realization:
    """Fix ``V_n`` and evaluate the model's connection function on it."""
    type_seed, conditioned = _type_seed(spec, sample_seed)
    v_n = realize_types(spec, type_seed)
    n, p, inst = spec.n, spec.params, spec.instance

    if spec.cls in ("IEG", "IAG"):
        if inst in ("gilbert", "directed-gilbert"):
            prob = np.full((n, n), _gilbert_p(spec))
        elif inst in ("irg", "ird"):
            kmat = cci_kernel_matrix(CciParameters.from_dict(p["cci"])) if "cci" in p else np.asarray(p["kernel"], float)
            t = np.asarray(v_n.types) - 1
            prob = np.minimum(kmat[np.ix_(t, t)] / n, 1.0)
        elif inst == "girg":
            prob = girg_probability(p, n).matrix(v_n)
        else:
            prob = np.asarray(p["pi"], float)
        real = independent_realization(spec.cls, prob, v_n)
    else:
        if inst in ("classical-er", "directed-classical-er"):
            mass = np.full((n, n), 1.0 / (n * (n - 1))) if n > 1 else np.zeros((1, 1))
            np.fill_diagonal(mass, 0.0)
            if n < 2:
                raise InfeasibleSpecError("selection models need n >= 2")
            mfn = EdgeMassFn(mass, ordered=True)
            m = _selection_m(spec)
        elif inst == "cci":
            params = CciParameters.from_dict(p)
            mfn = cci_mass(params, v_n, renormalize=bool(p.get("renormalize", True)))
            m = int(p["m"]) if "m" in p else params.m(n)
        else:
            mat = np.asarray(p["mu"], float)
            if spec.cls == "ESRG":
                total = math.fsum(mat[np.triu_indices(n, 1)])
                mfn = EdgeMassFn(mat / total if total > 0 else mat, ordered=False)
            else:
                mfn = EdgeMassFn(mat / math.fsum(mat.ravel()), ordered=True)
            m = int(p["m"])
        real = selection_realization(spec.cls, mfn, m, v_n)
    return replace(real, conditioned=conditioned)


def symmetrized(real: Realization) -> Realization:
    """Undirected counterpart built from summed masses: ``IEG(pi°)`` / ``ESRG(mu°)``."""
    if real.cls == "IAG":
        prob = real.prob + real.prob.T
        if (prob > 1.0 + 1e-15).any():
            i, j = np.unravel_index(int(np.argmax(prob)), prob.shape)
            raise SpecError(f"pi°({i + 1},{j + 1}) = {prob[i, j]} exceeds 1")
        return replace(independent_realization("IEG", np.minimum(prob, 1.0), real.v_n), conditioned=real.conditioned)
    if real.cls == "ASRG":
        return replace(selection_realization("ESRG", real.mass.symmetrized(), real.m, real.v_n),
                       conditioned=real.conditioned)
    raise SpecError(f"{real.cls} is already undirected")


def exact_counterpart(real: Realization) -> Realization:
    """``IEG(pi')`` with ``pi'(v,w) = 1 - (1 - pi(v,w))(1 - pi(w,v))``."""
    if real.cls != "IAG":
        raise SpecError("the exact counterpart is defined for IAG realizations")
    prob = 1.0 - (1.0 - real.prob) * (1.0 - real.prob.T)
    return replace(independent_realization("IEG", prob, real.v_n), conditioned=real.conditioned)


# --- sampling -----------------------------------------------------------------


def _independent_bits(real: Realization, seeds) -> np.ndarray:
    if real.directed:
        probs = real.ordered_probs()
    else:
        probs = real.pair_probs()
    u = rng.uniforms(seeds, len(probs))
    return u < probs


def sample_codes(real: Realization, seeds) -> np.ndarray | list[int]:
    """Canonical codes of one sample per seed, for a fixed realization."""
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    if real.cls in ("IEG", "IAG"):
        return bits_to_codes(_independent_bits(real, seeds).reshape(len(seeds), -1))
    codes = [_selection_code(real, int(s)) for s in seeds]
    return np.asarray(codes, dtype=np.int64) if real.n <= 8 else codes


def _draw_new(cdf: np.ndarray, taken: set, positive: np.ndarray, g: np.random.Generator, what: str) -> int:
    last = int(positive[-1])
    for _ in range(REJECTION_CAP):
        j = int(np.searchsorted(cdf, g.random(), side="right"))
        if j >= len(cdf):
            j = last
        if j not in taken:
            return j
    raise SamplerDiagnosticError(f"rejection loop for a new {what} exceeded {REJECTION_CAP} draws")


def _selection_items(real: Realization) -> tuple[np.ndarray, np.ndarray]:
    w = real.mass.ordered_masses() if real.directed else real.mass.pair_masses()
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    return cdf, np.flatnonzero(w > 0)


def _selection_code(real: Realization, seed: int) -> int:
    cdf, positive = _selection_items(real)
    g = rng.generator(seed)
    taken: set[int] = set()
    what = "arc" if real.directed else "edge"
    while len(taken) < real.m:
        taken.add(_draw_new(cdf, taken, positive, g, what))
    return sum(1 << j for j in taken)


def _from_code(real: Realization, code: int):
    return Digraph.from_code(real.n, int(code)) if real.directed else Graph.from_code(real.n, int(code))


def sample(real: Realization, seed: int):
    """One graph/digraph from a realization."""
    return _from_code(real, int(np.asarray(sample_codes(real, [seed]))[0]) if real.n <= 8
                      else sample_codes(real, [seed])[0])


def _checked(spec: ModelSpec, cls: str) -> None:
    if spec.cls != cls:
        raise SpecError(f"expected a {cls} spec, got {spec.cls}")


def sample_ieg(spec: ModelSpec, seed: int) -> Graph:
    _checked(spec, "IEG")
    return sample(realize(spec, seed), seed)


def sample_iag(spec: ModelSpec, seed: int) -> Digraph:
    _checked(spec, "IAG")
    return sample(realize(spec, seed), seed)


def sample_esrg(spec: ModelSpec, seed: int) -> Graph:
    _checked(spec, "ESRG")
    return sample(realize(spec, seed), seed)


def sample_asrg(spec: ModelSpec, seed: int) -> Digraph:
    _checked(spec, "ASRG")
    return sample(realize(spec, seed), seed)


def sample_spec(spec: ModelSpec, seed: int):
    return sample(realize(spec, seed), seed)


# --- exact distributions ------------------------------------------------------


def _all_bits(k: int) -> np.ndarray:
    codes = np.arange(1 << k, dtype=np.int64)
    return ((codes[:, None] >> np.arange(k, dtype=np.int64)) & 1).astype(bool)


def exact_model_distribution(spec_or_real, n: int | None = None, m_max: int = SELECTION_M_MAX) -> GraphDistribution:
    """Exact pmf over all graphs/digraphs, conditional on the realized ``V_n``.

    Independent-indicator classes multiply Bernoulli factors; selection
    classes accumulate the sequential renormalized order sum one placement
    at a time over subsets.
    """
    if isinstance(spec_or_real, ModelSpec):
        spec = spec_or_real if n is None else spec_or_real.with_n(n)
        real = realize(spec)
    else:
        real = spec_or_real
    cap = N_MAX_DIGRAPHS if real.directed else N_MAX_GRAPHS
    if real.n > cap:
        raise SizeCapError(f"exact {real.kind} distribution refused for n={real.n} (cap n_max={cap})")
    c = n_pairs(real.n)
    k = 2 * c if real.directed else c
    if real.cls in ("IEG", "IAG"):
        probs = real.ordered_probs() if real.directed else real.pair_probs()
        bits = _all_bits(k)
        pmf = np.prod(np.where(bits, probs, 1.0 - probs), axis=1) if k else np.ones(1)
    else:
        if real.m > m_max:
            raise SizeCapError(f"exact selection distribution refused for m={real.m} (cap m_max={m_max})")
        w = real.mass.ordered_masses() if real.directed else real.mass.pair_masses()
        pmf = np.zeros(1 << k)
        for code, pr in _selection_subset_pmf(w, real.m).items():
            pmf[code] = pr
    meta = {
        "class": real.cls,
        "conditioned_on_types": not _type_free_types(real.v_n),
        "types": _types_json(real.v_n),
    }
    return GraphDistribution(real.n, real.kind, pmf, meta)


def _selection_subset_pmf(w: np.ndarray, m: int) -> dict[int, float]:
    positive = [j for j in range(len(w)) if w[j] > 0]
    if m > len(positive):
        raise InfeasibleSpecError(f"m={m} exceeds the {len(positive)} locations of positive mass")
    states = {0: 1.0}
    for _ in range(m):
        nxt: dict[int, float] = defaultdict(float)
        for code, pr in states.items():
            free = [j for j in positive if not code >> j & 1]
            rest = math.fsum(w[j] for j in free)
            for j in free:
                nxt[code | 1 << j] += pr * w[j] / rest
        states = nxt
    return states


def _type_free_types(v_n: TypedVertexVector) -> bool:
    return v_n.rng_seed is None


def _types_json(v_n: TypedVertexVector) -> list:
    out = []
    for t in v_n.types:
        if isinstance(t, tuple):
            out.append([list(t[0]), t[1]])
        else:
            out.append(t)
    return out
