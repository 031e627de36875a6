"""Directed and undirected random graph models, the forgetful map between
them, location couplings with error accounting, and desk-scale checks of the
equivalence statements that connect them."""

from .distribution import GraphDistribution
from .errors import (
    DegenerateCoupling,
    DegenerateRealizationError,
    InfeasibleSpecError,
    SamplerDiagnosticError,
    SizeCapError,
    SpecError,
)
from .events import BUILTIN_EVENTS, EventSpec, get_event, lift_event
from .exact import event_probability, phi_pushforward, tv_distance, witness_events
from .graphs import Digraph, Graph, PairIndex, forgetful_map, forgetful_preimage_size, pair_index
from .models import CciParameters, ModelSpec, realize

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_EVENTS",
    "CciParameters",
    "DegenerateCoupling",
    "DegenerateRealizationError",
    "Digraph",
    "EventSpec",
    "Graph",
    "GraphDistribution",
    "InfeasibleSpecError",
    "ModelSpec",
    "PairIndex",
    "SamplerDiagnosticError",
    "SizeCapError",
    "SpecError",
    "event_probability",
    "forgetful_map",
    "forgetful_preimage_size",
    "get_event",
    "lift_event",
    "pair_index",
    "phi_pushforward",
    "realize",
    "tv_distance",
    "witness_events",
]
