"""KMS-state classification for weighted directed graphs.

The core coordinates are partition functions over path classes, the
regular/critical vertex split at an inverse temperature ``beta``, extreme
state vectors and the cylinder measures they define.
"""
from .classify import (Label, StateVector, Tag, check_membership, classify_vertices, decompose, defect,
                       extreme_state, ground_states, nice_graph_check, reconstruct, simplex)
from .graph import WeightedGraph, build, load, reaches, regular_vertices, validate
from .oracle import PathClass, PathClassQuery, enumerate_paths, oracle_partition
from .spectral import beta_v, partition_values, transfer_matrix

__all__ = [
    "Label", "PathClass", "PathClassQuery", "StateVector", "Tag", "WeightedGraph", "beta_v", "build",
    "check_membership", "classify_vertices", "decompose", "defect", "enumerate_paths", "extreme_state",
    "ground_states", "load", "nice_graph_check", "oracle_partition", "partition_values", "reaches",
    "reconstruct", "regular_vertices", "simplex", "transfer_matrix", "validate",
]
