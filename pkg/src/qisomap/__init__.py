"""Simulated quantum Isomap: quantum Floyd, Gram preparation and walk-based SVE.

Every quantum stage runs on a sparse basis-state simulator and is checked
against a classical Isomap oracle on the same quantised input.
"""

from .errors import *  # noqa: F401,F403
from .fixedpoint import FpFormat, decode, encode
from .oracle import EmbeddingResult, center_distances, embed, jacobi_eigh, procrustes_error
from .pipeline import RunConfig, RunReport, emit_artifacts, run_pipeline
from .qfloyd import AdjacencyInput, classical_floyd, knn_graph, run_quantum_floyd

__version__ = "0.1.0"
