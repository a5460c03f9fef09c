"""Exact ReLU networks for two-dimensional dyadic refinement cascades.

Rational arithmetic throughout: a compiled network for V^n g agrees with the
refinement recursion at every rational point, not just approximately.
"""

from .assembler import CascadeParams, build_atom_net, build_seed_net, build_unit_square
from .cpwl import CpwlFunction2D, CpwlMesh
from .decomposition import decompose
from .estimator import CascadeRealizer
from .network import AffineLayer, ReluNetwork, deserialize, evaluate, evaluate_batch, serialize, stats
from .refinement import Mask, Window, oracle_cascade_physical, oracle_direct, tensor_mask, transition_matrices
from .verify import VerificationPlan, render_heatmap, run_verification

__version__ = "0.1.0"

__all__ = [
    "AffineLayer",
    "CascadeParams",
    "CascadeRealizer",
    "CpwlFunction2D",
    "CpwlMesh",
    "Mask",
    "ReluNetwork",
    "VerificationPlan",
    "Window",
    "build_atom_net",
    "build_seed_net",
    "build_unit_square",
    "decompose",
    "deserialize",
    "evaluate",
    "evaluate_batch",
    "oracle_cascade_physical",
    "oracle_direct",
    "render_heatmap",
    "run_verification",
    "serialize",
    "stats",
    "tensor_mask",
    "transition_matrices",
]
