"""Alpha entanglement erasure codes: lattice arithmetic, XOR codec,
disaster-recovery simulation and minimal-erasure analysis."""

from .lattice import (
    BlockId,
    CodeParams,
    Edge,
    Node,
    NodeCategory,
    ParameterError,
    StrandClass,
    validate_params,
)

__version__ = "0.1.0"
