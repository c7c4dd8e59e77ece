"""Time-reversal symmetric Bloch frames and the Z2 invariants of matching families."""

from .errors import (
    BlochGaugeError,
    BranchCutCollision,
    InvalidInput,
    ObstructionError,
    RefinementNeeded,
    RetryExhausted,
    ShapeError,
    SymmetryError,
)
from .frames import BlochFrame, build_frame, check_frame, fourier_decay
from .genericize import cluster_census, su2_path, to_generic_form
from .invariants import classify, gp_index, indices_2d, winding_det, z2_report
from .linalg import pfaffian, principal_log, unitary_eig
from .logsmith import (
    MultiStepLog,
    beta_family,
    homotopy_from_beta,
    multi_step_log_from_homotopy,
    reconstruct,
    two_step_log,
)
from .torus import (
    ProjectionFamily,
    SelfAdjointFamily,
    SymmetryKind,
    TorusGrid,
    UnitaryFamily,
    validate_matching,
    validate_projections,
    validate_self_adjoint,
)
from .transport import matching_matrix, parallel_transport
from .zoo import make_matching, make_projections

__all__ = [name for name in dir() if not name.startswith("_")]
