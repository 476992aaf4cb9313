"""Spectral theory of eventually periodic Jacobi operators.

Discriminants and band structure, the two-sheeted surface of the
discriminant, m-functions and their continuation, and the block Jacobi
matrices obtained by applying the discriminant to the operator.
"""
from .blockops import (
    BlockJacobi,
    EventuallyFree,
    SmithOrders,
    Window,
    block_from_poly,
    eig_relation_check,
    l_matrix,
    m_delta_eval,
    matrix_ops_eval,
    resolvent_block,
    smith_orders,
    u_matrix,
    verify_det_identities,
    verify_sum_identity,
)
from .conditions import ConditionReport, SamplerConfig, check_conditions
from .jacobi import (
    FREE,
    POLE,
    PeriodicJacobi,
    PeriodicTail,
    PerturbedJacobi,
    Truncated,
    extend,
    is_pole,
    m_step,
    op_first_kind,
    op_second_kind,
    strip,
)
from .mfunction import (
    MFunctionPeriodic,
    decay_rate,
    herglotz_density,
    m_eval,
    m_periodic_eval,
    m_sharp_eval,
    point_masses,
)
from .periodic import BandStructure, band_structure, capacity, delta_preimages, discriminant, torus_check
from .polycore import Poly, poly_derivative, poly_eval, poly_roots
from .surface import (
    Region,
    Sheet,
    SurfacePoint,
    er_levelset,
    er_membership,
    joukowski_coord,
    lift_preimage,
    sharp,
    sqrt_disc,
)

__version__ = "0.1.0"
