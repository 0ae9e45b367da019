"""Laguerre polynomials L_n^(nA)(nz) with a non-real varying parameter.

Trajectories of the quadratic differential -(z^2 - 2(A+2)z + A^2)/z^2 dz^2,
the equilibrium measure on the short trajectory, high-precision Laguerre
evaluation and zeros, and strong asymptotics with an Airy parametrix.
"""

from .airy import AiryValue, airy
from .asymptotics import (
    AsymptoticResult,
    compare,
    conformal_f,
    decay_fit,
    strong_asymptotic,
    summarize,
    zero_side_check,
)
from .core import Parameter, d_of, r_global, r_prime, zeros_of_d
from .equilibrium import (
    build_sigma,
    check_equilibrium,
    compute_ell,
    energy_minimize_oracle,
    equilibrium_measure,
    g_identity,
    g_quadrature,
    phi_eval,
    psi_eval,
    strip_edges,
    v_potential,
)
from .errors import *  # noqa: F401,F403
from .laguerre import (
    LaguerreContext,
    ZeroSet,
    laguerre_eval,
    orthogonality_report,
    rescaled_eval,
    rescaled_zeros,
    zeros,
)
from .logcomplex import LogComplex
from .trajectories import build_critical_graph, find_short_trajectory, orthogonal_critical_graph, trace

__version__ = "0.1.0"
