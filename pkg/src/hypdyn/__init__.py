"""Dynamics of non-expanding maps on Gromov hyperbolic model spaces.

Model spaces and boundary anchors live in :mod:`hypdyn.spaces`, maps in
:mod:`hypdyn.maps`. Forward orbits and classification are in
:mod:`hypdyn.forward`, boundary dilation in :mod:`hypdyn.dilation`, backward
orbits in :mod:`hypdyn.backward`.
"""

from .backward import (
    BackwardOrbit,
    backward_divergence_rate,
    backward_orbit_via_inverse,
    backward_orbit_via_solver,
    classify_backward_limit,
    equivalence_battery,
    step_profile,
    synthesize_backward_orbit,
    unbounded_step_probe,
)
from .dilation import (
    classify_brfp,
    detect_brfp,
    dilation_along_ray,
    dilation_iterates,
    find_brfps,
    global_dilation_relations,
)
from .errors import *  # noqa: F401,F403
from .forward import calka_dichotomy, check_nonexpanding, classify, divergence_rate, forward_orbit
from .horofunction import busemann_value, horoball_contains, verify_julia
from .maps import MAP_KINDS, MapHandle, make_map
from .metric import (
    certify_discrete_quasigeodesic,
    estimate_delta,
    geodesic_region_contains,
    gromov_product,
)
from .spaces import SPACE_KINDS, BoundaryAnchor, ModelSpace, make_space

__version__ = "0.1.0"
