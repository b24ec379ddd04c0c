import math
import sys

import pytest

from hypdyn.maps import (
    clamp_map,
    cylinder_shift,
    disc_automorphism,
    disc_rotation,
    halfplane_sqrt_map,
    halfplane_translation,
    identity,
    line_shift,
    punctured_rotation_scaling,
    slit_shift,
)
from hypdyn.spaces import (
    INF,
    FlatCylinder,
    HyperbolicPuncturedCylinder,
    L1Cylinder,
    LogLine,
    PoincareDisc,
    RealLine,
    SlitPlane,
    UpperHalfPlane,
)

ALL_SPACES = [
    PoincareDisc(),
    UpperHalfPlane(),
    SlitPlane(),
    LogLine(),
    RealLine(),
    L1Cylinder(),
    FlatCylinder(),
    HyperbolicPuncturedCylinder(),
]


def shipped_pairs():
    """(name, map, [labels]) for every shipped map and the boundary points it fixes."""
    disc = PoincareDisc()
    uhp = UpperHalfPlane()
    l1 = L1Cylinder()
    flat = FlatCylinder()
    out = [
        ("disc_automorphism", disc_automorphism(disc, 0.5), [1 + 0j, -1 + 0j]),
        # a non-trivial rotation fixes no boundary point
        ("disc_rotation", disc_rotation(disc, 1.0), []),
        ("halfplane_sqrt_map", halfplane_sqrt_map(uhp), [INF]),
        ("halfplane_translation", halfplane_translation(uhp, 1.0), [INF]),
        ("clamp_map", clamp_map(uhp), [INF]),
        ("identity_uhp", identity(uhp), [INF, 0.0]),
        ("logline_shift", line_shift(LogLine(), 1.0), [INF]),
        ("realline_shift", line_shift(RealLine(), 1.0), [INF, -INF]),
        ("slit_shift", slit_shift(SlitPlane(), 1.0), [INF]),
        ("punctured", punctured_rotation_scaling(HyperbolicPuncturedCylinder(), 1.0, 2.0), [INF]),
        ("flat_half_turn", cylinder_shift(flat, 1.0, math.pi), [INF, -INF]),
    ]
    for theta in (0.0, 1.0, math.pi / 2, 3.0):
        out.append((f"l1_theta_{theta:.3f}", cylinder_shift(l1, 1.0, theta), [INF, -INF]))
    return out


@pytest.fixture(scope="session")
def pairs():
    return shipped_pairs()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.acceptance_lines():
        terminalreporter.write_line(line)
