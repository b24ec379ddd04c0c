import cmath
import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypdyn.backward import (
    BackwardOrbit,
    StepProfileWarning,
    backward_divergence_rate,
    backward_orbit_via_inverse,
    backward_orbit_via_solver,
    classify_backward_limit,
    equivalence_battery,
    step_profile,
    synthesize_backward_orbit,
    unbounded_step_probe,
)
from hypdyn.dilation import detect_brfp
from hypdyn.errors import ClustersDiverged, NoRepellingCertificate, SolverFailed, VerificationFailure
from hypdyn.forward import classify
from hypdyn.maps import (
    MapHandle,
    clamp_map,
    cylinder_shift,
    disc_automorphism,
    disc_rotation,
    halfplane_mobius,
    halfplane_sqrt_map,
    identity,
    line_shift,
    punctured_rotation_scaling,
    slit_shift,
)
from hypdyn.registry import clamp_orbit, disc_inverse_orbit
from hypdyn.spaces import INF, FlatCylinder, HyperbolicPuncturedCylinder, L1Cylinder, LogLine, PoincareDisc, SlitPlane, UpperHalfPlane

LOG3 = math.log(3.0)


@pytest.fixture(scope="module")
def sqrt_orbit():
    U = UpperHalfPlane()
    f = halfplane_sqrt_map(U)
    return f, backward_orbit_via_solver(f, cmath.sqrt(1j), 1000)


@pytest.fixture(scope="module")
def disc_orbit():
    return disc_inverse_orbit(200)


def _quiet_profile(orbit, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepProfileWarning)
        return step_profile(orbit, **kw)


def test_disc_inverse_orbit_closed_form(disc_orbit):
    f, orbit = disc_orbit
    D = f.space
    for n in range(0, 30):
        assert complex(*D.coords(orbit.points[n])) == pytest.approx(-math.tanh(n * math.atanh(0.5)), abs=1e-12)
    assert all(s == pytest.approx(LOG3, abs=1e-9) for s in orbit.step_distances)
    assert orbit.max_residual <= 1e-12


def test_logline_backward_run_terminates():
    orbit = backward_orbit_via_inverse(line_shift(LogLine(), 1.0), 10.0, 100)
    assert orbit.escaped_at == 9
    assert len(orbit.points) == 10
    assert orbit.notes


def test_inverse_needs_declared_inverse():
    U = UpperHalfPlane()
    with pytest.raises(ValueError):
        backward_orbit_via_inverse(halfplane_sqrt_map(U), 1j, 5)


def test_slit_plane_companion_orbits_separate():
    S = SlitPlane()
    f = slit_shift(S, 1.0)
    xs = backward_orbit_via_inverse(f, 1j, 100)
    ys = backward_orbit_via_inverse(f, -1j, 100)
    assert xs.points[7] == pytest.approx(1j - 7)
    d = [S.distance(x, y) for x, y in zip(xs.points, ys.points)]
    assert all(b > a for a, b in zip(d, d[1:]))
    assert d[100] > 10.0


def test_solver_recovers_sqrt_orbit(sqrt_orbit):
    f, orbit = sqrt_orbit
    assert max(abs(orbit.points[n] - cmath.sqrt(n + 1j)) for n in range(401)) <= 1e-8
    assert orbit.max_residual <= 1e-8
    assert orbit.construction == "solver"


def test_solver_on_identity_and_disc():
    U = UpperHalfPlane()
    orbit = backward_orbit_via_solver(identity(U), 2 + 1j, 20)
    assert all(abs(p - (2 + 1j)) < 1e-12 for p in orbit.points)
    D = PoincareDisc()
    f = disc_automorphism(D, 0.5)
    a = backward_orbit_via_solver(f, D.point(0.0), 40)
    b = backward_orbit_via_inverse(f, D.point(0.0), 40)
    assert max(D.distance(x, y) for x, y in zip(a.points, b.points)) <= 1e-9


def test_solver_failure_reports_best_residual():
    U = UpperHalfPlane()
    lift = MapHandle(U, lambda z: U.check(z + 1j), name="lift")
    with pytest.raises(SolverFailed) as info:
        backward_orbit_via_solver(lift, 0.5j, 3)
    assert info.value.step == 1
    assert info.value.best_residual > 1e-8


def test_solver_flags_competing_preimages():
    U = UpperHalfPlane()
    orbit = backward_orbit_via_solver(clamp_map(U), 1j, 3, seeds_per_step=8, cluster_tol=10.0)
    assert orbit.ambiguous_steps


def test_step_profile_of_disc_orbit(disc_orbit):
    _, orbit = disc_orbit
    prof = step_profile(orbit)
    for m, s in prof.sigma.items():
        assert s == pytest.approx(m * LOG3, rel=1e-9)
    assert prof.b_estimate == pytest.approx(LOG3, abs=1e-9)
    assert not prof.subadditivity_violations()
    assert prof.monotone_violations == 0


def test_step_profile_of_constant_orbit():
    U = UpperHalfPlane()
    orbit = BackwardOrbit.from_points(identity(U), [1j] * 40)
    prof = step_profile(orbit)
    assert all(s == 0.0 for s in prof.sigma.values())
    assert prof.b_estimate == 0.0


def test_step_profile_of_sqrt_orbit(sqrt_orbit):
    _, orbit = sqrt_orbit
    prof = _quiet_profile(orbit)
    assert prof.b_estimate <= 0.05
    assert not prof.subadditivity_violations(1e-6)
    assert prof.monotone_violations == 0


def test_step_profile_needs_long_orbit(disc_orbit):
    _, orbit = disc_orbit
    with pytest.raises(ValueError):
        step_profile(orbit, m_max=100)


def test_step_profile_warns_on_unsettled_tail():
    U = UpperHalfPlane()
    accelerating = [1j * math.exp(0.002 * n * n) for n in range(120)]
    orbit = BackwardOrbit.from_points(identity(U), accelerating)
    with pytest.warns(StepProfileWarning):
        step_profile(orbit)


def test_backward_rate_equals_step_rate(disc_orbit, sqrt_orbit):
    for _, orbit in (disc_orbit, sqrt_orbit):
        prof = _quiet_profile(orbit)
        assert abs(backward_divergence_rate(orbit, 200) - prof.b_estimate) <= 1e-2


def test_synthesizer_on_disc():
    D = PoincareDisc()
    f = disc_automorphism(D, 0.5)
    rec = detect_brfp(f, D.ray_toward(D.point(0.0), -1 + 0j))
    res = synthesize_backward_orbit(f, rec, depth=50)
    assert res.sup_to_inverse_orbit <= 0.5
    assert res.b == pytest.approx(LOG3, abs=1e-2)
    assert res.orbit.max_residual <= 1e-8
    state = res.state
    assert state.m == 1 and state.c < 0
    assert all(n * state.m >= 50 for n in state.stop_indices)


def test_synthesizer_stopping_rule():
    D = PoincareDisc()
    f = disc_automorphism(D, 0.5)
    rec = detect_brfp(f, D.ray_toward(D.point(0.0), -1 + 0j))
    res = synthesize_backward_orbit(f, rec, depth=20)
    from hypdyn.horofunction import horofunction

    h = horofunction(rec.anchor)
    for t, n_stop in zip(res.state.t_grid, res.state.stop_indices):
        y = rec.anchor.at(t)
        for n in range(n_stop + 1):
            assert h(f.iterate(y, n * res.state.m)) <= res.state.c
        assert h(f.iterate(y, (n_stop + 1) * res.state.m)) > res.state.c


def test_synthesizer_on_l1_cylinder():
    C = L1Cylinder()
    f = cylinder_shift(C, 1.0, math.pi / 2)
    rec = detect_brfp(f, C.ray_toward(C.point(0.0, 0.0), -INF))
    res = synthesize_backward_orbit(f, rec, depth=50)
    assert res.b == pytest.approx(1.0, abs=1e-2)
    assert res.profile.sigma[1] >= 1.0 + math.pi / 2 - 1e-3


def test_synthesizer_refuses_non_repelling():
    U = UpperHalfPlane()
    rec = detect_brfp(identity(U), U.ray_toward(1j, INF), n_max=4)
    with pytest.raises(NoRepellingCertificate):
        synthesize_backward_orbit(identity(U), rec)


def test_synthesizer_reports_divergent_clusters():
    D = PoincareDisc()
    f = disc_automorphism(D, 0.5)
    rec = detect_brfp(f, D.ray_toward(D.point(0.0), -1 + 0j))
    with pytest.raises(ClustersDiverged):
        synthesize_backward_orbit(f, rec, depth=20, cluster_tol=1e-12, t_grid=[20.0, 20.37, 20.71])


def test_battery_unanimous_true_on_disc(disc_orbit):
    f, orbit = disc_orbit
    rep = equivalence_battery(orbit, f)
    assert rep.unanimous and rep.verdict is True
    assert rep.values["b"] == pytest.approx(LOG3, abs=1e-3)
    assert f.space.labels_equal(rep.limit_label, -1 + 0j)


def test_battery_unanimous_false_on_parabolic_orbits(sqrt_orbit):
    f, orbit = sqrt_orbit
    rep = equivalence_battery(orbit, f, profile=_quiet_profile(orbit))
    assert rep.unanimous and rep.verdict is False
    g, corbit = clamp_orbit()
    rep = equivalence_battery(corbit, g)
    assert rep.unanimous and rep.verdict is False


def test_battery_needs_escaping_orbit():
    U = UpperHalfPlane()
    orbit = BackwardOrbit.from_points(identity(U), [1j] * 80)
    with pytest.raises(ValueError):
        equivalence_battery(orbit, identity(U))


def test_backward_limit_classes(disc_orbit, sqrt_orbit):
    f, orbit = disc_orbit
    lim = classify_backward_limit(orbit, f)
    assert lim.kind == "RepellingBRFP" and f.space.labels_equal(lim.label, -1 + 0j)
    g, sorbit = sqrt_orbit
    lim = classify_backward_limit(sorbit, g, profile=_quiet_profile(sorbit))
    assert str(lim) == "ParabolicDW{+inf}"
    c, corbit = clamp_orbit()
    assert classify_backward_limit(corbit, c).kind == "WeaklyEllipticUndetermined"


def test_non_escaping_backward_orbit():
    D = PoincareDisc()
    r = disc_rotation(D, 1.0)
    orbit = backward_orbit_via_inverse(r, D.point(0.5), 200)
    lim = classify_backward_limit(orbit, r)
    assert lim.kind == "NonEscaping" and lim.map_class.startswith("elliptic")


def test_slow_orbit_of_hyperbolic_map_is_flagged():
    U = UpperHalfPlane()
    f = halfplane_mobius(U, 2.0, 0.0, 0.0, 1.0)
    orbit = BackwardOrbit.from_points(f, [complex(n, 1.0) for n in range(1001)])
    with pytest.raises(VerificationFailure):
        classify_backward_limit(orbit, f)


def test_unbounded_step_probe():
    P = HyperbolicPuncturedCylinder()
    f = punctured_rotation_scaling(P, 1.0, 2.0)
    orbit = backward_orbit_via_inverse(f, P.point(0.0, 1.0), 2000)
    rep = unbounded_step_probe(f, orbit)
    assert rep["steps"][19] > 20.0
    assert rep["cells_occupied"] == 16 and rep["all_cells_hit_at"] <= 2000
    assert rep["steps_unbounded"]
    g = punctured_rotation_scaling(P, 0.0, 2.0)
    rep0 = unbounded_step_probe(g, backward_orbit_via_inverse(g, P.point(0.0, 1.0), 200))
    assert rep0["bounded_angular_set"]


def _escaping_bounded_orbits():
    f, orbit = disc_inverse_orbit(200)
    out = [("disc", f, orbit)]
    U = UpperHalfPlane()
    g = halfplane_sqrt_map(U)
    out.append(("sqrt", g, backward_orbit_via_solver(g, cmath.sqrt(1j), 1000)))
    c, corbit = clamp_orbit()
    out.append(("clamp", c, corbit))
    F = FlatCylinder()
    h = cylinder_shift(F, 1.0, math.pi)
    out.append(("flat", h, backward_orbit_via_inverse(h, F.point(0.0, 0.0), 200)))
    C = L1Cylinder()
    k = cylinder_shift(C, 1.0, math.pi / 2)
    out.append(("l1", k, backward_orbit_via_inverse(k, C.point(0.0, 0.0), 200)))
    return out


@pytest.mark.parametrize("name,fmap,orbit", _escaping_bounded_orbits(), ids=lambda v: v if isinstance(v, str) else "")
def test_rate_and_limit_dilation_bounds(name, fmap, orbit):
    prof = _quiet_profile(orbit)
    b = prof.b_estimate
    c = classify(fmap).c_estimate
    assert b >= c - 1e-3
    assert not prof.subadditivity_violations(1e-6)
    label = fmap.space.limit_label(orbit.points)
    rec = detect_brfp(fmap, fmap.space.ray_toward(orbit.points[0], label))
    assert rec.stable is not None
    assert -1e-3 <= rec.stable <= b + 1e-3


@settings(max_examples=15, deadline=None)
@given(a=st.floats(0.05, 0.9))
def test_disc_profile_property(a):
    D = PoincareDisc()
    f = disc_automorphism(D, a)
    orbit = backward_orbit_via_inverse(f, D.point(0.0), 40)
    prof = step_profile(orbit)
    assert prof.b_estimate == pytest.approx(2 * math.atanh(a), rel=1e-7)
    assert not prof.subadditivity_violations(1e-6)
