import cmath
import math

import numpy as np
import pytest

from hypdyn.dilation import detect_brfp
from hypdyn.errors import TailNotConverged
from hypdyn.horofunction import (
    busemann_limit,
    busemann_value,
    horoball_contains,
    horofunction,
    verify_julia,
)
from hypdyn.maps import cylinder_shift, disc_automorphism, identity
from hypdyn.spaces import INF, L1Cylinder, PoincareDisc, UpperHalfPlane

from conftest import ALL_SPACES, shipped_pairs


def test_busemann_value_basics():
    U = UpperHalfPlane()
    ray = U.ray_toward(1j, INF)
    assert busemann_value(U, ray, 1j, 1j) == pytest.approx(0.0, abs=1e-12)
    assert busemann_value(U, ray, 1j, ray.at(3.0)) == pytest.approx(-3.0, abs=1e-12)
    assert busemann_value(U, ray, 1j, 2 + 1j) == pytest.approx(0.0, abs=1e-9)


def test_limit_estimator_reports_unconverged_tail():
    U = UpperHalfPlane()
    ray = U.ray_toward(1j, INF)
    with pytest.raises(TailNotConverged) as info:
        busemann_limit(U, ray, 1j, 1e6 + 1j, T_max=4.0)
    assert info.value.value != info.value.half_value


def test_horoball_membership():
    U = UpperHalfPlane()
    h = horofunction(U.ray_toward(1j, INF), 1j)
    assert horoball_contains(h, 0.0, 1j)
    assert horoball_contains(h, -5.0, h.anchor.at(10.0))
    for n in range(2, 200):
        assert not horoball_contains(h, -1.0, cmath.sqrt(n + 1j))


@pytest.mark.parametrize("space", ALL_SPACES, ids=[s.kind for s in ALL_SPACES])
def test_horofunctions_are_one_lipschitz(space):
    rng = np.random.default_rng(2)
    p = space.default_seeds()[0]
    pts = space.sample(rng, 200)
    for label in space.canonical_labels()[:2]:
        h = horofunction(space.ray_toward(p, label), p)
        for x, y in zip(pts[::2], pts[1::2]):
            assert abs(h(x) - h(y)) <= space.distance(x, y) + 1e-9


@pytest.mark.parametrize("name,fmap,labels", shipped_pairs(), ids=[n for n, _, _ in shipped_pairs()])
def test_horoball_trapping(name, fmap, labels):
    space = fmap.space
    p = space.default_seeds()[0]
    for label in labels:
        h = horofunction(space.ray_toward(p, label), p)
        for c in (-2.0, 0.0, 3.0):
            for t in (-c + 1.0, -c + 5.0, -c + 20.0):
                if t >= 0:
                    assert horoball_contains(h, c, h.anchor.at(t))
        others = [lab for lab in space.canonical_labels() if not space.labels_equal(lab, label)]
        for other in others[:1]:
            far = space.ray_toward(p, other).at(30.0)
            assert not horoball_contains(h, -2.0, far)


def test_julia_identity():
    U = UpperHalfPlane()
    f = identity(U)
    rec = detect_brfp(f, U.ray_toward(1j, INF), n_max=4)
    rep = verify_julia(U, f, rec, 1j, U.sample(np.random.default_rng(0), 100))
    assert rep.passed
    assert rep.max_violation == pytest.approx(0.0, abs=1e-12)


def test_julia_disc_exact_and_delta():
    D = PoincareDisc()
    f = disc_automorphism(D, 0.5)
    p = D.point(0.0)
    rec = detect_brfp(f, D.ray_toward(p, 1 + 0j), n_max=4)
    assert rec.log_dilation == pytest.approx(math.log(1 / 3), abs=1e-9)
    samples = D.sample(np.random.default_rng(0), 1000)
    exact = verify_julia(D, f, rec, p, samples)
    delta = verify_julia(D, f, rec, p, samples, mode="delta")
    assert exact.passed and exact.max_violation <= 1e-6
    assert delta.passed and delta.error_budget >= exact.error_budget


@pytest.mark.parametrize("theta", [0.0, 1.0, math.pi / 2, 3.0])
def test_julia_l1_cylinder_uses_image_curve(theta):
    C = L1Cylinder()
    f = cylinder_shift(C, 1.0, theta)
    p = C.point(0.0, 0.0)
    rec = detect_brfp(f, C.ray_toward(p, -INF), n_max=4)
    assert rec.log_dilation == pytest.approx(1.0 - theta, abs=1e-9)
    rep = verify_julia(C, f, rec, p, C.sample(np.random.default_rng(1), 1000))
    assert rep.image_horofunction == "image-curve horofunction"
    assert rep.passed and rep.max_violation <= 1e-6


def test_julia_rejects_bad_mode():
    D = PoincareDisc()
    f = disc_automorphism(D, 0.5)
    rec = detect_brfp(f, D.ray_toward(D.point(0.0), 1 + 0j), n_max=4)
    with pytest.raises(ValueError):
        verify_julia(D, f, rec, D.point(0.0), [], mode="loose")
