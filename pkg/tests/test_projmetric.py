import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cobweb.errors import (
    DegeneratePlane,
    HyperbolicityViolation,
    ImproperPoint,
    NonIntersectingPlanes,
)
from cobweb.projmetric import (
    PointVec,
    PlaneForm,
    angle,
    build_gram,
    canonicalize,
    distance,
    face_plane,
    foot_and_distance,
    gram_closed_form,
    point_line_distance,
    polarity,
    polarity_inv,
    reflect,
)
from cobweb.wgroup import GENERATOR_NAMES, generators

from conftest import TABLE_TRIPLES, random_proper_points


def hyperbolic(u, v, w):
    return np.sin(np.pi / u) * np.sin(np.pi / w) - np.cos(np.pi / v) < -1e-12


triples = st.tuples(*(st.integers(3, 20),) * 3).filter(lambda t: hyperbolic(*t))


@settings(max_examples=150, derandomize=True, deadline=None)
@given(triples)
def test_gram_inverse_identity(t):
    g = build_gram(*t)
    assert np.abs(g.A @ g.B - np.eye(4)).max() <= 1e-12 * max(1.0, np.abs(g.A).max())
    assert g.detB < 0


@settings(max_examples=100, derandomize=True, deadline=None)
@given(triples)
def test_closed_form_matches_numeric_inverse(t):
    g = build_gram(*t)
    A, det = gram_closed_form(*t)
    assert det == pytest.approx(np.linalg.det(g.B), rel=1e-9, abs=1e-14)
    np.testing.assert_allclose(A, np.linalg.inv(g.B), rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("t", [(3, 3, 3), (4, 3, 4), (3, 4, 3), (3, 3, 5)])
def test_spherical_and_euclidean_rejected(t):
    with pytest.raises(HyperbolicityViolation):
        build_gram(*t)


def test_non_integer_rejected():
    with pytest.raises(HyperbolicityViolation):
        build_gram(2, 7, 3)


def test_signature_is_lorentzian(g454):
    ev = np.linalg.eigvalsh(g454.B)
    assert (ev < 0).sum() == 1 and (ev > 0).sum() == 3


@pytest.mark.parametrize("t", TABLE_TRIPLES)
def test_face_angles_are_essential_angles(t):
    g = build_gram(*t)
    b = [face_plane(i, g) for i in range(4)]
    assert angle(b[0], b[1]) == pytest.approx(np.pi / t[0], abs=1e-12)
    assert angle(b[1], b[2]) == pytest.approx(np.pi / t[1], abs=1e-12)
    assert angle(b[2], b[3]) == pytest.approx(np.pi / t[2], abs=1e-12)
    for i, j in [(0, 2), (0, 3), (1, 3)]:
        assert angle(b[i], b[j]) == pytest.approx(np.pi / 2, abs=1e-12)


def test_polarity_round_trip(g454, rng):
    for x in rng.normal(size=(20, 4)):
        p = polarity_inv(PointVec(x, g454))
        np.testing.assert_allclose(polarity(p).x, x, atol=1e-12)


def test_vertex_is_pole_of_opposite_face(g454):
    # pole of b^i is proportional to A_i
    for i in range(4):
        np.testing.assert_allclose(polarity(face_plane(i, g454)).x, g454.B[i], atol=0)
        assert face_plane(i, g454).contains(PointVec(np.eye(4)[(i + 1) % 4], g454))


def test_distance_matches_minkowski_oracle(g454, rng):
    # independent oracle: diagonalize A and measure in standard Minkowski space
    ev, Q = np.linalg.eigh(g454.A)
    order = np.argsort(ev)
    L = Q[:, order] * np.sqrt(np.abs(ev[order]))
    X = random_proper_points(g454, rng, 40)
    for x, y in zip(X[::2], X[1::2]):
        a, b = x @ L, y @ L
        a, b = a / np.sqrt(a[0] ** 2 - a[1:] @ a[1:]), b / np.sqrt(b[0] ** 2 - b[1:] @ b[1:])
        expect = np.arccosh(abs(a[0] * b[0] - a[1:] @ b[1:]))
        assert distance(PointVec(x, g454), PointVec(y, g454)) == pytest.approx(expect, abs=1e-9)


def test_distance_ignores_scale_and_sign(g454):
    x, y = PointVec([0, 0, 1, 0], g454), PointVec([0, 1, 1, 0], g454)
    d = distance(x, y)
    assert distance(x.scaled(-3.0), y.scaled(0.5)) == pytest.approx(d, abs=1e-12)
    assert distance(x, x) == 0.0


def test_distance_rejects_outer_points(g454):
    with pytest.raises(ImproperPoint):
        distance(PointVec([1, 0, 0, 0], g454), PointVec([0, 0, 1, 0], g454))


@pytest.mark.parametrize("t", [(4, 5, 4), (7, 3, 7), (10, 10, 10)])
def test_isometries_preserve_distance(t, rng):
    g = build_gram(*t)
    gens = generators(g)
    mats = [gens.matrix(n) for n in GENERATOR_NAMES]
    X = random_proper_points(g, rng, 600)
    c = PointVec(X.mean(axis=0), g)
    checked = 0
    for x, y in zip(X[::2], X[1::2]):
        M = np.eye(4)
        for k in rng.integers(0, len(mats), size=rng.integers(1, 7)):
            M = M @ mats[k]
        # a long translation puts coordinates near 1e4 and <X,X> then
        # cancels to ~1e-8; keep to isometries that move c by <= 3
        if distance(c, PointVec(M @ c.x, g)) > 3.0:
            continue
        d0 = distance(PointVec(x, g), PointVec(y, g))
        d1 = distance(PointVec(M @ x, g), PointVec(M @ y, g))
        assert d1 == pytest.approx(d0, abs=1e-9)
        checked += 1
    assert checked >= 100


@pytest.mark.parametrize("t", TABLE_TRIPLES)
def test_reflections_are_involutions(t, rng):
    g = build_gram(*t)
    for u in rng.normal(size=(12, 4)):
        p = PlaneForm(u, g)
        if p.norm2 <= 1e-6:
            continue
        M = reflect(p).M
        np.testing.assert_allclose(M @ M, np.eye(4), atol=1e-10)
        np.testing.assert_allclose(M.T @ g.A @ M, g.A, atol=1e-10 * np.abs(g.A).max())


def test_reflection_fixes_its_plane(g454, rng):
    p = PlaneForm([0.3, -1.0, 0.4, 0.2], g454)
    M = reflect(p).M
    for x in rng.normal(size=(10, 4)):
        on = x - (x @ p.u) / (p.u @ g454.B @ p.u) * (g454.B @ p.u)
        np.testing.assert_allclose(M @ on, on, atol=1e-12)


def test_reflect_rejects_improper_plane(g454):
    # polar plane of a proper point does not meet the model
    with pytest.raises(DegeneratePlane):
        reflect(polarity_inv(PointVec([0, 0, 1, 0], g454)))


def test_non_intersecting_planes(g454):
    a3 = polarity_inv(PointVec([0, 0, 0, 1], g454))
    # a3 and b3 are ultraparallel (common perpendicular A3A2-line)
    with pytest.raises(NonIntersectingPlanes):
        angle(a3, face_plane(3, g454))


def test_triangle_inequality(rng):
    for t in [(4, 5, 4), (6, 6, 6), (14, 14, 14)]:
        g = build_gram(*t)
        X = random_proper_points(g, rng, 400)
        n = 0
        for a, b, c in zip(X[0::3], X[1::3], X[2::3]):
            a, b, c = (PointVec(v, g) for v in (a, b, c))
            assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12
            n += 1
        assert n >= 100


def test_foot_is_on_plane_and_distance_halves_mirror_gap(g454):
    x = PointVec([0.2, 0.3, 1.0, 0.1], g454)
    p = face_plane(1, g454)
    foot, d = foot_and_distance(x, p)
    assert p.contains(foot)
    mirror = PointVec(reflect(p).M @ x.x, g454)
    assert 2 * d == pytest.approx(distance(x, mirror), abs=1e-12)


def test_point_line_distance_is_half_of_half_turn_gap(g454):
    from cobweb.orthoscheme import half_turn_matrix

    x = PointVec([0.1, 0.5, 1.0, 0.2], g454)
    a, b = PointVec([1, 0, 0, 1], g454), PointVec([0, 1, 1, 0], g454)
    hx = PointVec(half_turn_matrix() @ x.x, g454)
    assert 2 * point_line_distance(x, a, b) == pytest.approx(distance(x, hx), abs=1e-12)


def test_canonicalize_normalizes(g454, rng):
    X = random_proper_points(g454, rng, 50)
    C = canonicalize(-3.0 * X, g454)
    np.testing.assert_allclose(np.einsum("ij,jk,ik->i", C, g454.A, C), -1.0, atol=1e-12)
    lead = C[np.arange(len(C)), np.argmax(np.abs(C) > 1e-12, axis=1)]
    assert (lead > 0).all()
