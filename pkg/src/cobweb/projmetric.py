"""Projective-metric linear algebra of hyperbolic 3-space.

Points are vectors ``X = X^i A_i`` in the vertex basis of a coordinate
orthoscheme, planes are covectors ``u = b^i u_i`` in the dual face basis.
The bilinear form on covectors is the Coxeter-Schlafli matrix ``B`` and on
vectors its inverse ``A``; polarity maps between the two.  Proper points
satisfy ``<X, X> < 0`` and proper planes ``<u, u> > 0``.

All objects are immutable; operations are pure functions.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from cobweb.errors import (
    DegeneratePlane,
    FootImproper,
    HyperbolicityViolation,
    ImproperPoint,
    NonIntersectingPlanes,
)

TOL = 1e-9
CONSTRUCTION_TOL = 1e-12
COMPOSITION_TOL = 1e-10
# arccos/arccosh arguments may overshoot the domain by rounding only
CLAMP_TOL = 1e-10


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def gram_closed_form(u, v, w):
    """Vertex scalar products (A_ij) written out entrywise.

    Returns ``(A, detB)``.  Independent of any numerical inversion, so it
    serves as a cross-check on ``inv(B)``.
    """
    cu, cv, cw = (np.cos(np.pi / n) for n in (u, v, w))
    su2, sw2 = np.sin(np.pi / u) ** 2, np.sin(np.pi / w) ** 2
    det = su2 * sw2 - cv**2
    A = np.array([
        [sw2 - cv**2, cu * sw2, cu * cv, cu * cv * cw],
        [cu * sw2, sw2, cv, cw * cv],
        [cu * cv, cv, su2, cw * su2],
        [cu * cv * cw, cw * cv, cw * su2, su2 - cv**2],
    ])
    return A / det, det


@dataclass(frozen=True)
class GramMatrix:
    """Form matrices of the orthoscheme with essential angles pi/u, pi/v, pi/w.

    ``B`` holds the face-normal products b^{ij}, ``A = B^{-1}`` the vertex
    products A_ij.  Build through :func:`build_gram`.
    """

    u: int
    v: int
    w: int
    B: np.ndarray = field(repr=False, compare=False)
    A: np.ndarray = field(repr=False, compare=False)
    detB: float = field(compare=False)

    @property
    def symmetric(self):
        return self.u == self.w

    @property
    def truncatable(self):
        """Both outer vertices A0 and A3 lie beyond the absolute."""
        return self.A[0, 0] > TOL and self.A[3, 3] > TOL

    def ip(self, x, y):
        """Scalar product of point coordinate vectors (broadcasting)."""
        return np.einsum("...i,ij,...j->...", x, self.A, y)

    def ip_planes(self, p, q):
        return np.einsum("...i,ij,...j->...", p, self.B, q)

    def vertex(self, i):
        return PointVec(np.eye(4)[i], self)


@lru_cache(maxsize=256)
def build_gram(u, v, w):
    """Build and cross-validate the Gram matrices for parameters (u, v, w).

    Raises HyperbolicityViolation unless det B < 0, i.e.
    ``sin(pi/u) sin(pi/w) < cos(pi/v)``.
    """
    for n in (u, v, w):
        if int(n) != n or n < 3:
            raise HyperbolicityViolation(f"parameters must be integers >= 3, got {(u, v, w)}")
    u, v, w = int(u), int(v), int(w)
    margin = np.sin(np.pi / u) * np.sin(np.pi / w) - np.cos(np.pi / v)
    # a vanishing margin is the Euclidean case, e.g. (4, 3, 4)
    if margin >= -CONSTRUCTION_TOL:
        raise HyperbolicityViolation(
            f"(u,v,w)=({u},{v},{w}) is not hyperbolic: "
            f"sin(pi/u)sin(pi/w) - cos(pi/v) = {margin:.6g} is not negative"
        )
    cu, cv, cw = (-np.cos(np.pi / n) for n in (u, v, w))
    B = np.array([
        [1.0, cu, 0.0, 0.0],
        [cu, 1.0, cv, 0.0],
        [0.0, cv, 1.0, cw],
        [0.0, 0.0, cw, 1.0],
    ])
    A, det = gram_closed_form(u, v, w)
    if np.abs(A @ B - np.eye(4)).max() > CONSTRUCTION_TOL:
        raise ArithmeticError("closed-form inverse disagrees with B")
    if np.abs(np.linalg.inv(B) - A).max() > CONSTRUCTION_TOL * max(1.0, np.abs(A).max()):
        raise ArithmeticError("closed-form inverse disagrees with numeric inverse")
    if np.sum(np.linalg.eigvalsh(B) < 0) != 1:
        raise HyperbolicityViolation(f"signature of B is not (+,+,+,-) for {(u, v, w)}")
    return GramMatrix(u, v, w, _frozen(B), _frozen(A), float(det))


@dataclass(frozen=True, eq=False)
class PointVec:
    """A point X^i A_i together with its self product ``q = <X, X>``."""

    x: np.ndarray
    g: GramMatrix = field(repr=False, compare=False)
    q: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x))
        object.__setattr__(self, "q", float(self.g.ip(self.x, self.x)))

    @property
    def kind(self):
        scale = max(1.0, float(np.abs(self.x).max()) ** 2)
        if self.q < -TOL * scale:
            return "proper"
        if self.q > TOL * scale:
            return "outer"
        return "ideal"

    @property
    def proper(self):
        return self.kind == "proper"

    def canonical(self):
        """Representative with <X,X> = -1 (proper) and first nonzero entry > 0."""
        return PointVec(canonicalize(self.x, self.g), self.g)

    def __add__(self, other):
        return PointVec(self.x + other.x, self.g)

    def scaled(self, c):
        return PointVec(c * self.x, self.g)


def canonicalize(x, g):
    """Array version of :meth:`PointVec.canonical` for stacks of vectors."""
    x = np.asarray(x, dtype=float)
    q = g.ip(x, x)
    x = x / np.sqrt(np.abs(q))[..., None]
    lead = np.take_along_axis(x, np.argmax(np.abs(x) > 1e-12, axis=-1)[..., None], axis=-1)
    return x * np.sign(lead)


@dataclass(frozen=True, eq=False)
class PlaneForm:
    """A plane b^i u_i with pole U^k = u_i b^{ik}."""

    u: np.ndarray
    g: GramMatrix = field(repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "u", _frozen(self.u))

    @property
    def pole(self):
        return PointVec(self.g.B @ self.u, self.g)

    @property
    def norm2(self):
        return float(self.g.ip_planes(self.u, self.u))

    @property
    def proper(self):
        return self.norm2 > TOL

    def contains(self, x, tol=TOL):
        xv = x.x if isinstance(x, PointVec) else np.asarray(x)
        return abs(float(xv @ self.u)) <= tol * max(1.0, np.linalg.norm(xv) * np.linalg.norm(self.u))


def face_plane(i, g):
    """Coordinate face plane b^i (opposite vertex A_i)."""
    return PlaneForm(np.eye(4)[i], g)


def polarity(p, g=None):
    """Pole point of plane ``p``."""
    g = g or p.g
    return PointVec(g.B @ p.u, g)


def polarity_inv(x, g=None):
    """Polar plane of point ``x``: u_j = X^i A_ij."""
    g = g or x.g
    return PlaneForm(x.x @ g.A, g)


def _clamped(value, lo, hi):
    if value < lo - CLAMP_TOL or value > hi + CLAMP_TOL:
        return None
    return min(max(value, lo), hi)


def angle(p, q, g=None):
    """Dihedral angle between two proper intersecting planes, in [0, pi]."""
    g = g or p.g
    pp, qq, pq = g.ip_planes(p.u, p.u), g.ip_planes(q.u, q.u), g.ip_planes(p.u, q.u)
    if pp <= TOL or qq <= TOL:
        raise DegeneratePlane("angle needs proper planes")
    c = -pq / np.sqrt(pp * qq)
    cc = _clamped(c, -1.0, 1.0)
    if cc is None:
        raise NonIntersectingPlanes(f"cos(angle) = {c:.12g} outside [-1, 1]; planes do not meet")
    return float(np.arccos(cc))


def distance(x, y, g=None):
    """Hyperbolic distance between proper points (curvature -1)."""
    g = g or x.g
    for p in (x, y):
        if p.q >= -TOL:
            raise ImproperPoint(f"point {np.round(p.x, 6).tolist()} is not proper (q={p.q:.3g})")
    return float(distances(x.x, y.x[None], g)[0])


def distances(x, ys, g):
    """Vectorized distances from ``x`` to the rows of ``ys``.

    Uses 2 asinh(sqrt(<D,D>)/2) with D the difference of unit
    representatives on one sheet, which stays accurate for nearby points
    where arccosh(1 + eps) would lose half the digits.
    """
    x = np.asarray(x, dtype=float)
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    xu = x / np.sqrt(-g.ip(x, x))
    yu = ys / np.sqrt(-g.ip(ys, ys))[:, None]
    # same sheet: <X, Y> <= -1
    yu = yu * -np.sign(yu @ (g.A @ xu))[:, None]
    D = yu - xu
    dd = np.maximum(g.ip(D, D), 0.0)
    return 2.0 * np.arcsinh(np.sqrt(dd) / 2.0)


def cosh_distances(x, ys, g):
    """Vectorized cosh of distances from point vector ``x`` to rows of ``ys``.

    Sign-agnostic: representatives on either sheet give the same value.
    """
    num = np.abs(ys @ (g.A @ x))
    den = np.sqrt(g.ip(x, x) * g.ip(ys, ys))
    return np.maximum(num / den, 1.0)


@dataclass(frozen=True, eq=False)
class Isometry:
    """A 4x4 matrix acting on point coordinates, with the word that built it."""

    M: np.ndarray
    word: str = ""

    def __post_init__(self):
        object.__setattr__(self, "M", _frozen(self.M))

    def __call__(self, x):
        return apply(self, x)

    def __matmul__(self, other):
        return compose(self, other)

    def inverse(self):
        return Isometry(np.linalg.inv(self.M), f"({self.word})^-1")

    def form_defect(self, g):
        """max |M^T A M - A|, entrywise."""
        return float(np.abs(self.M.T @ g.A @ self.M - g.A).max())

    def is_identity(self, tol=COMPOSITION_TOL):
        return np.abs(self.M - np.eye(4)).max() <= tol


IDENTITY = Isometry(np.eye(4), "")


def reflect(p, g=None):
    """Reflection in the proper plane ``p``: X -> X - 2 (X u)/<u,u> U."""
    g = g or p.g
    nn = g.ip_planes(p.u, p.u)
    if nn <= TOL:
        raise DegeneratePlane(f"<u,u> = {nn:.3g}; cannot reflect in a non-proper plane")
    U = g.B @ p.u
    return Isometry(np.eye(4) - 2.0 * np.outer(U, p.u) / nn)


def compose(a, b):
    """Matrix product a.M @ b.M (``b`` acts first)."""
    word = " ".join(s for s in (a.word, b.word) if s)
    return Isometry(a.M @ b.M, word)


def apply(a, x):
    return PointVec(a.M @ x.x, x.g)


def foot_and_distance(x, p, g=None):
    """Orthogonal projection of ``x`` onto plane ``p`` and the distance to it."""
    g = g or p.g
    nn = g.ip_planes(p.u, p.u)
    if nn <= TOL:
        raise DegeneratePlane(f"<b,b> = {nn:.3g}")
    if x.q >= -TOL:
        raise ImproperPoint("foot_and_distance needs a proper point")
    foot = PointVec(x.x - (x.x @ p.u) / nn * (g.B @ p.u), g)
    if foot.q >= 0:
        raise FootImproper("projection of a proper point left the model")
    return foot, distance(x, foot, g)


def point_plane_distance(x, p, g=None):
    return foot_and_distance(x, p, g)[1]


def line_foot(x, a, b, g=None):
    """Foot of the perpendicular from ``x`` to the line through points a, b."""
    g = g or x.g
    basis = np.array([a.x, b.x])
    G2 = basis @ g.A @ basis.T
    coef = np.linalg.solve(G2, basis @ g.A @ x.x)
    return PointVec(coef @ basis, g)


def point_line_distance(x, a, b, g=None):
    g = g or x.g
    foot = line_foot(x, a, b, g)
    if foot.q >= -TOL:
        raise FootImproper("projection onto the line is not a proper point")
    return distance(x, foot, g)
