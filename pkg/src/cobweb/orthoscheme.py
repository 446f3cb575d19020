"""The complete orthoscheme, its distinguished sites, and volumes."""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import zeta

from cobweb.errors import (
    AsymmetricOrthoscheme,
    HyperbolicityViolation,
    ImproperPoint,
    NegativeRadius,
    UnknownSite,
)
from cobweb.projmetric import TOL, Isometry, PointVec, canonicalize

TABLE_SITES = ("A2", "Q", "E", "J", "F03", "F12")

# Vertices of the half trunc-orthoscheme W, used as reference points for
# interior positions.
W_VERTICES = ("A2", "Q", "J", "E", "F12", "E02", "F03")

_STABILIZERS = {
    "A2": lambda u, v: 4 * u,
    "Q": lambda u, v: 4 * u,
    "F03": lambda u, v: 4 * v,
    "J": lambda u, v: 4 * v,
    "F12": lambda u, v: 8,
    "E": lambda u, v: 8,
    "E02": lambda u, v: 8,
    "H": lambda u, v: 2,
    "mirror": lambda u, v: 2,
    "Interior": lambda u, v: 1,
}

STABILIZER_CATALOGUE = tuple(_STABILIZERS)


def stabilizer_order(label, g):
    """Order of the stabilizer of a site type in W(u; v; w=u)."""
    base = site_kind(label)
    try:
        return _STABILIZERS[base](g.u, g.v)
    except KeyError:
        raise UnknownSite(f"unknown site label {label!r}; known: {', '.join(STABILIZER_CATALOGUE)}") from None


def site_kind(label):
    """'H(0.5)' -> 'H', 'Interior(...)' -> 'Interior'."""
    return label.split("(", 1)[0]


@dataclass(frozen=True, eq=False)
class Site:
    label: str
    point: PointVec = field(repr=False)
    stabilizer_order: int

    @property
    def x(self):
        return self.point.x


def half_turn_matrix():
    """Coordinate permutation (0 3)(1 2); an isometry exactly when u = w."""
    return np.eye(4)[[3, 2, 1, 0]]


def half_turn(g):
    if not g.symmetric:
        raise AsymmetricOrthoscheme(f"half-turn h needs u = w, got u={g.u}, w={g.w}")
    return Isometry(half_turn_matrix(), "h")


def _require_complete(g):
    if not g.symmetric:
        raise AsymmetricOrthoscheme(f"sites need u = w, got u={g.u}, w={g.w}")
    if not g.truncatable:
        raise HyperbolicityViolation(
            f"(u,v,w)=({g.u},{g.v},{g.w}): A0 and A3 are not outer points "
            f"(needs 1/u + 1/v < 1/2), so the orthoscheme cannot be truncated"
        )


def site_vectors(g):
    """Raw coordinate vectors of the named sites (no normalization)."""
    _require_complete(g)
    A = g.A
    e = np.eye(4)
    vecs = {
        "A2": e[2],
        "Q": e[2] - A[2, 3] / A[3, 3] * e[3],
        "E": e[1] - A[1, 3] / A[3, 3] * e[3],
        "J": e[0] - A[0, 3] / A[3, 3] * e[3],
        "F03": e[0] + e[3],
        "F12": e[1] + e[2],
    }
    vecs["E02"] = half_turn_matrix() @ vecs["E"]
    return vecs


def sites(g):
    """Map label -> Site for the fixed sites of W(u; v; w=u)."""
    out = {}
    for label, x in site_vectors(g).items():
        p = PointVec(x, g)
        if not p.proper:
            raise ImproperPoint(f"site {label} is not a proper point for {(g.u, g.v, g.w)}")
        out[label] = Site(label, p, stabilizer_order(label, g))
    return out


def axis_site(g, t):
    """H(t) = F03 + t F12, a point on the half-turn axis (t > 0)."""
    if t <= 0:
        raise ValueError("axis parameter t must be positive")
    v = site_vectors(g)
    return Site(f"H({t:g})", PointVec(v["F03"] + t * v["F12"], g), stabilizer_order("H", g))


def interior_site(g, weights):
    """Point with positive hull weights over the vertices of W (canonical reps)."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(W_VERTICES),) or np.any(weights < 0) or weights.sum() <= 0:
        raise ValueError(f"need {len(W_VERTICES)} nonnegative weights")
    v = site_vectors(g)
    verts = canonicalize(np.array([v[k] for k in W_VERTICES]), g)
    # put every vertex on the same sheet as A2 before mixing
    verts *= np.sign(-(verts @ g.A @ verts[0]))[:, None]
    x = (weights / weights.sum()) @ verts
    label = "Interior(" + ",".join(f"{w:.6g}" for w in weights / weights.sum()) + ")"
    return Site(label, PointVec(x, g), stabilizer_order("Interior", g))


def resolve_site(label, g, _cache=None):
    """Site for a label, including parameterized H(t)."""
    kind = site_kind(label)
    if kind == "H":
        try:
            t = float(label[2:-1])
        except ValueError:
            raise UnknownSite(f"malformed axis site {label!r}; expected H(t)") from None
        return axis_site(g, t)
    table = _cache if _cache is not None else sites(g)
    if label not in table:
        raise UnknownSite(f"unknown site label {label!r}; known: {', '.join(table)}, H(t)")
    return table[label]


# --- Lobachevsky function -------------------------------------------------

_NTERMS = 40
_n = np.arange(1, _NTERMS + 1)
# zeta(2n) / (n (2n+1)); the series runs in powers of (x/pi)^2
_COEF = zeta(2.0 * _n) / (_n * (2 * _n + 1))


def _lob_reduced(x):
    # x in [0, pi/2]; terms shrink like 4^-n at the right end
    if x == 0.0:
        return 0.0
    return x - x * np.log(2.0 * x) + x * float(np.sum(_COEF * (x / np.pi) ** (2 * _n)))


def lobachevsky(x):
    """Lobachevsky function  L(x) = -int_0^x log|2 sin t| dt.

    Evaluated by the power series of log(sin t / t), whose coefficients
    are zeta values, on the reduced argument |x| <= pi/2.
    """
    x = float(x)
    r = np.remainder(x, np.pi)
    if r > np.pi / 2:
        return -_lob_reduced(np.pi - r)
    return _lob_reduced(r)


def lobachevsky_quad(x):
    """Slow reference evaluation of L(x) by adaptive quadrature."""
    x = float(x)
    if x == 0.0:
        return 0.0
    lo, hi = sorted((0.0, x))
    # knots at every multiple of pi/2 keep each log singularity at one end only
    half = np.pi / 2
    breaks = [k * half for k in range(int(np.ceil(lo / half)), int(np.floor(hi / half)) + 1)]
    knots = sorted(set([lo, hi] + [b for b in breaks if lo <= b <= hi]))
    total = 0.0
    with warnings.catch_warnings():
        # QUADPACK flags roundoff near the log singularities at ~1e-14
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(knots[:-1], knots[1:]):
            val, _ = integrate.quad(lambda t: np.log(abs(2.0 * np.sin(t))), a, b,
                                    epsabs=1e-14, epsrel=1e-13, limit=200)
            total += val
    return -total if x > 0 else total


def orthoscheme_angles(g):
    return np.pi / g.u, np.pi / g.v, np.pi / g.w


def orthoscheme_volume(g, lob=lobachevsky):
    """Volume of the complete orthoscheme O(pi/u, pi/v, pi/w).

    ``lob`` selects the Lobachevsky evaluator, so the same formula can be
    run against the quadrature reference.
    """
    a, b, c = orthoscheme_angles(g)
    rad = np.cos(b) ** 2 - np.sin(a) ** 2 * np.sin(c) ** 2
    if rad < -TOL:
        raise HyperbolicityViolation(f"radicand {rad:.3g} < 0: orthoscheme is not hyperbolic")
    theta = np.arctan(np.sqrt(max(rad, 0.0)) / (np.cos(a) * np.cos(c)))
    return 0.25 * (
        lob(a + theta) - lob(a - theta)
        + lob(np.pi / 2 + b - theta) + lob(np.pi / 2 - b - theta)
        + lob(c + theta) - lob(c - theta)
        + 2.0 * lob(np.pi / 2 - theta)
    )


def ball_volume(R):
    """Volume of a hyperbolic ball of radius R: pi (sinh 2R - 2R)."""
    if R < 0:
        raise NegativeRadius(f"radius {R} < 0")
    if R < 1e-3:
        # cancellation guard; series error is O(R^9)
        return 4.0 / 3.0 * np.pi * R**3 * (1 + R**2 / 5 + 2 * R**4 / 105)
    return float(np.pi * (np.sinh(2 * R) - 2 * R))


def ball_volume_series(R, terms=3):
    """Truncated power series 4/3 pi R^3 (1 + R^2/5 + 2R^4/105 + ...)."""
    coeffs = [1.0, 1 / 5, 2 / 105, 1 / 945][:terms]
    return 4.0 / 3.0 * np.pi * R**3 * sum(c * R ** (2 * k) for k, c in enumerate(coeffs))
