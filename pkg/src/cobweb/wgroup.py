"""The extended complete orthoscheme group W(u; v; w=u) as a matrix group.

Generators are the six mirror reflections of the complete orthoscheme
(b0..b3 in the coordinate faces, a0 and a3 in the truncating planes) and
the half-turn h.  Words are written left to right and evaluated as the
left-to-right matrix product, so ``"a3 b0"`` is ``M_a3 @ M_b0``.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from cobweb.errors import (
    AsymmetricOrthoscheme,
    EvenZ,
    HorizonTooLarge,
    UnknownGenerator,
    WrongSeries,
)
from cobweb.orthoscheme import _require_complete, half_turn_matrix, site_vectors
from cobweb.projmetric import (
    COMPOSITION_TOL,
    Isometry,
    PointVec,
    build_gram,
    canonicalize,
    cosh_distances,
    distances,
    face_plane,
    polarity_inv,
    reflect,
)

REFLECTIONS = ("b0", "b1", "b2", "b3", "a0", "a3")
GENERATOR_NAMES = REFLECTIONS + ("h",)
RELATOR_TOL = 1e-8
DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class GeneratorSet:
    """Named generator isometries of W(u; v; w=u)."""

    g: object = field(repr=False)
    by_name: dict = field(repr=False)

    def __getitem__(self, name):
        try:
            return self.by_name[name]
        except KeyError:
            raise UnknownGenerator(f"unknown generator {name!r}; known: {' '.join(self.by_name)}") from None

    def matrix(self, name):
        return self[name].M

    def __iter__(self):
        return iter(self.by_name)


def generators(g):
    """Build the seven generators and check they are form-preserving involutions."""
    if not g.symmetric:
        raise AsymmetricOrthoscheme(f"half-turn h needs u = w, got u={g.u}, w={g.w}")
    _require_complete(g)
    e = np.eye(4)
    by_name = {f"b{i}": reflect(face_plane(i, g), g) for i in range(4)}
    by_name["a0"] = reflect(polarity_inv(PointVec(e[0], g)), g)
    by_name["a3"] = reflect(polarity_inv(PointVec(e[3], g)), g)
    by_name["h"] = Isometry(half_turn_matrix(), "h")
    for name, iso in by_name.items():
        by_name[name] = Isometry(iso.M, name)
        if np.abs(iso.M @ iso.M - e).max() > COMPOSITION_TOL:
            raise ArithmeticError(f"generator {name} is not an involution")
        if iso.form_defect(g) > COMPOSITION_TOL * max(1.0, np.abs(g.A).max()):
            raise ArithmeticError(f"generator {name} does not preserve the form")
    return GeneratorSet(g, by_name)


def parse_word(word):
    """Tokenize ``"a3 h b1^-1 (b0 b1)^3"`` into a flat list of (name, exponent)."""
    if isinstance(word, (list, tuple)):
        return [(t, 1) if isinstance(t, str) else tuple(t) for t in word]
    out = []
    text = word.replace("*", " ").replace(".", " ")
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch == "(":
            depth, j = 1, i + 1
            while depth:
                if j >= len(text):
                    raise ValueError(f"unbalanced parentheses in {word!r}")
                depth += {"(": 1, ")": -1}.get(text[j], 0)
                j += 1
            inner = parse_word(text[i + 1:j - 1])
            exp, i = _read_exponent(text, j)
            if exp < 0:
                inner = [(n, -e) for n, e in reversed(inner)]
            out.extend(inner * abs(exp))
        else:
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            if j == i:
                raise ValueError(f"unexpected character {ch!r} in {word!r}")
            name = text[i:j]
            exp, i = _read_exponent(text, j)
            out.append((name, exp))
    return out


def _read_exponent(text, j):
    if j < len(text) and text[j] == "^":
        k = j + 1
        if k < len(text) and text[k] in "+-":
            k += 1
        while k < len(text) and text[k].isdigit():
            k += 1
        return int(text[j + 1:k]), k
    return 1, j


def evaluate_word(word, gens):
    """Left-to-right matrix product of the generators named in ``word``."""
    M = np.eye(4)
    names = []
    for name, exp in parse_word(word):
        G = gens.matrix(name) if isinstance(gens, GeneratorSet) else _lookup(gens, name)
        if exp < 0:
            G = np.linalg.inv(G)
        M = M @ np.linalg.matrix_power(G, abs(exp))
        names.append(name if exp == 1 else f"{name}^{exp}")
    return Isometry(M, " ".join(names))


def _lookup(table, name):
    try:
        val = table[name]
    except KeyError:
        raise UnknownGenerator(f"unknown generator {name!r}") from None
    return val.M if isinstance(val, Isometry) else np.asarray(val)


# --- presentation of W ---------------------------------------------------

def w_relators(u, v):
    """Relators of the economical presentation of W(u; v; w=u)."""
    return [
        ("a3a3", "a3 a3"),
        ("b0b0", "b0 b0"),
        ("b1b1", "b1 b1"),
        ("hh", "h h"),
        ("(a3b0)^2", "(a3 b0)^2"),
        ("(a3b1)^2", "(a3 b1)^2"),
        ("(a3hb1h)^2", "(a3 h b1 h)^2"),
        (f"(b0b1)^{u}", f"(b0 b1)^{u}"),
        ("(hb0hb0)^2", "(h b0 h b0)^2"),
        ("(hb0hb1)^2", "(h b0 h b1)^2"),
        (f"(hb1hb1)^{v}", f"(h b1 h b1)^{v}"),
    ]


@dataclass
class RelatorResult:
    name: str
    word: str
    residual: float
    tol: float = RELATOR_TOL

    @property
    def passed(self):
        return self.residual <= self.tol


@dataclass
class RelatorReport:
    title: str
    rows: list
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return all(r.passed for r in self.rows)

    @property
    def max_residual(self):
        return max((r.residual for r in self.rows), default=0.0)

    def failures(self):
        return [r for r in self.rows if not r.passed]

    def to_text(self):
        lines = [f"# {self.title}", "relator\tresidual\tstatus\tword"]
        for r in self.rows:
            lines.append(f"{r.name}\t{r.residual:.3e}\t{'pass' if r.passed else 'FAIL'}\t{r.word}")
        lines += [f"# {n}" for n in self.notes]
        lines.append(f"# {'PASS' if self.passed else 'FAIL'} max_residual={self.max_residual:.3e}")
        return "\n".join(lines)


def relator_residual(word, gens):
    """max |M(word) - I| entrywise."""
    return float(np.abs(evaluate_word(word, gens).M - np.eye(4)).max())


def verify_W_presentation(g, relators=None, tol=RELATOR_TOL):
    """Evaluate every relator of W(u; v; w=u) as a matrix word."""
    gens = generators(g)
    relators = relators if relators is not None else w_relators(g.u, g.v)
    rows = [RelatorResult(name, word, relator_residual(word, gens), tol) for name, word in relators]
    return RelatorReport(f"W({g.u};{g.v};{g.w}) presentation", rows)


def admissible(u, v):
    """(u, v, w=u) gives a complete orthoscheme with truncatable outer vertices."""
    from cobweb.errors import HyperbolicityViolation

    try:
        return build_gram(u, v, u).truncatable
    except HyperbolicityViolation:
        return False


# --- cobweb manifold groups ---------------------------------------------

@dataclass
class Presentation:
    """Symbolic presentation; relators are lists of (generator, +1/-1)."""

    z: int
    series: str
    param: dict
    generators: list
    relators: list  # (name, [(gen, sign), ...])

    @property
    def n_generators(self):
        return len(self.generators)

    def relator_words(self):
        return [(name, " ".join(g if s > 0 else f"{g}^-1" for g, s in toks)) for name, toks in self.relators]

    def to_text(self):
        params = " ".join(f"{k}={v}" for k, v in self.param.items())
        lines = [
            f"# Cw({2 * self.z}) series={self.series} z={self.z} {params}",
            "generators: " + " ".join(self.generators),
        ]
        for name, toks in self.relators:
            lines.append(f"{name}: " + " ".join(("+" if s > 0 else "-") + g for g, s in toks))
        return "\n".join(lines)


def _idx(i, z):
    """Index reduced mod z into 1..z."""
    return (i - 1) % z + 1


def cw_presentation(z):
    """Presentation of the cobweb group Cw(2z) for odd z >= 3."""
    if int(z) != z or z < 3 or z % 2 == 0:
        raise EvenZ(f"cobweb groups need odd z >= 3, got {z}")
    z = int(z)
    gens = ["s"] + [f"s{i}" for i in range(1, z + 1)] + [f"c{i}" for i in range(1, z + 1)]

    def c(i, sign=1):
        return (f"c{_idx(i, z)}", sign)

    rel = []
    if z % 4 == 3:
        p = (z + 1) // 4
        for i in range(1, z + 1):
            rel.append((f"e{2 * i - 1}", [(f"s{i}", 1), c(i + p, -1), c(i - 1 + 2 * p, -1), ("s", -1)]))
            rel.append((f"e{2 * i}", [("s", -1), c(i), c(i - p), ("s", -1)]))
        long = [t for i in range(1, z + 1) for t in (c(i), c(i - p), c(i - 1 + 2 * p), c(i + p))]
        rel.append(("long", long))
        return Presentation(z, "first", {"p": p}, gens, rel)
    q = (z - 1) // 4
    for i in range(1, z + 1):
        rel.append((f"e{2 * i - 1}", [(f"s{i}", 1), c(i - q, -1), c(i + 2 * q, -1), ("s", -1)]))
        rel.append((f"e{2 * i}", [("s", -1), c(i), c(i + q), ("s", -1)]))
    long = [t for i in range(1, z + 1) for t in (c(i), c(i + q), c(i + 2 * q), c(i - q))]
    rel.append(("long", long))
    return Presentation(z, "second", {"q": q}, gens, rel)


def cw_generators(z, g=None):
    """Matrices s, s_i, c_i of Cw(2z) for the first series z = 4p - 1.

    s, s1 and c1 are the explicit reflection words; s_i and c_i for i > 1
    are conjugates of s1, c1 by (b0 b1)^(i-1).
    """
    if int(z) != z or z < 3 or z % 2 == 0:
        raise EvenZ(f"cobweb groups need odd z >= 3, got {z}")
    if z % 4 != 3:
        raise WrongSeries(f"z={z} is in the second series; generator words are only known for z = 3 mod 4")
    z = int(z)
    g = g or build_gram(2 * z, 2 * z, 2 * z)
    if (g.u, g.v, g.w) != (2 * z, 2 * z, 2 * z):
        raise ValueError(f"Cw({2 * z}) lives in W({2 * z};{2 * z};{2 * z}), got {(g.u, g.v, g.w)}")
    p = (z + 1) // 4
    gens = generators(g)
    out = {
        "s": evaluate_word(f"a3 h b0 h (b1 b0)^{z - 1}", gens),
        "s1": evaluate_word("a3 h b1 h b1 b0", gens),
        "c1": evaluate_word(f"h (b0 b1)^{1 + p}", gens),
    }
    R = gens.matrix("b0") @ gens.matrix("b1")
    for i in range(2, z + 1):
        K = np.linalg.matrix_power(R, i - 1)
        Ki = np.linalg.inv(K)
        out[f"s{i}"] = Isometry(K @ out["s1"].M @ Ki, f"(b0 b1)^{i - 1} s1 (b0 b1)^{1 - i}")
        out[f"c{i}"] = Isometry(K @ out["c1"].M @ Ki, f"(b0 b1)^{i - 1} c1 (b0 b1)^{1 - i}")
    return out


def rotation_angle(M):
    """Rotation angle in [0, pi] of an orientation-preserving isometry.

    The spectrum is {e^l, e^-l, e^{i t}, e^{-i t}}; the angle follows from
    tr M = 2 cosh l + 2 cos t.
    """
    ev = np.linalg.eigvals(M)
    ell = float(np.log(np.abs(ev).max()))
    c = (float(np.trace(M).real) - 2.0 * np.cosh(ell)) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def verify_cw(z, g=None, tol=RELATOR_TOL):
    """Per-relator residuals of the first-series presentation, plus checks.

    Extra rows check the stated consequence s_i = s c_{i-1+2p} c_{i+p}
    and the orientation of every generator.
    """
    pres = cw_presentation(z)
    mats = cw_generators(z, g)
    rows = [RelatorResult(name, word, relator_residual(word, mats), tol) for name, word in pres.relator_words()]
    p = pres.param["p"]
    for i in range(1, pres.z + 1):
        word = f"s{i}^-1 s c{_idx(i - 1 + 2 * p, pres.z)} c{_idx(i + p, pres.z)}"
        rows.append(RelatorResult(f"consequence{i}", word, relator_residual(word, mats), tol))
    notes = [f"det {k} = {np.linalg.det(v.M):+.12f}" for k, v in mats.items() if k in ("s", "s1", "c1")]
    notes.append(f"rotation angle of s = {rotation_angle(mats['s'].M):.12f} (2pi(z-1)/2z = {np.pi * (z - 1) / z:.12f})")
    return RelatorReport(f"Cw({2 * z}) first series p={p}", rows, notes)


# --- element and orbit enumeration ---------------------------------------

class QuantizedIndex:
    """Approximate set of projective points.

    Keys are the coordinates scaled to max-abs 1 and signed by the product
    with a fixed proper vertex (never zero for proper points), rounded to
    ``quantum``; near a cell boundary the neighbouring cell is probed too.
    A key hit counts as the same point only if the hyperbolic distance is
    below ``same``, so distinct points sharing a cell are kept apart.
    """

    def __init__(self, g, quantum=1e-9, same=1e-7):
        self.g = g
        self.quantum = quantum
        self.same = same
        self.table = {}
        self.size = 0
        self._ref = np.asarray(g.A)[:, 1]  # vertex e1 is proper

    def _cells(self, x):
        x = np.asarray(x, dtype=float)
        sign = -1.0 if x @ self._ref > 0 else 1.0
        f = sign * x / np.abs(x).max() / self.quantum
        base = np.round(f).astype(np.int64)
        frac = f - base
        cells = [tuple(base)]
        for k in np.nonzero(np.abs(frac) > 0.4)[0]:
            for cell in list(cells):
                alt = list(cell)
                alt[k] += 1 if frac[k] > 0 else -1
                cells.append(tuple(alt))
        return cells

    def find(self, x):
        for cell in self._cells(x):
            for y, value in self.table.get(cell, ()):
                if distances(x, y[None], self.g)[0] < self.same:
                    return value
        return None

    def add(self, x, value):
        """Insert unless present; returns (value stored, inserted?)."""
        hit = self.find(x)
        if hit is not None:
            return hit, False
        self.table.setdefault(self._cells(x)[0], []).append((np.asarray(x, dtype=float), value))
        self.size += 1
        return value, True

    def __len__(self):
        return self.size


def orthoscheme_vertices(g):
    """The eight proper vertices of the complete orthoscheme O, same sheet."""
    v = site_vectors(g)
    A = g.A
    e = np.eye(4)
    raw = [
        e[1], e[2],
        v["Q"], v["E"], v["J"],
        # a0 cuts the edges from A0
        e[1] - A[0, 1] / A[0, 0] * e[0],
        e[2] - A[0, 2] / A[0, 0] * e[0],
        e[3] - A[0, 3] / A[0, 0] * e[0],
    ]
    V = canonicalize(np.array(raw), g)
    return V * np.sign(-(V @ g.A @ V[0]))[:, None]


@dataclass
class ElementSet:
    """Elements M of the reflection subgroup W' together with the flag for M h.

    ``mats[k]`` is an element of the group generated by the six mirrors;
    each yields two elements of W, namely M and M h.
    """

    g: object = field(repr=False)
    mats: np.ndarray = field(repr=False)
    depth: np.ndarray = field(repr=False)
    parent: np.ndarray = field(repr=False)
    letter: np.ndarray = field(repr=False)
    saturated: bool
    horizon: int

    def __len__(self):
        return len(self.mats)

    def word(self, k, with_h=False):
        names = []
        while k > 0:
            names.append(REFLECTIONS[self.letter[k]])
            k = self.parent[k]
        names.reverse()
        if with_h:
            names.append("h")
        return " ".join(names)

    def all_matrices(self):
        """Stack of every enumerated element of W: [M..., M h...]."""
        H = half_turn_matrix()
        return np.concatenate([self.mats, self.mats @ H])


def enumerate_elements(g, centers, radius, horizon=12, cap=DEFAULT_CAP):
    """Tiles of the mirror group W' meeting the balls B(X, radius), X in centers.

    Breadth-first over right multiplication by the six reflections.  A tile
    M O is kept when d(X, M c) <= radius + rho for some X, where c is an
    interior reference point of O and rho its largest distance to a vertex
    of O.  Tiles met by a geodesic segment of length <= radius from X form
    a face-connected gallery of kept tiles, so this pruning loses nothing.
    ``saturated`` is False if the frontier was still non-empty at
    ``horizon``.
    """
    gens = generators(g)
    R = np.array([gens.matrix(n) for n in REFLECTIONS])
    V = orthoscheme_vertices(g)
    c = V.mean(axis=0)
    c = c / np.sqrt(-g.ip(c, c))
    rho = float(np.arccosh(cosh_distances(c, V, g).max()))
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    centers = centers / np.sqrt(-g.ip(centers, centers))[:, None]
    limit = np.cosh(radius + rho) * (1 + 1e-12)
    CA = centers @ g.A

    index = QuantizedIndex(g)
    index.add(c, 0)
    mats, depth, parent, letter = [np.eye(4)], [0], [-1], [-1]
    frontier = np.array([0])
    level = 0
    while len(frontier) and level < horizon:
        level += 1
        cand = np.stack([mats[k] for k in frontier])[:, None] @ R[None]  # (F, 6, 4, 4)
        cand = cand.reshape(-1, 4, 4)
        par = np.repeat(frontier, len(REFLECTIONS))
        let = np.tile(np.arange(len(REFLECTIONS)), len(frontier))
        imgs = cand @ c
        near = np.abs(imgs @ CA.T).min(axis=1) <= limit
        new = []
        for M, x, pa, le in zip(cand[near], imgs[near], par[near], let[near]):
            _, inserted = index.add(canonicalize(x, g), len(mats))
            if inserted:
                mats.append(M)
                depth.append(level)
                parent.append(pa)
                letter.append(le)
                new.append(len(mats) - 1)
        if len(mats) > cap:
            raise HorizonTooLarge(f"more than {cap} group elements within radius {radius:.4g}")
        frontier = np.array(new, dtype=int)
    return ElementSet(g, np.array(mats), np.array(depth), np.array(parent), np.array(letter),
                      saturated=len(frontier) == 0, horizon=horizon)


@dataclass
class OrbitCloud:
    """Distinct images of a site under words of length <= L."""

    label: str
    points: np.ndarray = field(repr=False)
    distances: np.ndarray = field(repr=False)
    depth: np.ndarray = field(repr=False)
    words: list = field(repr=False)
    horizon: int
    quantum: float
    radius: float = np.inf

    def __len__(self):
        return len(self.points)


def orbit(site, L, g, radius=np.inf, cap=DEFAULT_CAP, quantum=1e-9):
    """Breadth-first orbit of ``site`` under words of length <= L.

    Images are produced by left multiplication with the seven generators,
    so level k holds exactly the points reachable by words of length k.
    With a finite ``radius`` only points within that distance of the base
    are expanded, which truncates long detours; leave it infinite for the
    exact word-length orbit.
    """
    if L < 0:
        raise ValueError("horizon L must be >= 0")
    gens = generators(g)
    G = np.array([gens.matrix(n) for n in GENERATOR_NAMES])
    x0 = site.x if hasattr(site, "x") else np.asarray(site, dtype=float)
    label = getattr(site, "label", "point")
    x0 = canonicalize(x0, g)
    index = QuantizedIndex(g, quantum)
    index.add(x0, 0)
    pts, depth, parent, letter = [x0], [0], [-1], [-1]
    frontier = np.array([x0])
    fidx = [0]
    limit = np.cosh(radius) if np.isfinite(radius) else np.inf
    x0A = g.A @ x0
    for level in range(1, L + 1):
        imgs = np.einsum("gij,fj->fgi", G, frontier).reshape(-1, 4)
        imgs = canonicalize(imgs, g)
        par = np.repeat(fidx, len(G))
        let = np.tile(np.arange(len(G)), len(fidx))
        keep = np.abs(imgs @ x0A) <= limit
        new_pts, new_idx = [], []
        for x, pa, le in zip(imgs[keep], par[keep], let[keep]):
            _, inserted = index.add(x, len(pts))
            if inserted:
                pts.append(x)
                depth.append(level)
                parent.append(pa)
                letter.append(le)
                new_pts.append(x)
                new_idx.append(len(pts) - 1)
        if len(pts) > cap:
            raise HorizonTooLarge(f"orbit of {label} exceeds {cap} points at L={level}")
        if not new_pts:
            break
        frontier, fidx = np.array(new_pts), new_idx
    pts = np.array(pts)
    d = distances(x0, pts, g)
    order = np.argsort(d, kind="stable")

    def word(k):
        names = []
        while k > 0:
            names.append(GENERATOR_NAMES[letter[k]])
            k = parent[k]
        return " ".join(names)

    return OrbitCloud(label, pts[order], d[order], np.array(depth)[order],
                      [word(k) for k in order], L, quantum, radius)


def stabilizer_count(x, g, horizon):
    """Number of elements of W within ``horizon`` mirror letters fixing x.

    Elements are enumerated as tiles around x (every element fixing x maps
    the tile of x to a tile containing x).
    """
    x = canonicalize(np.asarray(x, dtype=float), g)
    els = enumerate_elements(g, [x], 0.0, horizon=horizon)
    imgs = canonicalize(els.all_matrices() @ x, g)
    return int(np.sum(np.abs(imgs - x).max(axis=1) < 1e-8))
