"""Equal-radius ball packings centred at orbits of W(u; v; w=u).

Each chosen site carries a ball of a common radius r.  The largest
admissible r is half the shortest distance between a site and any other
orbit point of the site set; the density sums the ball volume of every
site divided by its stabilizer order and by Vol(W) = vol(O)/2.
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy.optimize import minimize

from cobweb.errors import (
    DuplicateSite,
    HorizonExhausted,
    ImproperSite,
    SharedOrbit,
    UnknownTable,
)
from cobweb.orthoscheme import (
    Site,
    W_VERTICES,
    ball_volume,
    interior_site,
    orthoscheme_volume,
    resolve_site,
    sites as site_table,
)
from cobweb.projmetric import (
    PointVec,
    build_gram,
    cosh_distances,
    distances,
    face_plane,
    point_line_distance,
    point_plane_distance,
    polarity_inv,
)
from cobweb.wgroup import (
    DEFAULT_CAP,
    enumerate_elements,
    orbit,
    orthoscheme_vertices,
)

DEFAULT_HORIZON = 12
TIE_TOL = 1e-9
# images closer than this to a site are the site itself
SAME_POINT = 1e-7
TOL_R = 2e-4
TOL_VOL = 2e-4
TOL_DELTA = 5e-4
CSV_HEADER = "u,v,w,sites,r_opt,vol_O,vol_ball,delta,binding,residual_r,residual_delta"


@dataclass(frozen=True)
class PackingConfig:
    sites: tuple
    horizon: int = DEFAULT_HORIZON
    quantum: float = 1e-9
    tol_r: float = 1e-6
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        labels = [s.label if isinstance(s, Site) else s for s in self.sites]
        seen = set()
        for lab in labels:
            if lab in seen:
                raise DuplicateSite(f"site {lab} listed twice in {'+'.join(labels)}")
            seen.add(lab)
        if not labels:
            raise ValueError("need at least one site")

    @property
    def labels(self):
        return [s.label if isinstance(s, Site) else s for s in self.sites]


@dataclass
class PackingResult:
    u: int
    v: int
    w: int
    sites: list
    r_opt: float
    vol_O: float
    vol_ball: float
    delta: float
    binding: list = field(default_factory=list)
    stabilizers: list = field(default_factory=list)

    @property
    def site_key(self):
        return "+".join(self.sites)

    def binding_text(self):
        return "; ".join(self.binding)


def parse_sites(text):
    """'A2+F03+E' -> ['A2', 'F03', 'E']."""
    labels = [s.strip() for s in text.replace(",", "+").split("+") if s.strip()]
    PackingConfig(tuple(labels))  # duplicate check
    return labels


def resolve_sites(cfg, g):
    table = site_table(g)
    out = []
    for s in cfg.sites:
        site = s if isinstance(s, Site) else resolve_site(s, g, table)
        if not site.point.proper:
            raise ImproperSite(f"site {site.label} is not a proper point (q={site.point.q:.3g})")
        out.append(site)
    return out


def _unit(x, g):
    x = np.asarray(x, dtype=float)
    return x / math.sqrt(-float(g.ip(x, x)))


# --- elements, cached per (u, v, w, horizon) -----------------------------

_ELEMENTS = {}


def elements_near_O(g, radius, horizon):
    """Elements whose tiles meet the radius-neighbourhood of O.

    Enumerated around the reference centre of O with the covering radius
    rho of O added, so one set serves every pair of points in O.
    """
    key = (g.u, g.v, g.w, horizon)
    hit = _ELEMENTS.get(key)
    if hit is not None and hit[0] >= radius:
        return hit[1]
    V = orthoscheme_vertices(g)
    c = _unit(V.mean(axis=0), g)
    rho = float(np.arccosh(cosh_distances(c, V, g).max()))
    # round up so nearby requests share the cache
    need = math.ceil((radius + rho) * 8) / 8
    els = enumerate_elements(g, [c], need, horizon=horizon)
    _ELEMENTS[key] = (need - rho, els)
    return els


# --- bounds --------------------------------------------------------------

def mirror_planes(g):
    """The six mirror planes of the complete orthoscheme, by name."""
    e = np.eye(4)
    planes = {f"b{i}": face_plane(i, g) for i in range(4)}
    planes["a0"] = polarity_inv(PointVec(e[0], g))
    planes["a3"] = polarity_inv(PointVec(e[3], g))
    return planes


def pre_bounds(sites, g):
    """Cheap upper bounds on r: walls, the h axis and direct pair distances.

    Returns a list of (bound, description).  Each is half the distance to
    a genuine orbit point, so the orbit minimum can only be lower.
    """
    out = []
    planes = mirror_planes(g)
    e = np.eye(4)
    f03, f12 = PointVec(e[0] + e[3], g), PointVec(e[1] + e[2], g)
    for s in sites:
        for name, p in planes.items():
            if not p.contains(s.point, tol=1e-9):
                out.append((point_plane_distance(s.point, p, g), f"{s.label}|{name}"))
        if not _on_axis(s.x):
            out.append((point_line_distance(s.point, f03, f12, g), f"{s.label}|h"))
    for i, a in enumerate(sites):
        for b in sites[i + 1:]:
            d = float(distances(a.x, b.x[None], g)[0])
            out.append((d / 2, f"{a.label}-{b.label}"))
    return out


def _on_axis(x):
    return abs(x[0] - x[3]) <= 1e-12 * max(1.0, abs(x).max()) and abs(x[1] - x[2]) <= 1e-12 * max(1.0, abs(x).max())


def max_common_radius(cfg, g):
    """Largest common radius r and every constraint that attains it.

    The orbit images g.Y of each site Y under all enumerated elements are
    measured against every site X; r is half the smallest nonzero distance.
    Raises HorizonExhausted if that minimum is attained only by elements at
    the word-length horizon while the enumeration was cut short there.
    """
    sites = resolve_sites(cfg, g)
    bounds = pre_bounds(sites, g)
    r_pre = min(b for b, _ in bounds)
    els = elements_near_O(g, 2 * r_pre + 1e-6, cfg.horizon)
    mats = els.all_matrices()
    depth = np.concatenate([els.depth, els.depth + 1])
    X = np.array([_unit(s.x, g) for s in sites])
    best = np.inf
    found = []
    for j, y in enumerate(sites):
        imgs = mats @ _unit(y.x, g)
        d = np.stack([distances(x, imgs, g) for x in X], axis=1)  # (n_el, n_sites)
        same = d < SAME_POINT
        for i, x in enumerate(sites):
            if i != j and same[:, i].any():
                raise SharedOrbit(f"sites {x.label} and {y.label} lie in the same orbit")
        d = np.where(same, np.inf, d)
        found.append(d)
        best = min(best, float(d.min()))
    r = best / 2
    if r > r_pre + 1e-9:
        raise ArithmeticError(f"orbit radius {r:.12g} exceeds pre-bound {r_pre:.12g}")
    # one entry per distinct image point, with its shortest word
    ties, deep_only = {}, True
    for j, d in enumerate(found):
        y = _unit(sites[j].x, g)
        for k, i in zip(*np.nonzero(d <= best + 2 * TIE_TOL)):
            if depth[k] < cfg.horizon:
                deep_only = False
            key = (i, j) + tuple(np.round(mats[k] @ y, 6))
            if key not in ties or depth[k] < ties[key][0]:
                word = els.word(k % len(els), with_h=k >= len(els))
                ties[key] = (int(depth[k]), f"{sites[i].label}-{sites[j].label}[{word or 'id'}]")
    binding = [t for _, t in sorted(set(ties.values()), key=lambda dt: (dt[0], dt[1]))]
    if not els.saturated and deep_only:
        raise HorizonExhausted(
            f"minimum distance {best:.9f} reached only at horizon L={cfg.horizon}; increase --horizon")
    return r, binding


def density(cfg, r, g, vol_O=None):
    """Sum over sites of ball_volume(r) / (|W_site| * vol_O / 2)."""
    sites = resolve_sites(cfg, g)
    vol_O = orthoscheme_volume(g) if vol_O is None else vol_O
    vb = ball_volume(r)
    return float(sum(vb / (s.stabilizer_order * vol_O / 2) for s in sites))


def optimize(u, v, w, sites, horizon=DEFAULT_HORIZON):
    """Common radius, volumes and density for one site set."""
    g = build_gram(u, v, w)
    cfg = PackingConfig(tuple(sites), horizon=horizon)
    resolved = resolve_sites(cfg, g)
    r, binding = max_common_radius(cfg, g)
    vol_O = orthoscheme_volume(g)
    return PackingResult(
        u, v, w, [s.label for s in resolved], r, vol_O, ball_volume(r),
        density(cfg, r, g, vol_O), binding, [s.stabilizer_order for s in resolved],
    )


# --- table manifest ------------------------------------------------------

@dataclass
class ManifestRow:
    table: int
    u: int
    v: int
    w: int
    sites: list
    r: str
    vol_O: str
    vol_ball: str
    delta: str
    bold: bool = False
    note: str = ""


def load_manifest(path=None):
    """Rows of the reference tables; printed values are kept as strings."""
    if path is None:
        text = resources.files("cobweb").joinpath("data/tables.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    data = json.loads(text)
    return [ManifestRow(**row) for row in data["rows"]]


def select_tables(rows, tables):
    """Filter by table numbers; 'all' or None keeps everything."""
    if tables in (None, "all"):
        return rows
    want = {int(t) for t in tables} if not isinstance(tables, int) else {tables}
    known = {r.table for r in rows}
    missing = sorted(want - known)
    if missing:
        raise UnknownTable(f"unknown table(s) {missing}; known 1..{max(known)}")
    return [r for r in rows if r.table in want]


@dataclass
class RowReport:
    row: ManifestRow
    result: PackingResult = None
    residuals: dict = field(default_factory=dict)
    error: str = ""
    flagged: bool = False

    @property
    def max_excess(self):
        return max((abs(v) for v in self.residuals.values()), default=np.inf)


def _residuals(row, res):
    return {
        "r": res.r_opt - float(row.r),
        "vol_O": res.vol_O - float(row.vol_O),
        "vol_ball": res.vol_ball - float(row.vol_ball),
        "delta": res.delta - float(row.delta),
    }


def _run_row(args):
    row, horizon, tol_r, tol_delta = args
    try:
        res = optimize(row.u, row.v, row.w, row.sites, horizon=horizon)
    except Exception as exc:  # reported per row, never aborts the run
        return RowReport(row, error=f"{type(exc).__name__}: {exc}", flagged=True)
    resid = _residuals(row, res)
    flagged = (abs(resid["r"]) > tol_r or abs(resid["vol_O"]) > TOL_VOL
               or abs(resid["vol_ball"]) > TOL_VOL or abs(resid["delta"]) > tol_delta)
    return RowReport(row, res, resid, flagged=flagged)


def reproduce_tables(rows=None, horizon=DEFAULT_HORIZON, tol_r=TOL_R, tol_delta=TOL_DELTA, jobs=1):
    """Recompute every manifest row and attach residuals against the tables.

    Output order follows the manifest regardless of ``jobs``.
    """
    rows = load_manifest() if rows is None else list(rows)
    args = [(row, horizon, tol_r, tol_delta) for row in rows]
    if jobs and jobs > 1 and len(rows) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_row, args))
    return [_run_row(a) for a in args]


# --- output --------------------------------------------------------------

def _f(x):
    return "" if x is None else f"{x:.6f}"


def result_record(res, residuals=None, row=None, error=""):
    rec = {
        "u": res.u if res else row.u,
        "v": res.v if res else row.v,
        "w": res.w if res else row.w,
        "sites": res.site_key if res else "+".join(row.sites),
        "r_opt": _f(res.r_opt) if res else "",
        "vol_O": _f(res.vol_O) if res else "",
        "vol_ball": _f(res.vol_ball) if res else "",
        "delta": _f(res.delta) if res else "",
        "binding": res.binding_text() if res else error,
        "residual_r": _f(residuals["r"]) if residuals else "",
        "residual_delta": _f(residuals["delta"]) if residuals else "",
    }
    if row is not None:
        rec["table"] = row.table
        if row.note:
            rec["note"] = row.note
    return rec


def format_rows(records, fmt="csv"):
    """CSV with the fixed header, or one JSON object per line."""
    if fmt == "records":
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    import csv
    import io

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_HEADER.split(","), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    writer.writerows(records)
    return buf.getvalue()


# --- certificates --------------------------------------------------------

@dataclass
class Certificate:
    min_pair: float
    two_r: float
    n_points: int

    @property
    def non_overlap(self):
        return self.min_pair >= self.two_r - 1e-6

    @property
    def tight(self):
        return self.min_pair <= self.two_r + 1e-6


def packing_certificate(res, horizon=DEFAULT_HORIZON, margin=0.5):
    """Check a result against word-length orbit clouds of its sites.

    The clouds come from the point-level orbit BFS, independent of the
    element enumeration used to compute r.  Every pair of distinct cloud
    points within 2r + margin of some site is measured.
    """
    g = build_gram(res.u, res.v, res.w)
    cfg = PackingConfig(tuple(res.sites))
    sites = resolve_sites(cfg, g)
    X = np.array([_unit(s.x, g) for s in sites])
    reach = 2 * res.r_opt + margin
    spread = max(float(distances(a, X, g).max()) for a in X)
    pts = []
    for s in sites:
        cloud = orbit(s, horizon, g, radius=reach + spread)
        near = np.min([distances(x, cloud.points, g) for x in X], axis=0) <= reach
        pts.append(cloud.points[near])
    P = np.concatenate(pts)
    D = np.array([distances(p, P, g) for p in P])
    np.fill_diagonal(D, np.inf)
    return Certificate(float(D.min()), 2 * res.r_opt, len(P))


# --- interior ball -------------------------------------------------------

def _softmax(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max())
    return e / e.sum()


def interior_ball_search(u, v, w, base_sites, horizon=DEFAULT_HORIZON, starts=None, maxiter=400):
    """Add one stabilizer-free ball and maximize the density over its position.

    The position is a convex combination of the vertices of W with softmax
    weights; Nelder-Mead runs from a fixed grid of starts.  Trials whose
    point has a nontrivial stabilizer or meets a base site are rejected.
    Returns the best result, or the base-only result if nothing beats it.
    """
    g = build_gram(u, v, w)
    base = optimize(u, v, w, base_sites, horizon=horizon)
    n = len(W_VERTICES)
    if starts is None:
        starts = [np.zeros(n)] + [np.where(np.arange(n) == k, 2.0, 0.0) for k in range(n)]
    best = {"delta": base.delta, "result": base}

    def evaluate(z):
        site = interior_site(g, _softmax(z))
        try:
            res = _with_site(g, base_sites, site, horizon)
        except DuplicateSite:
            return 0.0
        if res is None:
            return 0.0
        if res.delta > best["delta"]:
            best.update(delta=res.delta, result=res)
        return res.delta

    for z0 in starts:
        minimize(lambda z: -evaluate(z), np.asarray(z0, dtype=float), method="Nelder-Mead",
                 options={"maxiter": maxiter, "xatol": 1e-5, "fatol": 1e-9})
    return best["result"]


def _is_free(site, base, g, tol=1e-6):
    """True if ``site`` is off every mirror, off the h axis and off the base sites."""
    e = np.eye(4)
    x = site.point
    for p in mirror_planes(g).values():
        if abs(float(x.x @ p.u)) / math.sqrt(-x.q * p.norm2) < math.sinh(tol):
            return False
    f03, f12 = PointVec(e[0] + e[3], g), PointVec(e[1] + e[2], g)
    if point_line_distance(x, f03, f12, g) < tol:
        return False
    return all(distances(x.x, b.x[None], g)[0] >= tol for b in base)


def _with_site(g, base_sites, site, horizon):
    """Result with an extra interior site, or None if the trial is rejected."""
    base = resolve_sites(PackingConfig(tuple(base_sites)), g)
    if not _is_free(site, base, g):
        return None
    cfg = PackingConfig(tuple(base_sites) + (site,), horizon=horizon)
    r, binding = max_common_radius(cfg, g)
    vol_O = orthoscheme_volume(g)
    return PackingResult(
        g.u, g.v, g.w, list(base_sites) + [site.label], r, vol_O, ball_volume(r),
        density(cfg, r, g, vol_O), binding, [s.stabilizer_order for s in resolve_sites(cfg, g)],
    )
