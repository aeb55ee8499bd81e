"""Property suites shared by the command line and the test-suite.

Each suite returns a :class:`SuiteReport` listing, per check, the largest
residual seen, the threshold it is held to and the first counterexample
(by seed and item index) when it fails.  Suites are deterministic in their
seed; optional ``workers`` parallelize over items while keeping the item
order in every aggregate.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bending import (
    BendingSystem,
    action_angle,
    caterpillar,
    enumerate_triangulations,
    flow,
    momentum_F,
    sample_fiber,
    snake,
)
from .config import DEFAULT, Tolerances
from .fibers import (
    bending_field,
    classify_fiber,
    horizontal_rank,
    is_singular_fiber,
    max_normalized_omega,
    numerical_rank,
    tangent_generators,
    vanishing_diagonals,
)
from .geom import random_rotation
from .grassmann import (
    act_quaternion,
    check_relation,
    fiber_graph,
    frame_edges,
    frame_to_polygon,
    gc_identity_residuals,
    gc_pattern,
    psi_diagonal,
    psi_side,
    random_frame,
)
from .polyspace import Polygon, align_canonical

__all__ = [
    "Check",
    "SuiteReport",
    "random_polygon",
    "random_polygons",
    "fan_apex",
    "fan_grid",
    "suite_poisson",
    "suite_flow",
    "suite_isotropy",
    "suite_grassmann",
    "suite_gc",
    "SUITES",
]


@dataclass
class Check:
    name: str
    threshold: float
    max_value: float = 0.0
    count: int = 0
    failure: dict | None = None
    exact: bool = False  # mismatch counter rather than a residual

    def record(self, value: float, **where) -> None:
        value = float(value)
        self.count += 1
        if not (value <= self.max_value) and not math.isnan(self.max_value):
            self.max_value = value
        bad = value > self.threshold if not self.exact else value != 0
        if (bad or math.isnan(value)) and self.failure is None:
            self.failure = {"value": value, **where}

    @property
    def passed(self) -> bool:
        return self.failure is None

    def to_json(self) -> dict:
        out = {"name": self.name, "passed": self.passed, "max": self.max_value,
               "threshold": self.threshold, "count": self.count}
        if self.failure is not None:
            out["counterexample"] = self.failure
        return out


@dataclass
class SuiteReport:
    suite: str
    params: dict
    checks: list[Check] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def check(self, name: str, threshold: float, exact: bool = False) -> Check:
        c = Check(name, threshold, exact=exact)
        self.checks.append(c)
        return c

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {"suite": self.suite, "passed": self.passed, "params": self.params,
                "checks": [c.to_json() for c in self.checks], **self.extra}


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# -- random data ----------------------------------------------------------------------


def random_polygons(n: int, count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Batch of random closed polygons of perimeter 2 built from random 2-frames.

    Returns unit edges ``(count, n, 3)`` and side lengths ``(count, n)``.
    """
    g = rng.standard_normal((count, 2, n)) + 1j * rng.standard_normal((count, 2, n))
    z = g[:, 0] / np.linalg.norm(g[:, 0], axis=1)[:, None]
    w = g[:, 1] - np.sum(np.conj(z) * g[:, 1], axis=1)[:, None] * z
    w /= np.linalg.norm(w, axis=1)[:, None]
    zw = np.conj(z) * w
    e = np.stack([np.abs(z) ** 2 - np.abs(w) ** 2, -2.0 * zw.imag, 2.0 * zw.real], axis=-1)
    r = np.linalg.norm(e, axis=-1)
    return e / r[..., None], r


def random_polygon(n: int, rng: np.random.Generator) -> Polygon:
    return frame_to_polygon(random_frame(n, rng))


# -- fiber grids ----------------------------------------------------------------------


def fan_apex(sys: BendingSystem) -> int | None:
    """The vertex shared by all diagonals, if the triangulation is a fan."""
    common = set(sys.diags[0])
    for d in sys.diags[1:]:
        common &= set(d)
    return min(common) if common else None


def fan_grid(sys: BendingSystem, points: int = 9) -> list[np.ndarray]:
    """Momentum values on a grid covering every feasible fiber of a fan system.

    Diagonal lengths are swept face by face around the apex over their full
    feasible interval, end points included, so that triangle equalities and
    vanishing diagonals are hit exactly whenever they occur.
    """
    n = sys.n
    apex = fan_apex(sys)
    if apex is None:
        raise ValueError(f"{list(sys.diags)} is not a fan triangulation")
    order = [(apex - 1 + s) % n + 1 for s in range(n)]  # w_0 = apex, w_1, ..., w_{n-1}
    s_len = [float(sys.r[w - 1]) for w in order]  # side w_j -> w_{j+1}
    diag_of = [sys.diag_index[tuple(sorted((apex, order[j])))] for j in range(2, n - 1)]
    out: list[np.ndarray] = []

    def rec(j: int, D: float, acc: list[float]) -> None:
        # D is the length of chord (w_0, w_j); choose chord (w_0, w_{j+1})
        if j == n - 2:
            ell = np.zeros(n - 3)
            ell[diag_of] = acc
            out.append(0.5 * ell**2)
            return
        rest = s_len[j + 1 : n]
        lo = max(abs(D - s_len[j]), 2 * max(rest) - sum(rest), 0.0)
        hi = min(D + s_len[j], sum(rest))
        if hi < lo:
            if lo - hi > 1e-12 * sum(s_len):
                return
            hi = lo
        values = [lo] if hi == lo else np.linspace(lo, hi, points).tolist()
        for v in values:
            rec(j + 1, v, acc + [v])

    rec(1, s_len[0], [])
    return out


# -- suites ---------------------------------------------------------------------------


def _bracket_table(u: np.ndarray, r: np.ndarray, chords: list[tuple[int, int]]) -> np.ndarray:
    """``sum_m r_m det(u^m, X_a^m, X_b^m)`` for every pair of chords, batched."""
    e = r[..., None] * u
    P = np.concatenate([np.zeros_like(e[:, :1]), np.cumsum(e, axis=1)], axis=1)
    fields = []
    for i, j in chords:
        d = P[:, j - 1] - P[:, i - 1]
        X = np.zeros_like(u)
        X[:, i - 1 : j - 1] = np.cross(d[:, None, :], u[:, i - 1 : j - 1])
        fields.append(X)
    F = np.stack(fields)  # (chords, batch, n, 3)
    m = len(chords)
    table = np.zeros((m, m, u.shape[0]))
    for a in range(m):
        for b in range(a + 1, m):
            val = np.einsum("bn,bn->b", r, np.einsum("bnk,bnk->bn", u, np.cross(F[a], F[b])))
            table[a, b], table[b, a] = val, -val
    return table


def suite_poisson(n: int, samples: int = 1000, seed: int = 0, tol: Tolerances = DEFAULT,
                  workers: int = 1) -> SuiteReport:
    """Commutation of every pair of diagonals in every triangulation of the n-gon."""
    rep = SuiteReport("poisson", {"n": n, "samples": samples, "seed": seed})
    tris = enumerate_triangulations(n)
    rep.extra["triangulations"] = len(tris)
    chk = rep.check("max |omega(X_k, X_m)|", tol.symplectic)
    if samples == 0:
        return rep
    u, r = random_polygons(n, samples, np.random.default_rng([seed, n]))
    chords = [(i, j) for i in range(1, n + 1) for j in range(i + 2, n + 1) if (i, j) != (1, n)]
    index = {c: a for a, c in enumerate(chords)}
    table = np.abs(_bracket_table(u, r, chords))
    for t, diags in enumerate(tris):
        idx = [index[d] for d in diags]
        sub = table[np.ix_(idx, idx)]
        if sub.size == 0:
            chk.record(0.0, triangulation=t)
            continue
        worst = sub.max(axis=(0, 1))
        item = int(np.argmax(worst))
        chk.record(worst[item], seed=seed, index=item, triangulation=[list(d) for d in diags])
    # control: crossing chords do not commute on generic polygons
    crossing = [(a, b) for a in chords for b in chords if a < b and _cross(a, b)]
    if crossing:
        ctl = max(float(np.median(table[index[a], index[b]])) for a, b in crossing)
        rep.extra["crossing_control_median"] = ctl
    return rep


def _cross(a, b) -> bool:
    from .bending import chords_cross

    return chords_cross(a, b)


def suite_flow(n: int, samples: int = 200, seed: int = 0, tol: Tolerances = DEFAULT,
               workers: int = 1, total_angle: float = 100 * math.pi, steps: int = 100,
               angle_points: int = 9) -> SuiteReport:
    """Flow invariance, closing, periodicity and the action-angle contract."""
    rep = SuiteReport("flow", {"n": n, "samples": samples, "seed": seed,
                               "total_angle": total_angle, "steps": steps})
    tris = enumerate_triangulations(n)
    drift = rep.check("max F drift over composed flows", tol.closing)
    closing = rep.check("max closing defect", 1e-12)
    period = rep.check("max |flow^(2 pi)(u) - u|", tol.closing)
    group = rep.check("max |flow_s flow_t - flow_(s+t)|", tol.closing)
    theta_k = rep.check("max theta_k advance error", tol.isotropy)
    theta_p = rep.check("max theta_p drift (p != k)", tol.isotropy)
    ell_d = rep.check("max l drift", tol.isotropy)

    def one(idx: int):
        rng = np.random.default_rng([seed, n, idx])
        sys = BendingSystem.create(np.ones(n), tris[int(rng.integers(len(tris)))])
        u0 = random_polygon(n, rng)
        sys = BendingSystem.create(u0.r, sys.diagonal_set)
        F0 = momentum_F(sys, u0)
        ks = rng.integers(len(sys.diags), size=steps)
        ts = rng.uniform(0.5, 1.5, steps)
        ts *= total_angle / ts.sum()
        res = {"drift": 0.0, "closing": u0.closing_defect(), "period": 0.0, "group": 0.0,
               "theta_k": 0.0, "theta_p": 0.0, "ell": 0.0}
        u = u0
        for k, t in zip(ks, ts):
            u = flow(sys, u, int(k), float(t), normalized=True)
            res["drift"] = max(res["drift"], float(np.max(np.abs(momentum_F(sys, u) - F0) / np.maximum(1.0, F0))))
            res["closing"] = max(res["closing"], u.closing_defect())
        for k in range(len(sys.diags)):
            v = flow(sys, u0, k, 2 * math.pi, normalized=True)
            res["period"] = max(res["period"], float(np.abs(v.u - u0.u).max()))
            s, t = rng.uniform(-3, 3, 2)
            a = flow(sys, flow(sys, u0, k, s), k, t)
            b = flow(sys, u0, k, s + t)
            res["group"] = max(res["group"], float(np.abs(a.u - b.u).max()))
        aa0 = action_angle(sys, u0, tol)
        for k in range(len(sys.diags)):
            for t in np.linspace(0.0, 2 * math.pi, angle_points):
                aa = action_angle(sys, flow(sys, u0, k, float(t), normalized=True), tol)
                d = (aa.theta - aa0.theta - t * (np.arange(len(sys.diags)) == k) + math.pi) % (2 * math.pi) - math.pi
                res["theta_k"] = max(res["theta_k"], abs(float(d[k])))
                others = np.delete(np.abs(d), k)
                res["theta_p"] = max(res["theta_p"], float(others.max(initial=0.0)))
                res["ell"] = max(res["ell"], float(np.abs(aa.ell - aa0.ell).max()))
        return res

    for idx, res in enumerate(_map(one, range(samples), workers)):
        where = {"seed": seed, "n": n, "index": idx}
        drift.record(res["drift"], **where)
        closing.record(res["closing"], **where)
        period.record(res["period"], **where)
        group.record(res["group"], **where)
        theta_k.record(res["theta_k"], **where)
        theta_p.record(res["theta_p"], **where)
        ell_d.record(res["ell"], **where)
    return rep


def fiber_checks(sys: BendingSystem, c, samples: int, seed: int, tol: Tolerances = DEFAULT) -> dict:
    """Classification versus sampled tangent data on a single fiber."""
    model = classify_fiber(sys, c, tol)
    singular = is_singular_fiber(sys, c, tol)
    n3 = sys.n - 3
    out = {"model": model, "singular": singular, "rank_mismatch": 0, "singular_mismatch": 0,
           "quotient_mismatch": 0, "lagrangian_mismatch": 0, "max_omega": 0.0, "ranks": []}
    for u in sample_fiber(sys, c, samples, seed, tol):
        gens = tangent_generators(sys, u, c, tol)
        rank = numerical_rank(gens, u.r, tol)
        out["ranks"].append(rank)
        out["rank_mismatch"] += int(rank != model.dim_total)
        bend = [bending_field(sys, u, k) for k in range(n3)]
        deficient = horizontal_rank(u, bend, tol, scale=_field_scale(u, gens)) < n3
        out["singular_mismatch"] += int(deficient != singular)
        quotient = horizontal_rank(u, gens, tol, scale=_field_scale(u, gens))
        out["quotient_mismatch"] += int(quotient != model.dim_quotient)
        # a fiber made only of sphere factors has exactly two dimensions per wedge piece
        pieces = (len(gens) - n3) // 3
        rank_lagrangian = rank > 2 * pieces and quotient == n3
        out["lagrangian_mismatch"] += int(rank_lagrangian != model.lagrangian)
        out["max_omega"] = max(out["max_omega"], max_normalized_omega(u, gens))
    return out


def _field_scale(u: Polygon, fields) -> float:
    w = np.sqrt(u.r)[:, None]
    A = np.stack([(np.asarray(X) * w).reshape(-1) for X in fields])
    return float(np.linalg.svd(A, compute_uv=False)[0]) if A.size else 0.0


def suite_isotropy(n: int, grid: int = 9, samples: int = 20, seed: int = 0, tol: Tolerances = DEFAULT,
                   workers: int = 1, r=None, diags=None) -> SuiteReport:
    """Classification, singularity criterion, isotropy and Lagrangian flag on a fiber grid."""
    r = np.ones(n) if r is None else np.asarray(r, dtype=float)
    sys = BendingSystem.create(r, diags)
    fibers = fan_grid(sys, grid)
    rep = SuiteReport("isotropy", {"n": n, "grid": grid, "samples": samples, "seed": seed,
                                   "r": r.tolist(), "diagonals": [[i - 1, j - 1] for i, j in sys.diags]})
    rank_c = rep.check("dim_total vs generator rank mismatches", 0, exact=True)
    sing_c = rep.check("singular flag vs bending-rank mismatches", 0, exact=True)
    quo_c = rep.check("dim_quotient vs horizontal-rank mismatches", 0, exact=True)
    lag_c = rep.check("lagrangian flag vs rank data mismatches", 0, exact=True)
    iso_c = rep.check("max normalized |omega|", tol.isotropy)

    results = _map(lambda item: fiber_checks(sys, item[1], samples, seed + item[0], tol),
                   list(enumerate(fibers)), workers)
    kinds: dict[str, int] = {}
    for idx, (c, res) in enumerate(zip(fibers, results)):
        where = {"seed": seed + idx, "fiber": idx, "c": c.tolist()}
        rank_c.record(res["rank_mismatch"], **where)
        sing_c.record(res["singular_mismatch"], **where)
        quo_c.record(res["quotient_mismatch"], **where)
        lag_c.record(res["lagrangian_mismatch"], **where)
        iso_c.record(res["max_omega"], **where)
        m = res["model"]
        key = f"p={m.p},q={m.q},k={m.k},{m.type}"
        kinds[key] = kinds.get(key, 0) + 1
    rep.extra["fibers"] = len(fibers)
    rep.extra["models"] = dict(sorted(kinds.items()))
    return rep


def suite_grassmann(n: int, samples: int = 1000, seed: int = 0, tol: Tolerances = DEFAULT,
                    workers: int = 1) -> SuiteReport:
    """The second-eigenvalue relation and the frame-to-polygon identities."""
    rep = SuiteReport("grassmann", {"n": n, "samples": samples, "seed": seed})
    systems = {"caterpillar": caterpillar(n)}
    if n >= 5:
        systems["snake"] = snake(n)
    rel = {name: rep.check(f"relation residual ({name})", tol.closing) for name in systems}
    perim = rep.check("|perimeter - 2|", tol.kernel)
    close = rep.check("closing defect", tol.kernel)
    side = rep.check("|psi_side - r/2|", tol.kernel)
    trace = rep.check("|l1 + l2 - sum psi_side|", tol.kernel)
    equi = rep.check("quaternion action: aligned polygon change", tol.closing)
    for idx in range(samples):
        rng = np.random.default_rng([seed, n, idx])
        f = random_frame(n, rng)
        where = {"seed": seed, "n": n, "index": idx}
        e = frame_edges(f)
        r = np.linalg.norm(e, axis=1)
        for name, ds in systems.items():
            rel[name].record(check_relation(f, BendingSystem(r, ds)).max(), **where)
        perim.record(abs(r.sum() - 2.0), **where)
        close.record(np.linalg.norm(e.sum(axis=0)), **where)
        side.record(max(abs(psi_side(f, i) - r[i - 1] / 2) for i in range(1, n + 1)), **where)
        I = sorted(rng.choice(np.arange(1, n + 1), size=int(rng.integers(1, n + 1)), replace=False).tolist())
        l1, l2 = psi_diagonal(f, I)
        trace.record(abs(l1 + l2 - sum(psi_side(f, i) for i in I)), **where)
        P = random_rotation(rng).quaternion
        a = align_canonical(frame_to_polygon(f))
        b = align_canonical(frame_to_polygon(act_quaternion(f, P)))
        equi.record(float(np.abs(a.u - b.u).max()), **where)
    return rep


def suite_gc(n: int, samples: int = 1000, seed: int = 0, tol: Tolerances = DEFAULT,
             workers: int = 1, grid: int = 9, r=None) -> SuiteReport:
    """Ladder identities on frames and diamond/vanishing-diagonal agreement on a grid."""
    rep = SuiteReport("gc", {"n": n, "samples": samples, "seed": seed, "grid": grid})
    names = ["top", "first", "sub_top", "trace", "higher_zero", "interlacing"]
    checks = {k: rep.check(f"gc {k}", tol.closing) for k in names}
    mono = rep.check("prefix monotonicity of mu_1", tol.closing)
    for idx in range(samples):
        f = random_frame(n, np.random.default_rng([seed, n, idx]))
        pat = gc_pattern(f)
        res = gc_identity_residuals(f, pat)
        where = {"seed": seed, "n": n, "index": idx}
        for k in names:
            checks[k].record(res[k], **where)
        mono.record(max(0.0, float(np.max(-np.diff(pat.mu[:, 0])))), **where)
    r = np.ones(n) if r is None else np.asarray(r, dtype=float)
    sys = BendingSystem.create(r)
    dia = rep.check("diamond flags vs vanishing diagonals mismatches", 0, exact=True)
    fibers = fan_grid(sys, grid)
    for idx, c in enumerate(fibers):
        g = fiber_graph(r, c, sys, tol)
        diamonds = [i - 1 for i in g.diamonds]
        dia.record(int(diamonds != vanishing_diagonals(sys, c, tol)), fiber=idx, c=c.tolist())
    rep.extra["fibers"] = len(fibers)
    return rep


SUITES = {
    "poisson": suite_poisson,
    "flow": suite_flow,
    "isotropy": suite_isotropy,
    "grassmann": suite_grassmann,
    "gc": suite_gc,
}
