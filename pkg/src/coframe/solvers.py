"""Numerical machinery: polynomial roots with multiplicities, continuation
of real root branches in ``r``, an embedded Runge-Kutta integrator, power
series for the radial ODE, and exactness certificates for first
integrals."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Callable, Sequence

import numpy as np

from . import scalar
from .errors import (BranchAmbiguity, DegenerateAllZero, DenominatorVanished,
                     SingularCoefficient, StepFailure)
from .scalar import Expr

__all__ = [
    "Root", "poly_real_roots", "ImplicitSpec", "Branch", "BranchSet",
    "track_branches", "OdeSpec", "OdeSolution", "integrate_ode",
    "series_coeffs", "exactness_check",
]

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Root:
    value: float
    multiplicity: int = 1


def _horner_derivs(c: np.ndarray, x: float, m: int) -> np.ndarray:
    """Taylor coefficients ``p^(j)(x) / j!`` for j < m (ascending ``c``)."""
    d = len(c) - 1
    t = np.array(c[::-1], dtype=complex if np.iscomplexobj(x) else float)
    out = []
    # repeated synthetic division
    for _ in range(min(m, d + 1)):
        acc = t[0]
        nxt = [acc]
        for a in t[1:]:
            acc = acc * x + a
            nxt.append(acc)
        out.append(nxt[-1])
        t = np.array(nxt[:-1])
        if len(t) == 0:
            break
    while len(out) < m:
        out.append(0.0)
    return np.array(out)


def _cluster_radius(m: int) -> float:
    # float coefficients resolve an m-fold root only to about eps^(1/m)
    return max(1e-7, (64 * EPS) ** (1.0 / m))


def _fujiwara(t: np.ndarray, m: int) -> float:
    """Bound on the moduli of the m roots of sum_{j<=m} t_j y^j."""
    lead = abs(t[m])
    if lead == 0:
        return np.inf
    return 2 * max((abs(t[j]) / lead) ** (1.0 / (m - j)) for j in range(m))


def _is_multiple(c, x: float, m: int) -> bool:
    t = _horner_derivs(c, x, m + 1)
    return _fujiwara(t, m) <= _cluster_radius(m) * (1 + abs(x))


def _polish(c, x, m: int):
    """Newton on the (m-1)-th derivative, which has a simple root at x."""
    for _ in range(8):
        t = _horner_derivs(c, x, m + 1)
        num, den = t[m - 1], m * t[m]
        if den == 0:
            break
        step = num / den
        x_new = x - step
        if not np.isfinite(x_new) or abs(_horner_derivs(c, x_new, m)[m - 1]) > abs(num):
            break
        x = x_new
        if abs(step) <= 4 * EPS * (1 + abs(x)):
            break
    return x


def poly_real_roots(coeffs: Sequence[float], cluster_tol: float = 1e-9) -> list[Root]:
    """Real roots of ``sum coeffs[j] x**j`` with multiplicity estimates.

    Eigenvalues of the companion matrix are grouped into clusters that
    behave like a single multiple root (all roots of the local Taylor
    polynomial within the attainable radius), then polished.  Roots whose
    polished values agree within ``cluster_tol`` are reported once.

    Raises
    ------
    DegenerateAllZero
        If every coefficient is zero.
    """
    c = np.asarray(coeffs, dtype=float)
    if not np.any(c):
        raise DegenerateAllZero("all coefficients vanish")
    # only exact zeros are trimmed: the coefficients of the radial families
    # span many orders of magnitude, so a small leading term is still real
    deg = len(c) - 1
    while deg > 0 and c[deg] == 0:
        deg -= 1
    c = c[:deg + 1]
    if deg == 0:
        return []
    z = list(np.roots(c[::-1]).astype(complex))
    atoms: list[tuple[complex, int]] = []
    # largest clusters first: the m roots nearest to each root
    for m in range(deg, 1, -1):
        i = 0
        while i < len(z) and len(z) >= m:
            near = sorted(range(len(z)), key=lambda j: abs(z[j] - z[i]))[:m]
            zc = sum(z[j] for j in near) / m
            spread = max(abs(z[j] - zc) for j in near)
            if (spread <= 1e-2 * (1 + abs(zc)) and abs(zc.imag) <= spread + 1e-12 * (1 + abs(zc))
                    and _is_multiple(c, zc.real, m)):
                atoms.append((complex(zc.real, 0.0), m))
                z = [z[j] for j in range(len(z)) if j not in near]
                i = 0
            else:
                i += 1
    atoms.extend((v, 1) for v in z)
    out: list[Root] = []
    for zv, m in atoms:
        if m == 1 and abs(zv.imag) > 1e-9 * (1 + abs(zv)):
            continue
        x = _polish(c, zv.real, m)
        out.append(Root(float(x), m))
    out.sort(key=lambda rt: rt.value)
    merged: list[Root] = []
    for rt in out:
        if merged and abs(rt.value - merged[-1].value) <= cluster_tol * (1 + abs(rt.value)):
            prev = merged.pop()
            m = prev.multiplicity + rt.multiplicity
            merged.append(Root((prev.value * prev.multiplicity + rt.value * rt.multiplicity) / m, m))
        else:
            merged.append(rt)
    return merged


def multiplicity_at(coeffs, x: float) -> int:
    """Multiplicity of ``x`` as a root (0 if it is not a root)."""
    c = np.asarray(coeffs, dtype=float)
    d = len(c) - 1
    for m in range(d, 0, -1):
        if _is_multiple(c, x, m):
            return m
    return 0


@dataclass
class ImplicitSpec:
    """``sum coeffs[j](r) a**j = 0`` for the unknown ``a``.

    ``boundary`` is ``(r0, target)`` as expressions, meaning the branch must
    tend to ``target`` as ``r -> r0+``; ``None`` asks for branches defined on
    the whole sampled half-line.
    """

    unknown: str
    coeffs: Sequence[Expr]
    boundary: tuple | None = None

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coefficients(self, r, env) -> np.ndarray:
        """Shape (degree+1, len(r)) array (or (degree+1,) for scalar r)."""
        vals = scalar.evaluate_many(list(self.coeffs), r, env)
        return np.array([np.broadcast_to(v, np.shape(r)) for v in vals], dtype=float)

    def polynomial(self, a: Expr | None = None) -> Expr:
        x = scalar.FormalSym(self.unknown) if a is None else a
        return scalar.add(*(c * x ** j for j, c in enumerate(self.coeffs)))

    def implicit_derivative(self, r, a, env):
        """``a' = -P_r / P_a`` at points on the curve."""
        cs = scalar.evaluate_many(list(self.coeffs), r, env)
        dcs = scalar.evaluate_many([scalar.deriv(c) for c in self.coeffs], r, env)
        a = np.asarray(a, dtype=float)
        Pr = sum(dc * a ** j for j, dc in enumerate(dcs))
        Pa = sum(j * c * a ** (j - 1) for j, c in enumerate(cs) if j)
        return -Pr / Pa

    def residual(self, r, a, env):
        cs = scalar.evaluate_many(list(self.coeffs), r, env)
        a = np.asarray(a, dtype=float)
        val = sum(c * a ** j for j, c in enumerate(cs))
        mag = sum(np.abs(c * a ** j) for j, c in enumerate(cs))
        return np.abs(val) / (1 + mag)


@dataclass
class Branch:
    id: int
    r: np.ndarray
    a: np.ndarray
    boundary: bool = False
    complete: bool = False

    @property
    def is_global(self) -> bool:
        return self.boundary and self.complete


@dataclass
class BranchSet:
    spec: ImplicitSpec
    grid: np.ndarray
    env: dict
    branches: list
    bolt_roots: list = field(default_factory=list)
    bolt_multiplicity: int = 0

    @property
    def global_branches(self) -> list[Branch]:
        return [b for b in self.branches if b.is_global]

    def value_at(self, branch: Branch, r: float) -> float:
        """Re-solve at ``r`` and return the root continuing ``branch``."""
        guess = float(np.interp(r, branch.r, branch.a))
        roots = poly_real_roots(self.spec.coefficients(r, self.env))
        if not roots:
            raise BranchAmbiguity(f"no real root at r={r}")
        return min((rt.value for rt in roots), key=lambda v: abs(v - guess))


def _roots_at(spec: ImplicitSpec, r: float, env) -> np.ndarray:
    c = spec.coefficients(float(r), env)
    try:
        rs = poly_real_roots(c)
    except DegenerateAllZero:
        return np.array([])
    vals = []
    for rt in rs:
        vals.extend([rt.value] * rt.multiplicity)
    return np.array(vals)


def _predict(spec, r_prev, a_prev, r_new, env):
    with np.errstate(all="ignore"):
        try:
            slope = spec.implicit_derivative(r_prev, a_prev, env)
        except Exception:
            slope = np.zeros_like(a_prev)
    slope = np.where(np.isfinite(slope), slope, 0.0)
    return a_prev + slope * (r_new - r_prev)


def _assign(pred: np.ndarray, roots: np.ndarray):
    """Best assignment of active branches to roots; returns (pairs, ratio)
    where ratio compares best to second-best total displacement."""
    na, nr = len(pred), len(roots)
    if na == 0 or nr == 0:
        return [], np.inf
    best = None
    second = np.inf
    k = min(na, nr)
    if na <= nr:
        for perm in permutations(range(nr), k):
            cost = sum(abs(pred[i] - roots[perm[i]]) for i in range(k))
            if best is None or cost < best[0]:
                if best is not None:
                    second = min(second, best[0])
                best = (cost, [(i, perm[i]) for i in range(k)])
            elif cost < second:
                second = cost
    else:
        for perm in permutations(range(na), k):
            cost = sum(abs(pred[perm[j]] - roots[j]) for j in range(k))
            if best is None or cost < best[0]:
                if best is not None:
                    second = min(second, best[0])
                best = (cost, [(perm[j], j) for j in range(k)])
            elif cost < second:
                second = cost
    return best[1], best[0], second


def _continue(spec, env, rs: np.ndarray, start_vals: np.ndarray, max_refine=40):
    """Follow root branches along increasing radii ``rs``.

    Returns a list of (r_list, a_list, started_at_first_point, reached_end).
    """
    active = [([rs[0]], [v]) for v in start_vals]
    alive = list(range(len(active)))
    finished = []
    r_cur = rs[0]
    targets = list(rs[1:])
    depth = 0
    while targets:
        r_new = targets[0]
        roots = _roots_at(spec, r_new, env)
        prev_r = np.array([active[i][0][-1] for i in alive])
        prev_a = np.array([active[i][1][-1] for i in alive])
        pred = _predict(spec, prev_r, prev_a, r_new, env) if len(alive) else np.array([])
        pairs, cost, second = _assign(pred, roots) if len(alive) and len(roots) else ([], 0.0, np.inf)
        scale = 1 + (np.max(np.abs(roots)) if len(roots) else 0.0)
        ambiguous = (len(pairs) and second < np.inf and second - cost < 0.5 * cost
                     and cost > 1e-9 * scale)
        if ambiguous and depth < max_refine:
            targets.insert(0, 0.5 * (r_cur + r_new))
            depth += 1
            continue
        if ambiguous:
            raise BranchAmbiguity(f"cannot separate branches near r={r_new:.6g}")
        depth = 0
        used = set()
        new_alive = []
        for i, j in pairs:
            idx = alive[i]
            active[idx][0].append(r_new)
            active[idx][1].append(roots[j])
            used.add(j)
            new_alive.append(idx)
        for i in range(len(alive)):
            if alive[i] not in new_alive:
                finished.append(alive[i])
        for j in range(len(roots)):
            if j not in used:
                active.append(([r_new], [roots[j]]))
                new_alive.append(len(active) - 1)
        alive = new_alive
        r_cur = r_new
        targets.pop(0)
    out = []
    for idx, (rl, al) in enumerate(active):
        out.append((np.array(rl), np.array(al), rl[0] == rs[0] and idx < len(start_vals),
                    idx in alive))
    return out


def track_branches(spec: ImplicitSpec, grid: np.ndarray, env: dict,
                   boundary_eps: float = 1e-6, boundary_tol: float = 1e-6) -> BranchSet:
    """Continue every real root of ``spec`` across ``grid`` (increasing).

    With a boundary condition ``(r0, target)``, the roots at ``r0`` are
    computed first; if ``target`` is a root of multiplicity ``m`` there, the
    ``m`` roots nearest to it at ``r0 (1 + boundary_eps)`` are the branches
    leaving the boundary.  They are followed out to the grid along a
    geometric sub-grid and flagged ``boundary=True``.  A branch is
    ``complete`` when it survives to the last grid point.
    """
    grid = np.asarray(grid, dtype=float)
    env = dict(env)
    lead: list[float] = []
    bolt_roots: list[Root] = []
    mult = 0
    start_vals = _roots_at(spec, grid[0], env)
    boundary_ids: set[int] = set()
    if spec.boundary is not None:
        r0 = float(scalar.evaluate(spec.boundary[0], 1.0, env))
        target = float(scalar.evaluate(spec.boundary[1], r0, env))
        c0 = spec.coefficients(r0, env)
        try:
            bolt_roots = poly_real_roots(c0)
        except DegenerateAllZero:
            bolt_roots = []
        for rt in bolt_roots:
            if abs(rt.value - target) <= boundary_tol * (1 + abs(target)) * 1e3:
                mult = rt.multiplicity
        if mult == 0:
            mult = multiplicity_at(c0, target)
        r_eps = r0 * (1 + boundary_eps)
        if grid[0] > r_eps:
            n_sub = max(8, int(np.ceil(np.log2((grid[0] - r0) / (r_eps - r0)))) * 2)
            lead = list(r0 + (r_eps - r0) * np.geomspace(1, (grid[0] - r0) / (r_eps - r0), n_sub)[:-1])
            near = _roots_at(spec, r_eps, env)
            order = np.argsort(np.abs(near - target))
            boundary_ids = set(int(i) for i in order[:mult])
            start_vals = near
    rs = np.array(lead + list(grid))
    raw = _continue(spec, env, rs, start_vals)
    branches = []
    for bid, (rl, al, from_start, alive) in enumerate(raw):
        is_b = from_start and bid in boundary_ids
        keep = rl >= grid[0] * (1 - 1e-15)
        if not np.any(keep):
            continue
        r_on, a_on = rl[keep], al[keep]
        complete = bool(alive and abs(r_on[-1] - grid[-1]) <= 1e-12 * grid[-1])
        if spec.boundary is None:
            is_b = bool(abs(r_on[0] - grid[0]) <= 1e-12 * grid[0])
        # keep only grid points (drop refinement points) for reporting
        mask = np.isin(r_on, grid)
        branches.append(Branch(len(branches), r_on[mask], a_on[mask], is_b, complete))
    return BranchSet(spec, grid, env, branches, bolt_roots, mult)


@dataclass
class OdeSpec:
    """``p' = numerator / denominator`` in the unknown ``p``."""

    unknown: str
    numerator: Expr
    denominator: Expr

    def rhs(self, r: float, p: float, env: dict) -> float:
        e = dict(env)
        e[self.unknown] = p
        num, den = scalar.evaluate_many([self.numerator, self.denominator], r, e)
        if den == 0 or not np.isfinite(den) or abs(den) <= 1e-300:
            raise DenominatorVanished(f"denominator vanished at r={r}, p={p}")
        return num / den

    def residual(self, r, p, dp, env):
        """``D p' - N`` and the size of its terms."""
        e = dict(env)
        e[self.unknown] = p
        num, den = scalar.evaluate_many([self.numerator, self.denominator], r, e)
        return den * dp - num, np.abs(den * dp) + np.abs(num)


# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


@dataclass
class OdeSolution:
    r: np.ndarray
    p: np.ndarray
    steps: int
    rejected: int


def _dp_step(f, r, p, h):
    k = np.zeros(7)
    for s in range(7):
        y = p + h * sum(_A[s][j] * k[j] for j in range(s))
        k[s] = f(r + _C[s] * h, y)
    p5 = p + h * (_B5 @ k)
    p4 = p + h * (_B4 @ k)
    return p5, p5 - p4, k


def integrate_ode(spec: OdeSpec | Callable, r0: float, p0: float, r_end: float,
                  env: dict | None = None, rtol: float = 1e-11, atol: float = 1e-12,
                  h0: float | None = None, fixed_step: float | None = None,
                  r_out: Sequence[float] | None = None, h_min: float = 1e-12,
                  max_steps: int = 200_000) -> OdeSolution:
    """Dormand-Prince 5(4) integration of a scalar ODE.

    Parameters
    ----------
    spec : OdeSpec or callable ``f(r, p)``
    fixed_step : float, optional
        Take uniform steps of this size without error control (used to
        measure the convergence order).
    r_out : sequence, optional
        Radii at which to report the solution (cubic Hermite dense
        output); defaults to every accepted step.

    Raises
    ------
    StepFailure
        If the step size falls below ``h_min`` or too many steps are taken.
    DenominatorVanished
        If the right-hand side is singular.
    """
    if isinstance(spec, OdeSpec):
        env = env or {}
        f = lambda r, p: spec.rhs(r, p, env)  # noqa: E731
    else:
        f = spec
    direction = 1.0 if r_end >= r0 else -1.0
    span = abs(r_end - r0)
    rs, ps, ds = [r0], [p0], [f(r0, p0)]
    r, p = r0, p0
    steps = rejected = 0
    if fixed_step is not None:
        n = int(round(span / fixed_step))
        h = direction * span / n
        for _ in range(n):
            p, _, k = _dp_step(f, r, p, h)
            r = r + h
            rs.append(r)
            ps.append(p)
            ds.append(f(r, p))
            steps += 1
    else:
        h = direction * (h0 if h0 is not None else span * 1e-3)
        # requested radii become step boundaries, so they are reported exactly
        stops = [] if r_out is None else sorted(
            (float(x) for x in np.atleast_1d(r_out) if direction * (x - r0) > 0 and direction * (r_end - x) > 0),
            key=lambda x: direction * x)
        stops.append(r_end)
        si = 0
        while direction * (r_end - r) > 1e-14 * max(1.0, abs(r_end)):
            if steps + rejected > max_steps:
                raise StepFailure("too many steps")
            while si < len(stops) - 1 and direction * (stops[si] - r) <= 1e-14 * max(1.0, abs(r)):
                si += 1
            h_free = h
            clipped = direction * (r + h - stops[si]) > 0
            if clipped:
                h = stops[si] - r
            p_new, err, k = _dp_step(f, r, p, h)
            scale = atol + rtol * max(abs(p), abs(p_new))
            ratio = abs(err) / scale
            if ratio <= 1.0:
                r = r + h
                p = p_new
                rs.append(r)
                ps.append(p)
                ds.append(f(r, p))
                steps += 1
            else:
                rejected += 1
            fac = 0.9 * (1.0 / max(ratio, 1e-10)) ** 0.2
            h = h * min(5.0, max(0.2, fac))
            if clipped and ratio <= 1.0:
                # a short step to hit a stop should not shrink the next one
                h = h_free
            if abs(h) < h_min:
                raise StepFailure(f"step size underflow at r={r}")
    rs, ps, ds = np.array(rs), np.array(ps), np.array(ds)
    if r_out is None:
        return OdeSolution(rs, ps, steps, rejected)
    r_out = np.asarray(r_out, dtype=float)
    order = np.argsort(rs)
    rs_s, ps_s, ds_s = rs[order], ps[order], ds[order]
    out = np.empty_like(r_out)
    for n, x in enumerate(r_out):
        i = int(np.clip(np.searchsorted(rs_s, x) - 1, 0, len(rs_s) - 2))
        x0, x1 = rs_s[i], rs_s[i + 1]
        hh = x1 - x0
        t = (x - x0) / hh
        h00 = 2 * t ** 3 - 3 * t ** 2 + 1
        h10 = t ** 3 - 2 * t ** 2 + t
        h01 = -2 * t ** 3 + 3 * t ** 2
        h11 = t ** 3 - t ** 2
        out[n] = h00 * ps_s[i] + h10 * hh * ds_s[i] + h01 * ps_s[i + 1] + h11 * hh * ds_s[i + 1]
    return OdeSolution(r_out, out, steps, rejected)


def _pmul(a, b, n):
    return np.convolve(a, b)[:n]


def _binomial_series(alpha: float, c: float, n: int) -> np.ndarray:
    """Coefficients of (c + s)^alpha in powers of s."""
    out = np.zeros(n)
    term = c ** alpha
    for j in range(n):
        out[j] = term
        term = term * (alpha - j) / ((j + 1) * c)
    return out


def series_coeffs(a: float, order: int, c: float = 1.0, k: float = 0.0,
                  C2: float = 1.0) -> list[float]:
    """Even-power series ``p = sum b_n r^(2n)`` of the radial deformed
    Spin(7) ODE on the Bryant-Salamon metric, with ``p(0) = a``.

    ``C2`` is the squared length of the direction vector.  Returns
    ``[b_0, ..., b_order]``.
    """
    if c <= 0:
        raise SingularCoefficient("the series needs c > 0")
    n = order + 2
    d0 = 10 * c * C2 * a * a
    if d0 == 0:
        raise SingularCoefficient("leading coefficient vanishes")
    b = np.zeros(n)
    b[0] = a
    s = np.zeros(n)
    s[1] = 1.0
    root5 = _binomial_series(0.2, c, n)
    root65 = _binomial_series(1.2, c, n)
    lin = np.zeros(n)
    lin[0], lin[1] = 5 * c, 3.0
    pref = 20 * _pmul(lin, root5, n)
    quad = np.zeros(n)
    quad[0], quad[1] = 10 * c, 9.0
    for m in range(order):
        q = b.copy()
        dq = np.array([(j + 1) * q[j + 1] for j in range(n - 1)] + [0.0])
        q2 = _pmul(q, q, n)
        D = C2 * _pmul(quad, q2, n) + k * k * s + 100 * _pmul(s, root65, n)
        res = _pmul(D, dq, n) - _pmul(pref, q, n) + _pmul(C2 * q2 - k * k * np.eye(1, n)[0], q, n)
        b[m + 1] = -res[m] / (d0 * (m + 1))
    return list(b[:order + 1])


def exactness_check(first_integral: Expr, ode: Expr, unknown: str, samples,
                    env: dict, n_slopes: int = 4, rng=None) -> float:
    """Largest relative defect of ``d/dr I = mu(r, a) * E`` over samples.

    ``first_integral`` and ``ode`` are expressions in ``r``, the formal
    unknown and (for ``ode``) its derivative.  For each sample ``(r, a)``
    the multiplier ``mu`` is fitted by least squares over several values of
    ``a'``; the defect is normalised by ``1 + max |dI/dr|``.
    """
    rng = np.random.default_rng(rng)
    dI = scalar.deriv(first_integral)
    worst = 0.0
    for r, a in samples:
        slopes = rng.normal(size=n_slopes) * (1 + abs(a))
        u = np.empty(n_slopes)
        v = np.empty(n_slopes)
        for j, s in enumerate(slopes):
            e = dict(env)
            e[unknown] = a
            e[unknown + "'"] = s
            u[j], v[j] = scalar.evaluate_many([dI, ode], r, e)
        vv = v @ v
        mu = (v @ u) / vv if vv > 0 else 0.0
        defect = np.max(np.abs(u - mu * v)) / (1 + np.max(np.abs(u)))
        worst = max(worst, float(defect))
    return worst
