"""Residual verification of catalog families on a grid of radii."""

from __future__ import annotations

import numpy as np

from . import scalar
from .catalog import Closed, Implicit, Ode, SolutionFamily, instantiate
from .gauge import ResidualReport, check_numeric, curvature, f4_over_vol
from .geometries import sample_grid
from .solvers import BranchSet, integrate_ode, track_branches

__all__ = ["verify_family", "branches_for", "ode_trace", "f4_values", "default_grid"]


def default_grid(fam: SolutionFamily, n: int = 50, r_max: float = 100.0, log: bool = True):
    return sample_grid(fam.geometry, n=n, r_max=r_max, log=log)


def branches_for(fam: SolutionFamily, grid=None) -> BranchSet:
    if not isinstance(fam.payload, Implicit):
        raise TypeError(f"{fam.id} is not an implicit family")
    grid = default_grid(fam) if grid is None else np.asarray(grid, dtype=float)
    return track_branches(fam.payload.spec, grid, fam.env)


def ode_trace(fam: SolutionFamily, grid=None, rtol: float = 1e-11):
    """Integrate the family's ODE from its start point across ``grid``.

    Returns ``(r, p, p')``.  Radii below the start are reached by
    integrating backwards.
    """
    pl = fam.payload
    grid = default_grid(fam) if grid is None else np.asarray(grid, dtype=float)
    env = fam.env
    out = np.empty_like(grid)
    below = grid < pl.r_start
    if np.any(below):
        sol = integrate_ode(pl.spec, pl.r_start, pl.p_start, float(grid[below][0]), env,
                            rtol=rtol, r_out=grid[below])
        out[below] = sol.p
    if np.any(~below):
        sol = integrate_ode(pl.spec, pl.r_start, pl.p_start, float(grid[~below][-1]), env,
                            rtol=rtol, r_out=grid[~below])
        out[~below] = sol.p
    e = dict(env)
    e[pl.spec.unknown] = out
    num, den = scalar.evaluate_many([pl.spec.numerator, pl.spec.denominator], grid, e)
    return grid, out, num / den


def _report(fam, F_num, r, env, tol, notes=None):
    reports = []
    for eq in fam.equations:
        rel = check_numeric(F_num, fam.geometry, eq, r, env)
        reports.append(ResidualReport(fam.id, eq.id, r, rel, tol, dict(notes or {})))
    return reports


def verify_family(fam: SolutionFamily | str, grid=None, tol: float = 1e-9,
                  params=None) -> list[ResidualReport]:
    """Evaluate every equation of ``fam`` along its solutions.

    Closed families are evaluated directly.  Implicit families are checked
    along each boundary-matched branch (or each branch defined on the whole
    grid when there is no boundary condition), substituting the value and
    its implicit derivative.  ODE families are checked along an integrated
    trajectory with ``p'`` taken from the equation.
    """
    if isinstance(fam, str):
        fam = instantiate(fam, params)
    grid = default_grid(fam) if grid is None else np.asarray(grid, dtype=float)
    env = fam.env
    F = curvature(fam.ansatz())
    pl = fam.payload
    if isinstance(pl, Closed):
        return _report(fam, F.evaluate(grid, env), grid, env, tol)
    if isinstance(pl, Implicit):
        bs = branches_for(fam, grid)
        chosen = bs.global_branches
        reports = []
        if not chosen:
            return [ResidualReport(fam.id, eq.id, grid, np.array([np.inf]), tol,
                                   {"reason": "no branch"}) for eq in fam.equations]
        name = pl.spec.unknown
        for br in chosen:
            e = dict(env)
            e[name] = br.a
            e[name + "'"] = pl.spec.implicit_derivative(br.r, br.a, env)
            F_num = F.evaluate(br.r, e)
            reports += _report(fam, F_num, br.r, e, tol, {"branch": br.id})
        return reports
    if isinstance(pl, Ode):
        r, p, dp = ode_trace(fam, grid)
        e = dict(env)
        e[pl.spec.unknown] = p
        e[pl.spec.unknown + "'"] = dp
        return _report(fam, F.evaluate(r, e), r, e, tol)
    raise TypeError(f"unknown payload {type(pl).__name__}")


def f4_values(fam: SolutionFamily | str, r, params=None) -> np.ndarray:
    """``*(F^4)`` along a closed family."""
    if isinstance(fam, str):
        fam = instantiate(fam, params)
    expr = f4_over_vol(fam.ansatz())
    return np.asarray(scalar.evaluate(expr, np.atleast_1d(np.asarray(r, dtype=float)), fam.env))
