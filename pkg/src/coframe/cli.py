"""Command line: ``coframe verify|branches|phase-grid|ode``.

Outputs are CSV (header row, ``%.17g`` numbers, LF endings) or a JSON
report with ``"schema": 1``.  Exit status is 0 when every check passes, 1
on a verification failure and 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import scalar
from .catalog import (Implicit, Ode, family_defaults, flag_region, flag_tan_theta, instantiate,
                      list_families, pinned_params)
from .checks import branches_for, ode_trace, verify_family
from .errors import CoframeError, UnknownFamily
from .solvers import integrate_ode, series_coeffs

__all__ = ["RunConfig", "main", "build_parser"]

SCHEMA = 1
PARAM_FLAGS = ("c", "k", "theta", "lambda", "C", "C0", "C1", "C2", "C3", "C4", "sign", "a1", "a3")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    family: str | None
    params: dict = field(default_factory=dict)
    r_min: float | None = None
    r_max: float = 100.0
    count: int = 400
    log: bool = True
    tol: float = 1e-9
    out: str | None = None
    fmt: str = "csv"
    extra: dict = field(default_factory=dict)

    def validate(self):
        if not self.tol > 0:
            raise ConfigError("--tol must be positive")
        if self.count < 2:
            raise ConfigError("--grid must be at least 2")
        if self.r_min is not None and not self.r_min > 0:
            raise ConfigError("--rmin must be positive")
        if self.r_min is not None and self.r_min >= self.r_max:
            raise ConfigError("--rmin must be below --rmax")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _emit(cfg: RunConfig, text: str):
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _grid(cfg: RunConfig, fam) -> np.ndarray:
    r0 = fam.geometry.r0()
    lo = cfg.r_min
    if lo is None:
        lo = r0 * (1 + 1e-3) if r0 > 0 else 1e-2
    if lo < r0:
        raise ConfigError(f"--rmin {lo} lies below the domain minimum {r0}")
    if lo >= cfg.r_max:
        raise ConfigError("--rmin must be below --rmax")
    if cfg.log:
        return np.geomspace(lo, cfg.r_max, cfg.count)
    return np.linspace(lo, cfg.r_max, cfg.count)


def _instantiate(fid, params):
    try:
        return instantiate(fid, params)
    except UnknownFamily:
        raise ConfigError(f"unknown family {fid!r}") from None
    except CoframeError as exc:
        raise ConfigError(f"{fid}: {exc}") from exc


def _bound_params(fam) -> dict:
    return {k: v for k, v in sorted(fam.params.items()) if isinstance(v, (int, float))}


def _json(cfg, entries, ok, extra=None) -> str:
    doc = {"schema": SCHEMA, "command": cfg.command, "params": cfg.params,
           "entries": entries, "pass": ok}
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


# ------------------------------------------------------------------ commands

def cmd_verify(cfg: RunConfig) -> int:
    if cfg.family == "all":
        ids = list_families()
    elif cfg.family:
        ids = [cfg.family]
    else:
        raise ConfigError("verify needs --family ID or --all")
    entries = []
    for fid in ids:
        if fid not in list_families():
            raise ConfigError(f"unknown family {fid!r}")
        params = dict(cfg.params)
        if cfg.family == "all":
            # only parameters the family actually has and does not pin
            pinned = pinned_params(fid)
            params = {k: v for k, v in params.items() if k in family_defaults(fid) and k not in pinned}
        fam = _instantiate(fid, params)
        grid = _grid(cfg, fam)
        try:
            reports = verify_family(fam, grid, cfg.tol)
        except CoframeError as exc:
            entries.append({"family": fid, "equation": "*", "params": _bound_params(fam),
                            "max_relative_residual": math.inf, "pass": False,
                            "samples": len(grid), "error": str(exc)})
            continue
        for rep in reports:
            entries.append({"family": fid, "equation": rep.equation,
                            "params": _bound_params(fam),
                            "branch": rep.notes.get("branch"),
                            "max_relative_residual": rep.max_relative,
                            "pass": rep.passed, "samples": int(len(rep.r))})
    ok = all(e["pass"] for e in entries)
    if cfg.fmt == "json":
        text = _json(cfg, [_jsonable(e) for e in entries], ok)
    else:
        rows = [(e["family"], e["equation"], "" if e.get("branch") is None else e["branch"],
                 e["max_relative_residual"], e["pass"], e["samples"]) for e in entries]
        text = _csv(["family", "equation", "branch", "max_relative_residual", "pass", "samples"], rows)
    _emit(cfg, text)
    return 0 if ok else 1


def _jsonable(e: dict) -> dict:
    out = dict(e)
    v = out["max_relative_residual"]
    if not math.isfinite(v):
        out["max_relative_residual"] = None
    return out


def cmd_branches(cfg: RunConfig) -> int:
    if not cfg.family or cfg.family == "all":
        raise ConfigError("branches needs a single --family")
    fam = _instantiate(cfg.family, cfg.params)
    if not isinstance(fam.payload, Implicit):
        raise ConfigError(f"{cfg.family} is not an implicit family")
    grid = _grid(cfg, fam)
    bs = branches_for(fam, grid)
    glob = {b.id for b in bs.global_branches}
    summary = {"family": fam.id, "branch_count": len(bs.branches),
               "branch_count_global": len(glob),
               "bolt_multiplicity": bs.bolt_multiplicity,
               "bolt_roots": [{"value": rt.value, "multiplicity": rt.multiplicity}
                              for rt in bs.bolt_roots],
               "params": _bound_params(fam)}
    if cfg.fmt == "json":
        entries = [{"branch": b.id, "global": b.id in glob, "boundary": b.boundary,
                    "complete": b.complete, "r": b.r.tolist(), "value": b.a.tolist()}
                   for b in bs.branches]
        _emit(cfg, _json(cfg, entries, True, {"summary": summary}))
    else:
        rows = [(r, b.id, a, b.id in glob) for b in bs.branches for r, a in zip(b.r, b.a)]
        _emit(cfg, _csv(["r", "branch_id", "value", "global"], rows))
        sys.stderr.write(json.dumps(summary) + "\n")
    return 0


def cmd_phase_grid(cfg: RunConfig) -> int:
    lo, hi = cfg.extra["lo"], cfg.extra["hi"]
    if lo > hi:
        raise ConfigError("--lo must not exceed --hi")
    rows = []
    for a1 in range(lo, hi + 1):
        for a3 in range(lo, hi + 1):
            t = flag_tan_theta(a1, a3)
            rows.append((a1, a3, "inf" if t is None else float(t), flag_region(a1, a3)))
    if cfg.fmt == "json":
        entries = [{"a1": a1, "a3": a3, "tan_theta": None if t == "inf" else t, "region": reg}
                   for a1, a3, t, reg in rows]
        _emit(cfg, _json(cfg, entries, True))
    else:
        _emit(cfg, _csv(["a1", "a3", "tan_theta", "region"], rows))
    return 0


def lambert_reference(r, C0: float, Csq: float) -> np.ndarray:
    """Closed cone solution ``10 r^(6/5) / (3 sqrt(W(C0 r^(128/45))) |C|)``."""
    r = np.asarray(r, dtype=float)
    w = np.array([scalar.lambert_w0(C0 * x ** (128 / 45)) for x in np.atleast_1d(r)])
    return 10 * np.atleast_1d(r) ** 1.2 / (3 * np.sqrt(w)) / math.sqrt(Csq)


def cmd_ode(cfg: RunConfig) -> int:
    fid = cfg.family or "bs_dspin7_ode"
    if fid == "all":
        raise ConfigError("ode needs a single --family")
    params = dict(cfg.params)
    a0 = cfg.extra.get("a")
    fam = _instantiate(fid, params)
    if not isinstance(fam.payload, Ode):
        raise ConfigError(f"{fid} is not an ODE family")
    env = fam.env
    Csq = env["C2"] ** 2 + env["C3"] ** 2 + env["C4"] ** 2
    if Csq == 0:
        raise ConfigError("C2, C3, C4 cannot all vanish")
    grid = _grid(cfg, fam)
    header = ["r", "p"]
    cols = []
    if a0 is not None:
        # series bootstrap near the bolt, then integrate outwards
        if fam.env["c"] <= 0:
            raise ConfigError("the series start needs c > 0")
        order = cfg.extra.get("order", 8)
        b = series_coeffs(a0, order, env["c"], env["k"], Csq)
        r_s = cfg.r_min if cfg.r_min is not None else 1e-3
        grid = np.geomspace(r_s, cfg.r_max, cfg.count) if cfg.log else np.linspace(r_s, cfg.r_max, cfg.count)
        p_s = sum(bn * r_s ** (2 * n) for n, bn in enumerate(b))
        sol = integrate_ode(fam.payload.spec, r_s, p_s, grid[-1], env, r_out=grid)
        p = sol.p
        ser = np.array([sum(bn * x ** (2 * n) for n, bn in enumerate(b)) for x in grid])
        header += ["series", "series_deviation"]
        cols = [ser, np.abs(ser - p)]
    elif env["c"] == 0 and env["k"] == 0 and env["C0"] > 0:
        # start on the Lambert-W solution and compare against it
        r_s = cfg.extra.get("r_start") or 1.0
        p_s = float(lambert_reference(r_s, env["C0"], Csq)[0])
        fam = _instantiate(fid, {**params, "r_start": r_s, "p_start": p_s})
        r, p, _ = ode_trace(fam, grid)
        ref = lambert_reference(grid, env["C0"], Csq)
        header += ["lambert", "deviation"]
        cols = [ref, np.abs(ref - p)]
    else:
        if cfg.extra.get("r_start") is not None or cfg.extra.get("p_start") is not None:
            over = {k: cfg.extra[k] for k in ("r_start", "p_start") if cfg.extra.get(k) is not None}
            fam = _instantiate(fid, {**params, **over})
        r, p, _ = ode_trace(fam, grid)
    rows = list(zip(grid, p, *cols))
    if cfg.fmt == "json":
        entries = [dict(zip(header, map(float, row))) for row in rows]
        extra = {}
        if cols:
            extra["max_deviation"] = float(np.max(cols[-1]))
        _emit(cfg, _json(cfg, entries, True, extra))
    else:
        _emit(cfg, _csv(header, rows))
    return 0


COMMANDS = {"verify": cmd_verify, "branches": cmd_branches,
            "phase-grid": cmd_phase_grid, "ode": cmd_ode}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coframe", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=list(COMMANDS))
    sel = ap.add_mutually_exclusive_group()
    sel.add_argument("--family", metavar="ID")
    sel.add_argument("--all", action="store_true", help="every registered family")
    for name in PARAM_FLAGS:
        ap.add_argument(f"--{name}", type=float, default=None, dest=f"p_{name}")
    ap.add_argument("--rmin", type=float, default=None)
    ap.add_argument("--rmax", type=float, default=100.0)
    ap.add_argument("--grid", type=int, default=400, help="number of radii")
    spacing = ap.add_mutually_exclusive_group()
    spacing.add_argument("--log", dest="log", action="store_true", default=True)
    spacing.add_argument("--linear", dest="log", action="store_false")
    ap.add_argument("--tol", type=float, default=1e-9)
    ap.add_argument("--out", metavar="PATH")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--lo", type=int, default=-10, help="phase-grid lower bound")
    ap.add_argument("--hi", type=int, default=10, help="phase-grid upper bound")
    ap.add_argument("--a", type=float, default=None, help="ode: series start value p(0)")
    ap.add_argument("--order", type=int, default=8, help="ode: series order")
    ap.add_argument("--r-start", type=float, default=None, dest="r_start")
    ap.add_argument("--p-start", type=float, default=None, dest="p_start")
    return ap


def config_from_args(ns) -> RunConfig:
    params = {}
    for name in PARAM_FLAGS:
        v = getattr(ns, f"p_{name}")
        if v is not None:
            params[name] = int(v) if name in ("a1", "a3") and v == int(v) else v
    family = "all" if ns.all else ns.family
    cfg = RunConfig(ns.command, family, params, ns.rmin, ns.rmax, ns.grid, ns.log, ns.tol,
                    ns.out, ns.format,
                    {"lo": ns.lo, "hi": ns.hi, "a": ns.a, "order": ns.order,
                     "r_start": ns.r_start, "p_start": ns.p_start})
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        sys.stderr.write(f"coframe: {exc}\n")
        return 2
    except CoframeError as exc:
        sys.stderr.write(f"coframe: {type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
