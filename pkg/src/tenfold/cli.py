"""Command-line experiment runner.

Each subcommand reads an INI-style config (one level of ``[sections]``), runs a
task over a parameter grid and seed list, and writes ``report.json`` plus
``rows.csv`` into the output directory.

Exit codes: 0 when every asserted property holds, 1 when one fails, 2 for a
bad config.
"""

from __future__ import annotations

import argparse
import ast
import configparser
import csv
import hashlib
import inspect
import itertools
import json
import os
import sys
from pathlib import Path

import numpy as np

SCHEMA = "1"
TASKS = ("verify-clifford", "classify", "bulk-invariant", "edge-spectrum", "bb-check",
         "disorder-sweep", "homotopy-sweep")

TOLERANCE_DEFAULTS = {"residual": 1e-10, "invariant": 0.01, "gap_floor": 1e-6, "symmetry": 1e-8}

SECTION_DEFAULTS = {
    "run": {"task": None, "out": "tenfold-out", "jobs": 1, "plot": False},
    "model": {"name": "ssh", "L": None, "class": None},
    "disorder": {"strength": 0.0, "relative": True, "seeds": "0..0"},
    "grid": {},
    "tolerance": dict(TOLERANCE_DEFAULTS),
    "clifford": {"max_n": 8},
    "numerics": {"k_points": 512, "chern_grid": 24, "n_ky": 24, "twist_points": 64},
}


class ConfigError(Exception):
    pass


# ------------------------------------------------------------------ config


def _literal(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        low = text.strip().lower()
        if low in ("true", "yes", "on"):
            return True
        if low in ("false", "no", "off"):
            return False
        return text.strip()


def parse_seeds(spec) -> list:
    """``A..B`` (inclusive), a single int, or a list of ints."""
    if isinstance(spec, int):
        return [spec]
    if isinstance(spec, (list, tuple)):
        return [int(s) for s in spec]
    text = str(spec).strip()
    if ".." in text:
        a, b = text.split("..", 1)
        try:
            a, b = int(a), int(b)
        except ValueError:
            raise ConfigError(f"bad seed range {text!r}") from None
        if b < a:
            raise ConfigError(f"empty seed range {text!r}")
        return list(range(a, b + 1))
    try:
        return [int(text)]
    except ValueError:
        raise ConfigError(f"bad seeds {text!r}") from None


def parse_grid_values(key: str, spec) -> list:
    """``start:stop:num`` (inclusive linspace), a list, or a scalar."""
    if isinstance(spec, (list, tuple)):
        return list(spec)
    if isinstance(spec, str) and spec.count(":") == 2:
        try:
            a, b, n = spec.split(":")
            return [float(x) for x in np.round(np.linspace(float(a), float(b), int(n)), 12)]
        except ValueError:
            raise ConfigError(f"bad grid for {key!r}: {spec!r}") from None
    return [spec]


def _model_params(name: str) -> set:
    from .lattice import ZOO

    if name not in ZOO:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(ZOO)}")
    return set(inspect.signature(ZOO[name]).parameters) - {"L"}


def resolve_config(raw: dict) -> dict:
    """Fill defaults and reject unknown sections or keys."""
    cfg = {sec: dict(vals) for sec, vals in SECTION_DEFAULTS.items()}
    for sec, vals in raw.items():
        if sec not in cfg:
            raise ConfigError(f"unknown section [{sec}]")
        cfg[sec].update(vals)
    name = cfg["model"]["name"]
    allowed_model = set(SECTION_DEFAULTS["model"]) | _model_params(name)
    for k in cfg["model"]:
        if k not in allowed_model:
            raise ConfigError(f"unknown key {k!r} in [model]")
    for sec in ("run", "disorder", "tolerance", "clifford", "numerics"):
        for k in cfg[sec]:
            if k not in SECTION_DEFAULTS[sec]:
                raise ConfigError(f"unknown key {k!r} in [{sec}]")
    for k in cfg["grid"]:
        if k not in _model_params(name):
            raise ConfigError(f"unknown key {k!r} in [grid]")
    if cfg["run"]["task"] is not None and cfg["run"]["task"] not in TASKS:
        raise ConfigError(f"unknown task {cfg['run']['task']!r}")
    cfg["disorder"]["seeds"] = parse_seeds(cfg["disorder"]["seeds"])
    cfg["grid"] = {k: parse_grid_values(k, v) for k, v in cfg["grid"].items()}
    return cfg


def load_config(path: str | None) -> dict:
    raw: dict = {}
    if path is None:
        return raw
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep key case (model size is ``L``)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(str(exc)) from None
    for sec in cp.sections():
        raw[sec] = {k: _literal(v) for k, v in cp.items(sec)}
    return raw


def apply_overrides(raw: dict, args) -> dict:
    raw = {k: dict(v) for k, v in raw.items()}
    raw.setdefault("run", {})["task"] = args.task
    if args.out is not None:
        raw["run"]["out"] = args.out
    if args.jobs is not None:
        raw["run"]["jobs"] = args.jobs
    if args.seeds is not None:
        raw.setdefault("disorder", {})["seeds"] = args.seeds
    for item in args.tolerance or []:
        if "=" not in item:
            raise ConfigError(f"--tolerance expects KEY=VAL, got {item!r}")
        k, v = item.split("=", 1)
        if k not in TOLERANCE_DEFAULTS:
            raise ConfigError(f"unknown key {k!r} in --tolerance")
        try:
            raw.setdefault("tolerance", {})[k] = float(v)
        except ValueError:
            raise ConfigError(f"bad tolerance value {v!r} for {k!r}") from None
    return raw


def config_digest(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


# ------------------------------------------------------------------ evaluation helpers


def _points(cfg: dict) -> list:
    grid = cfg["grid"]
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def _build(cfg: dict, point: dict, L: int | None = None):
    from .lattice import make_model

    m = cfg["model"]
    params = {k: v for k, v in m.items() if k not in ("name", "L", "class")}
    params.update(point)
    size = L or m["L"]
    if size is not None:
        params["L"] = int(size)
    try:
        return make_model(m["name"], **params)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _strength(cfg: dict, model) -> float:
    from .lattice import bloch_gap

    s = float(cfg["disorder"]["strength"])
    if s and cfg["disorder"]["relative"]:
        s *= bloch_gap(model, 256 if model.d == 1 else 48)
    return s


def _seeds(cfg: dict) -> list:
    return cfg["disorder"]["seeds"] if float(cfg["disorder"]["strength"]) else [None]


def _bulk_invariant(model, dis, cfg):
    from .core import GapClosed
    from .invariants import bott_index, chern_2d, pfaffian_z2, winding_1d
    from .lattice import assemble, flatten, gap
    from .symmetry import as_class

    num = cfg["numerics"]
    label = as_class(model.cls).label
    disordered = dis is not None and dis.strength > 0
    try:
        if model.d == 1 and label == "D":
            return pfaffian_z2(model, dis if disordered else None)
        if model.d == 1:
            return winding_1d(model, num["twist_points"] if disordered else num["k_points"],
                              dis if disordered else None)
        if model.d == 2 and not disordered:
            return chern_2d(model, num["chern_grid"])
        H = assemble(model, dis)
        if gap(H) < cfg["tolerance"]["gap_floor"]:
            return None
        return bott_index(flatten(H).M, model, None if dis is None else dis.seed)
    except GapClosed:
        return None


def _base_row(point: dict, seed, strength: float) -> dict:
    row = dict(point)
    row["seed"] = "" if seed is None else seed
    row["strength"] = strength
    return row


# ------------------------------------------------------------------ tasks (pure, picklable)


def _task_classify(cfg, point, seed):
    from .core import GapClosed
    from .lattice import assemble, disorder
    from .symmetry import as_class, build_physical, classify, srfl_label

    model = _build(cfg, point)
    s = _strength(cfg, model) if seed is not None else 0.0
    dis = disorder(model, seed, s) if seed is not None else None
    H = assemble(model, dis).M
    label = cfg["model"]["class"] or model.cls
    cls = as_class(label)
    ph = build_physical(model.internal.n_V, cls, model.n_sites)
    row = _base_row(point, seed, s)
    try:
        res = classify(H, ph, cls, cfg["tolerance"]["symmetry"])
    except GapClosed:
        row.update(cls=cls.label, commutes="", anticommutes="", agree="", srfl="", srfl_match="",
                   flag="gap_closed")
        return [row], True
    srfl = srfl_label(H, ph, cfg["tolerance"]["symmetry"])
    row.update(cls=cls.label, commutes=res.commutes_with_symmetries,
               anticommutes=res.J_anticommutes_with_pseudosyms, agree=res.agree,
               srfl=srfl or "", srfl_match=srfl == cls.label, flag="")
    ok = res.agree and res.commutes_with_symmetries and srfl == cls.label
    return [row], ok


def _task_bulk(cfg, point, seed):
    from .lattice import disorder

    model = _build(cfg, point)
    s = _strength(cfg, model) if seed is not None else 0.0
    dis = disorder(model, seed, s) if seed is not None else None
    rep = _bulk_invariant(model, dis, cfg)
    row = _base_row(point, seed, s)
    if rep is None:
        row.update(kind="", value="", raw="", residual="", flag="gap_closed")
        return [row], True
    row.update(kind=rep.kind, value=rep.value, raw=rep.raw, residual=rep.residual, flag="")
    return [row], rep.residual < cfg["tolerance"]["invariant"]


def _task_edge(cfg, point, seed):
    from .boundary import census_from_hso, cylinder_hamiltonian, edge_spectrum, slab_hamiltonian, szego_compress
    from .invariants import NotChiral, chiral_operator, sector_matrix
    from .lattice import assemble, bloch_gap, disorder, flatten, gap

    model = _build(cfg, point)
    rows, ok = [], True
    if model.d == 2:
        g = bloch_gap(model, 48)
        n = cfg["numerics"]["n_ky"]
        for i in range(n):
            ky = 2 * np.pi * (i + 0.5) / n
            h = cylinder_hamiltonian(model, ky)
            per = len(h) // model.L
            cc = np.repeat(np.arange(model.L), per)
            census = edge_spectrum(h, cc, model.L, g)
            for mode in census.modes:
                row = _base_row(point, seed, 0.0)
                row.update(source="cylinder", ky=ky, E=mode.E, edge=mode.edge, weight=mode.weight,
                           chirality="", flag="")
                rows.append(row)
                ok &= mode.weight > 0.5 and abs(mode.E) < 0.5 * g
        return rows, ok
    torus = model.with_size(2 * model.L)
    s = _strength(cfg, torus) if seed is not None else 0.0
    dis = disorder(torus, seed, s) if seed is not None else None
    H = assemble(torus, dis)
    g = gap(H)
    if g < cfg["tolerance"]["gap_floor"]:
        row = _base_row(point, seed, s)
        row.update(source="", ky="", E="", edge="", weight="", chirality="", flag="gap_closed")
        return [row], True
    Hs, cc = slab_hamiltonian(torus, dis)
    half = torus.L // 2
    try:
        S = chiral_operator(torus, half)
        Hv = sector_matrix(torus, Hs, half)
        nV = torus.internal.n_V
        mask = np.tile(np.r_[np.ones(nV, bool), np.zeros(nV, bool)], half)
        cv = cc[mask] if len(Hv) != len(Hs) else cc
        sources = [("slab_H", edge_spectrum(Hv, cv, half, g, S))]
    except NotChiral:
        sources = [("slab_H", edge_spectrum(Hs, cc, half, g))]
    sources.append(("Jhat", census_from_hso(szego_compress(flatten(H), torus, check_thin=False))))
    for src, census in sources:
        gap_ref = g if src == "slab_H" else 1.0
        for mode in census.modes:
            row = _base_row(point, seed, s)
            row.update(source=src, ky="", E=mode.E, edge=mode.edge, weight=mode.weight,
                       chirality="" if mode.chirality is None else mode.chirality, flag="")
            rows.append(row)
            ok &= mode.weight > 0.5 and abs(mode.E) < 0.5 * gap_ref
    return rows, ok


def _task_bb(cfg, point, seed):
    from .boundary import _bb_point_1d, chern_bb_check
    from .lattice import disorder

    model = _build(cfg, point)
    if model.d == 2:
        if seed is not None:
            raise ConfigError("bb-check on d = 2 models supports clean cylinders only")
        rep = chern_bb_check(model, cfg["numerics"]["chern_grid"], cfg["numerics"]["n_ky"])
        row = _base_row(point, seed, 0.0)
        row.update(bulk_kind="chern", bulk=rep.chern, boundary_right=rep.flow["right_branches"],
                   boundary_left=rep.flow["left_branches"], flag="", agree=rep.agree,
                   antisymmetric=rep.antisymmetric)
        return [row], rep.agree and rep.antisymmetric
    torus = model.with_size(2 * model.L)
    s = _strength(cfg, torus) if seed is not None else 0.0
    dis = disorder(torus, seed, s) if seed is not None else None
    r = _bb_point_1d(torus, dis, cfg["tolerance"]["gap_floor"])
    row = _base_row(point, seed, s)
    row.update(bulk_kind=r.bulk_kind, bulk=_blank(r.bulk), boundary_right=_blank(r.boundary_right),
               boundary_left=_blank(r.boundary_left), bulk_gap=r.bulk_gap, slab_gap=_blank(r.slab_gap),
               census_right=_blank(r.census_right), census_left=_blank(r.census_left), flag=r.flag,
               agree=_blank(r.agree), antisymmetric=_blank(r.antisymmetric),
               trivial_ok=_blank(r.trivial_ok), cross_check=_blank(r.cross_check))
    ok = (not r.evaluated) or (r.agree and r.antisymmetric is not False and r.trivial_ok
                                and r.cross_check)
    return [row], bool(ok)


def _blank(v):
    return "" if v is None else v


_TASK_FUNCS = {
    "classify": _task_classify,
    "bulk-invariant": _task_bulk,
    "disorder-sweep": _task_bulk,
    "edge-spectrum": _task_edge,
    "bb-check": _task_bb,
}


def _run_unit(args):
    task, cfg, point, seed = args
    return _TASK_FUNCS[task](cfg, point, seed)


def _units(task: str, cfg: dict) -> list:
    seeds = _seeds(cfg)
    if task == "bb-check" and seeds != [None]:
        seeds = [None] + seeds  # clean reference row first
    if task == "disorder-sweep" and seeds == [None]:
        raise ConfigError("disorder-sweep needs a non-zero [disorder] strength")
    return [(task, cfg, p, s) for p in _points(cfg) for s in seeds]


def _map(units: list, jobs: int) -> list:
    if jobs > 1 and len(units) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as ex:
            return list(ex.map(_run_unit, units))  # map keeps input order
    return [_run_unit(u) for u in units]


def _verify_clifford(cfg):
    from .clifford import standard_rep, verify_rep

    rows, ok = [], True
    tol = cfg["tolerance"]["residual"]
    for n in range(cfg["clifford"]["max_n"] + 1):
        for r in range(n + 1):
            s = n - r
            cl = standard_rep(r, s)
            rep = verify_rep(cl, tol)
            rows.append({"r": r, "s": s, "dim": cl.dim, "residual": rep.residual,
                         **{k: v for k, v in sorted(rep.parts.items())}, "passed": rep.passed})
            ok &= rep.passed and rep.residual < tol
    return rows, ok, {}


def _homotopy(cfg):
    from .invariants import homotopy_probe

    if len(cfg["grid"]) != 1:
        raise ConfigError("homotopy-sweep needs exactly one [grid] key (the path parameter)")
    points = _points(cfg)
    models = [_build(cfg, p) for p in points]
    rep = homotopy_probe(models, lambda m: _bulk_invariant(m, None, cfg) or _Indet(),
                         gap_floor=cfg["tolerance"]["gap_floor"])
    rows = []
    for p, v, g, f in zip(points, rep.values, rep.gaps, rep.flagged):
        rows.append({**p, "gap": g, "value": _blank(v), "flagged": f})
    return rows, rep.changes_only_at_flags, {"flips": rep.flips()}


class _Indet:
    indeterminate = True
    value = None


def _summaries(task: str, rows: list, cfg: dict) -> dict:
    if task != "disorder-sweep":
        return {}
    keys = list(cfg["grid"])
    by_point: dict = {}
    for r in rows:
        if r["flag"]:
            continue
        by_point.setdefault(tuple(r[k] for k in keys), set()).add(r["value"])
    constant = {json.dumps(list(k)): sorted(v) for k, v in by_point.items()}
    out = {"values_per_point": constant,
           "constant_across_seeds": all(len(v) == 1 for v in by_point.values())}
    if len(keys) == 1:
        # sign changes of the invariant along a one-parameter grid, at segment midpoints
        seq = [(k[0], sorted(v)[0]) for k, v in sorted(by_point.items()) if len(v) == 1]
        out["phase_boundaries"] = [(a + b) / 2 for (a, va), (b, vb) in zip(seq, seq[1:]) if va != vb]
    return out


# ------------------------------------------------------------------ output


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path: Path, rows: list) -> None:
    """RFC-4180: CRLF line ends, header row, minimal quoting."""
    cols: list = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in cols])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if np.isfinite(f) else repr(f)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def run(cfg: dict) -> int:
    task = cfg["run"]["task"]
    out = Path(cfg["run"]["out"])
    jobs = int(cfg["run"]["jobs"])
    if task == "verify-clifford":
        rows, ok, extra = _verify_clifford(cfg)
    elif task == "homotopy-sweep":
        rows, ok, extra = _homotopy(cfg)
    else:
        results = _map(_units(task, cfg), jobs)
        rows = [r for chunk, _ in results for r in chunk]
        ok = all(flag for _, flag in results)
        extra = _summaries(task, rows, cfg)
        if task == "disorder-sweep":
            ok &= extra["constant_across_seeds"]
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "rows.csv", rows)
    report = {
        "schema": SCHEMA,
        "task": task,
        "passed": bool(ok),
        "config": cfg,
        "config_sha256": config_digest(cfg),
        "n_rows": len(rows),
        "tables": ["rows.csv"],
        "summary": extra,
    }
    if cfg["run"]["plot"]:
        from .report import plot_rows

        report["figure"] = plot_rows(out / "rows.csv", out / "rows.png")
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(_jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0 if ok else 1


# ------------------------------------------------------------------ entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tenfold", description="Desk-scale free-fermion topology experiments.")
    sub = p.add_subparsers(dest="task", required=True)
    env_jobs = os.environ.get("TENFOLD_JOBS")
    for t in TASKS:
        sp = sub.add_parser(t)
        sp.add_argument("--config", help="INI-style config file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seeds", help="seed range A..B (inclusive)")
        sp.add_argument("--jobs", type=int, default=int(env_jobs) if env_jobs else None,
                        help="worker processes (default: $TENFOLD_JOBS or 1)")
        sp.add_argument("--tolerance", action="append", metavar="KEY=VAL",
                        help=f"override a tolerance; keys: {', '.join(TOLERANCE_DEFAULTS)}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(apply_overrides(load_config(args.config), args))
        code = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if code:
        print(f"{args.task}: assertion failure (see report.json)", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
