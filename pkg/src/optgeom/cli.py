"""Command line: classify catalog metrics over point sets, dump invariants, run checks.

Exit codes: 0 pass, 1 verification failure, 2 configuration error,
3 numerical indeterminacy.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import itertools
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, metrics, verify
from .frames import FrameError
from .optical import TOL, IndeterminateError, analyze, scaled_congruence

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INDETERMINATE = 0, 1, 2, 3
NORMS = ("gamma", "rho", "tau", "sigma", "pi")
FLAGS = ("geodetic", "affine", "expanding", "twisting", "shearing", "maximally_twisting",
         "kundt", "robinson_trautman", "recurrent_walker", "parallel")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    entry: str = "minkowski"
    params: dict = field(default_factory=dict)
    grid: list = field(default_factory=list)  # [(axis, lo, hi, count)]
    points: list | None = None
    count: int | None = None
    congruence: str | None = None
    tol: float = TOL
    seed: int = 0
    out: str | None = None
    format: str = "json"


# -- parsing -------------------------------------------------------------------------


def parse_value(text):
    text = text.strip()
    if "," in text:
        return tuple(parse_value(t) for t in text.split(",") if t.strip())
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    raise ConfigError(f"not a number: {text!r}")


def parse_set(items):
    out = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = parse_value(val)
    return out


def parse_grid(items):
    out = []
    for item in items:
        axis, sep, rng = item.partition("=")
        parts = rng.split(":")
        if not sep or len(parts) != 3:
            raise ConfigError(f"--grid expects axis=min:max:count, got {item!r}")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigError(f"bad grid range {item!r}") from None
        if n < 1:
            raise ConfigError(f"grid count must be positive in {item!r}")
        out.append((axis.strip(), lo, hi, n))
    return out


def read_points(path):
    try:
        pts = np.loadtxt(path, delimiter=None if path.endswith(".txt") else ",", ndmin=2, comments="#")
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read points from {path}: {exc}") from None
    return [list(map(float, p)) for p in pts]


def read_config(path, cfg):
    """Fill ``cfg`` from a key = value file with a [run] section and [entry.<name>] tables."""
    cp = configparser.ConfigParser()
    cp.optionxform = str  # parameter names are case sensitive
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    tables = [s for s in cp.sections() if s.startswith("entry.")]
    run = cp["run"] if cp.has_section("run") else {}
    if "entry" in run:
        cfg.entry = run["entry"].strip()
    elif len(tables) == 1:
        cfg.entry = tables[0][len("entry."):]
    if f"entry.{cfg.entry}" in cp:
        cfg.params.update({k: parse_value(v) for k, v in cp[f"entry.{cfg.entry}"].items()})
    if "congruence" in run:
        cfg.congruence = run["congruence"].strip()
    if "tol" in run:
        cfg.tol = float(run["tol"])
    if "seed" in run:
        cfg.seed = int(run["seed"])
    if "count" in run:
        cfg.count = int(run["count"])
    if "format" in run:
        cfg.format = run["format"].strip()
    if "out" in run:
        cfg.out = run["out"].strip()
    if "grid" in run:
        cfg.grid = parse_grid([g for g in run["grid"].split(";") if g.strip()])
    if "points" in run:
        cfg.points = read_points(os.path.join(os.path.dirname(path), run["points"].strip()))
    return cfg


def build_config(args):
    cfg = RunConfig()
    if args.config:
        read_config(args.config, cfg)
    if args.entry:
        if os.path.isfile(args.entry):
            read_config(args.entry, cfg)
        else:
            cfg.entry = args.entry
    cfg.params.update(parse_set(args.set or []))
    if args.grid:
        cfg.grid = parse_grid(args.grid)
    if args.points:
        cfg.points = read_points(args.points)
    for name in ("congruence", "tol", "seed", "count", "out", "format"):
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    if cfg.format not in ("json", "csv"):
        raise ConfigError(f"unknown format {cfg.format!r}")
    return cfg


def resolve(cfg):
    """(entry, congruence spec, candidate points) for a run configuration."""
    try:
        e = metrics.entry(cfg.entry, **cfg.params)
        spec = e.congruence(cfg.congruence)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None
    cfg.congruence = spec.label
    if cfg.points is not None:
        pts = [np.asarray(p, dtype=float) for p in cfg.points]
        if any(p.shape != (e.model.dim,) for p in pts):
            raise ConfigError(f"points must have {e.model.dim} coordinates")
    elif cfg.count is not None:
        pts = list(e.random_points(cfg.count, np.random.default_rng(cfg.seed)))
    else:
        pts = list(e.sample_points)
    if cfg.grid:
        coords = list(e.model.coords)
        axes, values = [], []
        for axis, lo, hi, n in cfg.grid:
            if axis in coords:
                axes.append(coords.index(axis))
            elif axis.isdigit() and int(axis) < e.model.dim:
                axes.append(int(axis))
            else:
                raise ConfigError(f"unknown grid axis {axis!r}; coordinates are {coords}")
            values.append(np.linspace(lo, hi, n))
        base = pts[0]
        pts = []
        for combo in itertools.product(*values):
            p = base.copy()
            p[axes] = combo
            pts.append(p)
    return e, spec, pts


# -- evaluation ----------------------------------------------------------------------------


def _evaluate(e, spec, pts, tol):
    """Analyses at admissible points, the skipped points and indeterminate messages."""
    done, skipped, indeterminate = [], [], []
    for i, p in enumerate(pts):
        why = e.model.check(p)
        if why:
            skipped.append({"index": i, "point": p.tolist(), "reason": why})
            continue
        try:
            an = analyze(e.model, spec, p, tol)
        except IndeterminateError as exc:
            indeterminate.append({"index": i, "point": p.tolist(), "message": str(exc)})
            an = analyze(e.model, spec, p, tol, strict=False)
        except (FrameError, ValueError, np.linalg.LinAlgError) as exc:
            skipped.append({"index": i, "point": p.tolist(), "reason": str(exc)})
            continue
        done.append((i, an))
    return done, skipped, indeterminate


def classify_rows(done):
    rows = []
    for i, an in done:
        inv, rep = an.inv, an.report
        row = {"index": i, "point": an.point.tolist()}
        row.update({f"|{k}|": float(np.linalg.norm(getattr(inv, k))) for k in NORMS})
        row.update({k: rep.flags[k] for k in FLAGS})
        row["twist_rank"] = rep.twist_rank
        rows.append(row)
    return rows


def aggregate(rows):
    if not rows:
        return {"constant": None, "flags": None}
    key = lambda r: tuple(r[k] for k in FLAGS) + (r["twist_rank"],)
    first = key(rows[0])
    changes = [r["index"] for r in rows if key(r) != first]
    if changes:
        return {"constant": False, "message": f"class changes at points {changes}", "changes_at": changes}
    return {"constant": True, "flags": {k: rows[0][k] for k in FLAGS}, "twist_rank": rows[0]["twist_rank"]}


def invariant_rows(done):
    rows = []
    for i, an in done:
        inv = an.inv
        rows.append({
            "index": i,
            "point": an.point.tolist(),
            "gamma": inv.gamma.tolist(),
            "rho": float(inv.rho),
            "tau": inv.tau.tolist(),
            "sigma": inv.sigma.tolist(),
            "pi": inv.pi.tolist(),
        })
    return rows


# -- output ---------------------------------------------------------------------------


def _flat(row):
    out = {}
    for k, v in row.items():
        arr = np.asarray(v)
        if arr.ndim == 0:
            out[k] = v
        else:
            for idx in np.ndindex(arr.shape):
                out[k + "".join(f"[{j}]" for j in idx)] = arr[idx].item()
    return out


def render(header, rows, extra, fmt):
    if fmt == "json":
        return json.dumps({"header": header, "rows": rows, **extra}, indent=2) + "\n"
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}: {json.dumps(v)}\n")
    for k, v in extra.items():
        buf.write(f"# {k}: {json.dumps(v)}\n")
    flat = [_flat(r) for r in rows]
    cols = list(flat[0]) if flat else []
    buf.write(f"# columns: {', '.join(cols)}\n")
    if flat:
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        w.writerows(flat)
    return buf.getvalue()


def emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def header(cfg, command):
    return {
        "command": command,
        "entry": cfg.entry,
        "params": {k: list(v) if isinstance(v, tuple) else v for k, v in cfg.params.items()},
        "congruence": cfg.congruence,
        "tol": cfg.tol,
        "seed": cfg.seed,
        "version": __version__,
    }


# -- commands -----------------------------------------------------------------------------


def _report_indeterminate(ind):
    for item in ind:
        print(f"indeterminate at point {item['index']}: {item['message']}", file=sys.stderr)


def cmd_classify(cfg):
    e, spec, pts = resolve(cfg)
    done, skipped, ind = _evaluate(e, spec, pts, cfg.tol)
    rows = classify_rows(done)
    extra = {"skipped": skipped, "indeterminate": ind, "aggregate": aggregate(rows)}
    emit(render(header(cfg, "classify"), rows, extra, cfg.format), cfg.out)
    _report_indeterminate(ind)
    return EXIT_INDETERMINATE if ind else EXIT_OK


def cmd_invariants(cfg, boost=0.0):
    e, spec, pts = resolve(cfg)
    if boost:
        spec = scaled_congruence(spec, lambda x: np.exp(boost))
    done, skipped, ind = _evaluate(e, spec, pts, cfg.tol)
    head = header(cfg, "invariants")
    head["boost"] = boost
    emit(render(head, invariant_rows(done), {"skipped": skipped, "indeterminate": ind}, cfg.format), cfg.out)
    _report_indeterminate(ind)
    return EXIT_INDETERMINATE if ind else EXIT_OK


def format_table(checks):
    lines = [f"{'suite':<12} {'check':<48} {'entry':<34} {'value':>12} {'':2} {'threshold':>10}  result"]
    for c in checks:
        lines.append(f"{c.suite:<12} {c.name:<48} {c.entry:<34} {c.value:12.3e} {c.relation:2} {c.threshold:10.1e}  "
                     f"{'PASS' if c.passed else 'FAIL'}")
    nfail = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - nfail} passed, {nfail} failed")
    return "\n".join(lines) + "\n"


def cmd_verify(suite, seed=0, out=None, fmt="table"):
    checks = verify.run(suite, np.random.default_rng(seed))
    if fmt == "table":
        text = format_table(checks)
    else:
        head = {"command": "verify", "suite": suite, "seed": seed, "version": __version__}
        text = render(head, [c.as_dict() for c in checks], {"failed": sum(not c.passed for c in checks)}, fmt)
    emit(text, out)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


# -- entry point -----------------------------------------------------------------------------


def _run_options(p):
    p.add_argument("--entry", help="catalog entry name or config file path")
    p.add_argument("--config", help="config file with [run] and [entry.<name>] sections")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="parameter override (repeatable)")
    p.add_argument("--grid", action="append", metavar="AXIS=MIN:MAX:COUNT", help="grid axis (repeatable)")
    p.add_argument("--points", help="file with one point per line")
    p.add_argument("--count", type=int, help="number of random sample points (seeded)")
    p.add_argument("--congruence", help="congruence label")
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("json", "csv"))


def make_parser():
    ap = argparse.ArgumentParser(prog="optgeom", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"optgeom {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    _run_options(sub.add_parser("classify", help="flags and twist rank per point"))
    p = sub.add_parser("invariants", help="gamma, rho, tau, sigma, pi per point")
    _run_options(p)
    p.add_argument("--boost", type=float, default=0.0, help="rescale k by exp(BOOST)")
    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("suite", choices=(*verify.SUITES, "all"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    return ap


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args.suite, args.seed, args.out, args.format)
        cfg = build_config(args)
        if args.command == "classify":
            return cmd_classify(cfg)
        return cmd_invariants(cfg, args.boost)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
