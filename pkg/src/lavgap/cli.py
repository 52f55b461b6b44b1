"""Command line interface.

Every subcommand writes a table (CSV with a header row, or a JSON list of
records) to ``--out`` or standard output.  Exit codes: ``0`` on success,
``2`` when an exponent gate refuses the request, ``3`` on hypothesis or
configuration errors, ``64`` on usage errors such as unknown subcommands.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Callable, Iterable, Sequence

import numpy as np

from .classifiers import (
    GROWTH,
    STABLE,
    classify_weight,
    global_muckenhoupt_constant,
    muckenhoupt_constant,
    z_constant,
)
from .decomposition import decompose_on_grid, omega_at, sigma_at
from .energy import EnergySpec, approximate
from .errors import GateRefused, LavgapError
from .experiments import ConeConfig, absence_experiment, gap_experiment, minimize_discrete
from .geometry import Domain, StarShape
from .mollifier import MollifierConfig, ScalarField, mollify
from .polycover import interval_cover, verify_cover
from .weights import catalog_get, catalog_names, with_smoothness

EXIT_OK = 0
EXIT_REFUSED = 2
EXIT_CONFIG = 3
EXIT_USAGE = 64


class UsageError(Exception):
    """Raised by the parser instead of exiting with argparse's status 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# argument helpers


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from exc


def _region(text: str) -> Domain:
    """``lo,hi`` for an interval or ``lo,hi,lo,hi`` for a box."""
    v = _floats(text)
    if len(v) not in (2, 4) or any(v[i] >= v[i + 1] for i in range(0, len(v), 2)):
        raise argparse.ArgumentTypeError(f"expected lo,hi[,lo,hi] with lo < hi, got {text!r}")
    return Domain.box(*[(v[i], v[i + 1]) for i in range(0, len(v), 2)])


def _weight(args):
    w = catalog_get(args.weight).weight
    k = getattr(args, "k", None)
    alpha = getattr(args, "alpha", None)
    if k is not None or alpha is not None:
        w = with_smoothness(w, w.k if k is None else k, w.alpha if alpha is None else alpha)
    return w


def _factor(args) -> Callable:
    w = _weight(args)
    if args.factor == "sigma":
        return lambda x: sigma_at(w, x)
    if args.factor == "omega":
        return lambda x: omega_at(w, x)
    return w


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def _emit(args, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    rows = [[_num(v) for v in row] for row in rows]
    if args.format == "json":
        recs = [dict(zip(header, row)) for row in rows]
        # non-finite floats become strings so that the output stays valid JSON
        recs = [{k: (repr(v) if isinstance(v, float) and not math.isfinite(v) else v) for k, v in r.items()}
                for r in recs]
        text = json.dumps(recs, indent=1) + "\n"
    else:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(header)
        wr.writerows([repr(v) if isinstance(v, float) else v for v in row] for row in rows)
        text = buf.getvalue()
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _read_field(path: str, domain: Domain | None) -> ScalarField:
    """Read a lattice field from CSV columns ``x,u`` or ``x,y,u``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] == 2:
        order = np.argsort(data[:, 0])
        x, u = data[order, 0], data[order, 1]
        dom = domain or Domain.interval(x[0], x[-1])
        return ScalarField((x,), u, dom, vanishes_outside=True)
    if data.shape[1] == 3:
        xs, ys = np.unique(data[:, 0]), np.unique(data[:, 1])
        if len(xs) * len(ys) != len(data):
            raise LavgapError("a 2D field must be given on a full tensor lattice")
        vals = np.empty((len(xs), len(ys)))
        vals[np.searchsorted(xs, data[:, 0]), np.searchsorted(ys, data[:, 1])] = data[:, 2]
        dom = domain or Domain.box((xs[0], xs[-1]), (ys[0], ys[-1]))
        return ScalarField((xs, ys), vals, dom, vanishes_outside=True)
    raise LavgapError("field CSV needs columns x,u or x,y,u")


def _hat(t):
    return np.maximum(0.0, 1.0 - 2.0 * np.abs(np.asarray(t, dtype=float)))


# ---------------------------------------------------------------------------
# subcommands


def cmd_catalog(args) -> int:
    rows = []
    for name in catalog_names():
        e = catalog_get(name)
        claims = ";".join(f"{c.condition}({c.parameter:g})={c.verdict}" for c in e.claims)
        rows.append((e.name, e.weight.N, e.weight.k, e.weight.alpha, claims))
    _emit(args, ("name", "N", "k", "alpha", "claims"), rows)
    return EXIT_OK


def cmd_decompose(args) -> int:
    f = decompose_on_grid(_weight(args), args.region, args.resolution)
    cols = ("x",) if args.region.N == 1 else ("x", "y")
    _emit(args, cols + ("a", "sigma", "omega"), f.rows())
    return EXIT_OK


def _report(args, rep) -> int:
    _emit(args, ("level", "estimate", "witness", "verdict"), rep.rows())
    return EXIT_OK


def cmd_zconst(args) -> int:
    rep = z_constant(_factor(args), args.kappa, args.region, args.levels, args.seed,
                     stable=args.stable, growth=args.growth)
    return _report(args, rep)


def cmd_muck(args) -> int:
    rep = muckenhoupt_constant(_factor(args), args.r, args.inner, args.outer, args.levels, args.seed,
                               stable=args.stable, growth=args.growth)
    return _report(args, rep)


def cmd_muck_global(args) -> int:
    rep = global_muckenhoupt_constant(_factor(args), args.r, args.region, args.levels, args.seed,
                                      stable=args.stable, growth=args.growth)
    return _report(args, rep)


def cmd_classify(args) -> int:
    res = classify_weight(_weight(args), args.p, args.q, args.inner, args.outer, args.levels, args.seed,
                          args.resolution)
    _emit(args, ("part", "parameter", "level", "estimate", "verdict"), res.rows())
    return EXIT_OK


def cmd_polycover(args) -> int:
    cover = interval_cover(args.coeffs, args.T, args.eps)
    ok, witness = (True, None)
    if args.verify:
        ok, witness = verify_cover(args.coeffs, args.T, args.eps, cover, samples=args.verify)
    _emit(args, ("s", "t", "ratio"), cover.rows())
    if not ok:
        print(f"cover verification failed at t={witness!r}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def cmd_mollify(args) -> int:
    u = _read_field(args.field, None)
    star = StarShape(u.domain, tuple(args.x0), args.R)
    cfg = MollifierConfig(star, args.delta, args.kernel)
    pts = u.points if u.N > 1 else u.points[:, 0]
    vals = mollify(cfg, u, pts)
    cols = ("x", "u") if u.N == 1 else ("x", "y", "u")
    _emit(args, cols, (tuple(np.atleast_1d(p)) + (v,) for p, v in zip(u.points, vals)))
    return EXIT_OK


def cmd_approx(args) -> int:
    dom = args.region
    star = StarShape(dom, tuple(args.x0 or dom.center), args.R)
    u = _read_field(args.field, dom) if args.field else ScalarField.from_function(dom, args.resolution, _hat)
    spec = EnergySpec(args.p, args.q, _weight(args), dom)
    tr = approximate(u, spec, star, args.deltas, mode=args.mode, gamma=args.gamma)
    _emit(args, ("delta", "energy", "p_term", "q_term", "w11_error", "equi_index"), tr.rows())
    return EXIT_OK


def cmd_minimize(args) -> int:
    dom = args.region
    if dom.N != 1:
        raise LavgapError("minimize runs on intervals; use gap for the 2D cone problem")
    lo, hi = dom.bounding_box()[0]
    spec = EnergySpec(args.p, args.q, _weight(args), dom)
    res = minimize_discrete(spec, args.level, lambda t: (np.asarray(t) - lo) / (hi - lo), tol=args.tol)
    print(f"energy={res.energy!r} iterations={res.iterations} residual={res.residual!r}", file=sys.stderr)
    u = res.minimizer
    _emit(args, ("x", "u"), zip(u.axes[0], u.values))
    return EXIT_OK


def cmd_gap(args) -> int:
    cfg = ConeConfig(theta=math.atan(args.tan_theta), kappa=args.kappa, p=args.p, q=args.q, scale=args.scale,
                     levels=tuple(args.mesh_levels), grading=args.grading, single_phase=args.single_phase,
                     margin=args.margin, stability=args.stability, tol=args.tol)
    rep = gap_experiment(cfg, args.quadrature_level, args.oracle_cells)
    _gap_rows(args, rep)
    return EXIT_OK


def cmd_absence(args) -> int:
    dom = args.region
    star = StarShape(dom, tuple(args.x0 or dom.center), args.R)
    rep = absence_experiment(args.weight, args.k, args.alpha, args.p, args.q, args.mesh_levels, star,
                             stability=args.stability, tol=args.tol)
    _gap_rows(args, rep)
    return EXIT_OK


def _gap_rows(args, rep) -> None:
    extra = (rep.competitor_energy, rep.verdict, rep.margin)
    _emit(args, ("level", "minimum", "residual", "competitor", "verdict", "margin"),
          (row + extra for row in rep.rows()))


# ---------------------------------------------------------------------------
# parser

SCHEMAS = {
    "catalog": "name,N,k,alpha,claims",
    "decompose": "x[,y],a,sigma,omega",
    "zconst": "level,estimate,witness,verdict",
    "muck": "level,estimate,witness,verdict",
    "muck-global": "level,estimate,witness,verdict",
    "classify": "part,parameter,level,estimate,verdict (first row: gate)",
    "polycover": "s,t,ratio",
    "mollify": "x[,y],u",
    "approx": "delta,energy,p_term,q_term,w11_error,equi_index",
    "minimize": "x,u",
    "gap": "level,minimum,residual,competitor,verdict,margin",
    "absence": "level,minimum,residual,competitor,verdict,margin",
}


def _common(suppress: bool = False) -> argparse.ArgumentParser:
    # subcommand copies must not overwrite values given before the subcommand
    def dflt(v):
        return argparse.SUPPRESS if suppress else v

    g = _Parser(add_help=False)
    g.add_argument("--seed", type=int, default=dflt(0), help="random seed (default 0)")
    g.add_argument("--threads", type=int, default=dflt(1),
                   help="accepted for interface compatibility; all runs are sequential")
    g.add_argument("--out", default=dflt(None), help="output file (default: standard output)")
    g.add_argument("--format", choices=("csv", "json"), default=dflt("csv"))
    g.add_argument("--config", default=dflt(None), help="JSON (or TOML on Python >= 3.11) file of flag defaults")
    return g


def _verdict_flags(p) -> None:
    p.add_argument("--levels", type=int, default=3, help="sampling levels")
    p.add_argument("--stable", type=float, default=STABLE, help="bounded when the last two levels agree within this")
    p.add_argument("--growth", type=float, default=GROWTH, help="diverging when growth across two levels reaches this")


def _weight_flags(p, factor: bool = False) -> None:
    p.add_argument("--weight", required=True, help="catalog name, e.g. power2n:1 or sin6")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    if factor:
        p.add_argument("--factor", choices=("weight", "sigma", "omega"), default="weight",
                       help="test the weight itself or one factor of its decomposition")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lavgap", description=__doc__.split("\n")[0], parents=[_common()])
    common = _common(suppress=True)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_,
                              description=f"{help_}.  CSV columns: {SCHEMAS[name]}.")

    p = add("catalog", "list the example weights and their documented claims")
    p.add_argument("action", nargs="?", choices=("list",), default="list")
    p.set_defaults(func=cmd_catalog)

    p = add("decompose", "tabulate a, sigma and omega on a uniform grid")
    _weight_flags(p)
    p.add_argument("--region", type=_region, default=Domain.interval(-1, 1))
    p.add_argument("--resolution", type=int, default=1001)
    p.set_defaults(func=cmd_decompose)

    p = add("zconst", "multi-level estimate of the Z^kappa constant")
    _weight_flags(p, factor=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--region", type=_region, default=Domain.interval(-1, 1))
    _verdict_flags(p)
    p.set_defaults(func=cmd_zconst)

    p = add("muck", "multi-level estimate of the A_r constant over balls inside an outer region")
    _weight_flags(p, factor=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--inner", type=_region, default=Domain.interval(-1, 1))
    p.add_argument("--outer", type=_region, default=Domain.interval(-2, 2))
    _verdict_flags(p)
    p.set_defaults(func=cmd_muck)

    p = add("muck-global", "A_r estimate over balls intersected with a region")
    _weight_flags(p, factor=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--region", type=_region, default=Domain.interval(-1, 1))
    _verdict_flags(p)
    p.set_defaults(func=cmd_muck_global)

    p = add("classify", "exponent gate plus class verdicts for both factors")
    _weight_flags(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--inner", type=_region, default=Domain.interval(-1, 1))
    p.add_argument("--outer", type=_region, default=Domain.interval(-2, 2))
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--resolution", type=int, default=1001)
    p.set_defaults(func=cmd_classify)

    p = add("polycover", "interval cover of {t in (0,T): |P(t)| > eps * (positive part of P)(t)}")
    p.add_argument("--coeffs", type=_floats, required=True, help="c0,c1,... in increasing degree")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--verify", type=int, default=0, help="check the cover at this many sample points")
    p.set_defaults(func=cmd_polycover)

    p = add("mollify", "squeezing mollification of a lattice field")
    p.add_argument("--field", required=True, help="CSV with columns x,u or x,y,u on a tensor lattice")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--x0", type=_floats, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--kernel", default="bump")
    p.set_defaults(func=cmd_mollify)

    p = add("approx", "energies along a mollification schedule")
    _weight_flags(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--mode", choices=("i", "ii"), default="i")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--deltas", type=_floats, required=True)
    p.add_argument("--region", type=_region, default=Domain.interval(-1, 1))
    p.add_argument("--x0", type=_floats, default=None, help="star centre (default: region centre)")
    p.add_argument("--R", type=float, default=0.5)
    p.add_argument("--field", default=None, help="CSV field (default: hat function max(0, 1 - 2|t|))")
    p.add_argument("--resolution", type=int, default=4001)
    p.set_defaults(func=cmd_approx)

    p = add("minimize", "1D discrete minimiser with affine boundary values 0 and 1")
    _weight_flags(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--level", type=int, default=8)
    p.add_argument("--region", type=_region, default=Domain.interval(0, 1))
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_minimize)

    d = ConeConfig()
    p = add("gap", "cone-weight gap experiment on the square (-1,1)^2")
    p.add_argument("--tan-theta", type=float, default=math.tan(d.theta), help="tangent of the cone half-angle")
    p.add_argument("--kappa", type=float, default=d.kappa)
    p.add_argument("--p", type=float, default=d.p)
    p.add_argument("--q", type=float, default=d.q)
    p.add_argument("--scale", type=float, default=d.scale)
    p.add_argument("--mesh-levels", type=_ints, default=list(d.levels))
    p.add_argument("--grading", type=int, default=d.grading)
    p.add_argument("--single-phase", action="store_true")
    p.add_argument("--margin", type=float, default=d.margin)
    p.add_argument("--stability", type=float, default=d.stability)
    p.add_argument("--tol", type=float, default=d.tol)
    p.add_argument("--quadrature-level", type=int, default=10)
    p.add_argument("--oracle-cells", type=int, default=20000)
    p.set_defaults(func=cmd_gap)

    p = add("absence", "1D discrete minima plus mollified energies of the finest minimiser")
    _weight_flags(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--mesh-levels", type=_ints, default=[8, 9, 10])
    p.add_argument("--region", type=_region, default=Domain.interval(-1, 1))
    p.add_argument("--x0", type=_floats, default=None)
    p.add_argument("--R", type=float, default=0.5)
    p.add_argument("--stability", type=float, default=d.stability)
    p.add_argument("--tol", type=float, default=d.tol)
    p.set_defaults(func=cmd_absence)
    parser.epilog = "Values starting with '-' need the '=' form, as in --region=-1,1."
    for p in sub.choices.values():
        p.epilog = parser.epilog
    return parser


def _load_config(path: str) -> dict:
    with open(path, "rb") as fh:
        raw = fh.read()
    if path.endswith(".toml"):
        try:
            import tomllib
        except ImportError as exc:
            raise LavgapError("TOML configs need Python >= 3.11; use JSON") from exc
        data = tomllib.loads(raw.decode("utf-8"))
    else:
        data = json.loads(raw)
    if not isinstance(data, dict):
        raise LavgapError("a config file must hold a single object of flag values")
    return data


def _config_argv(data: dict) -> list[str]:
    # config entries become flags placed before the command line ones, which win
    argv = []
    for key, val in data.items():
        flag = "--" + str(key).replace("_", "-")
        if isinstance(val, bool):
            if val:
                argv.append(flag)
        elif isinstance(val, list):
            # the joined form keeps negative values from reading as flags
            argv.append(f"{flag}={','.join(str(v) for v in val)}")
        else:
            argv.append(f"{flag}={val}")
    return argv


def main(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config", default=None)
        known, _ = pre.parse_known_args(argv)
        if known.config:
            # config entries go right after the subcommand so that explicit flags win
            i = next((j for j, a in enumerate(argv) if a in SCHEMAS), len(argv) - 1)
            argv = argv[:i + 1] + _config_argv(_load_config(known.config)) + argv[i + 1:]
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage() + "lavgap: error: a subcommand is required")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except GateRefused as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (LavgapError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
