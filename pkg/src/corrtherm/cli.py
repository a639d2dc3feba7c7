"""Command-line front end.

Subcommands: ``solve`` (one correlated-formation instance), ``rstates``
(reversible ladder), ``sweep`` (state sweep at fixed copies), ``limit``
(copy-number sweep and correlation scaling), ``majorize`` (feasibility /
minimal assisting work), ``hetero`` (ensemble solve or sampled convergence
experiment).

All numeric I/O uses dimensionless energies and kT work units; passing
``--temperature`` together with ``--energies`` (or ``--gap``) converts at
the parser boundary.  Results go to stdout, or to ``--output`` as CSV,
JSON, or a minimal SVG line plot; files are written atomically.  Exit
codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
import tempfile

from .asymptotics import SweepRecord, sweep_n, sweep_p
from .errors import CorrthermError
from .freeenergy import delta_f_local
from .hetero import (
    Atom,
    DistributionSpec,
    Ensemble,
    ensemble_cwork,
    resolve_dim_cap,
    theorem3_experiment,
)
from .lpsolver import cwork_lp
from .majorization import can_transform, min_work
from .qubit import rstar_ladder
from .spectrum import DiagonalState, LocalSystem

__all__ = ["run", "main"]

_COMMANDS = ("solve", "rstates", "sweep", "limit", "majorize", "hetero")


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".corrtherm-")
    try:
        with os.fdopen(fd, "w", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _render_csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _render_json(header, rows) -> str:
    payload = [dict(zip(header, row)) for row in rows]
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _render_svg(x_name, xs, series) -> str:
    """Minimal line plot: one polyline per series, framed axes, range labels."""
    width, height, pad = 640.0, 480.0, 50.0
    finite = [v for _, ys in series for v in ys if math.isfinite(v)]
    y_lo, y_hi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    if y_hi - y_lo < 1e-300:
        y_hi = y_lo + 1.0
    x_lo, x_hi = min(xs), max(xs)
    if x_hi - x_lo < 1e-300:
        x_hi = x_lo + 1.0

    def sx(x):
        return pad + (x - x_lo) / (x_hi - x_lo) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y_lo) / (y_hi - y_lo) * (height - 2 * pad)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width:g} {height:g}">',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" '
        f'height="{height - 2 * pad}" fill="none" stroke="black"/>',
        f'<text x="{pad}" y="{height - pad + 20}" font-size="12">{_fmt(x_lo)}</text>',
        f'<text x="{width - pad}" y="{height - pad + 20}" font-size="12" '
        f'text-anchor="end">{_fmt(x_hi)}</text>',
        f'<text x="{pad - 8}" y="{height - pad}" font-size="12" '
        f'text-anchor="end">{_fmt(y_lo)}</text>',
        f'<text x="{pad - 8}" y="{pad + 4}" font-size="12" text-anchor="end">{_fmt(y_hi)}</text>',
        f'<text x="{width / 2}" y="{height - 10}" font-size="12" '
        f'text-anchor="middle">{x_name}</text>',
    ]
    for k, (name, ys) in enumerate(series):
        pts = " ".join(
            f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys) if math.isfinite(y)
        )
        color = colors[k % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{color}" points="{pts}"/>')
        parts.append(
            f'<text x="{width - pad - 4}" y="{pad + 16 + 14 * k}" font-size="12" '
            f'text-anchor="end" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _emit(args, header, rows, x_field=None):
    fmt = args.format
    if args.output is None:
        print(_render_csv(header, rows), end="")
        return
    if fmt == "csv":
        _atomic_write(args.output, _render_csv(header, rows))
    elif fmt == "json":
        _atomic_write(args.output, _render_json(header, rows))
    elif fmt == "svg":
        x_field = x_field or header[0]
        xi = header.index(x_field)
        xs = [row[xi] for row in rows]
        series = [
            (name, [row[i] for row in rows])
            for i, name in enumerate(header)
            if name != x_field and all(isinstance(row[i], (int, float)) for row in rows)
        ]
        _atomic_write(args.output, _render_svg(x_field, xs, series))
    else:
        raise CorrthermError(f"unknown output format {fmt!r}")


# --------------------------------------------------------------------------
# argument plumbing


class _Usage(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]
    except ValueError as exc:
        raise _Usage(f"cannot parse number list {text!r}") from exc


def _ints(text: str) -> list[int]:
    return [int(round(v)) for v in _floats(text)]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrtherm",
        description="single-shot formation works of correlated states",
    )
    sub = parser.add_subparsers(dest="command", metavar="|".join(_COMMANDS))

    def common(p):
        p.add_argument("--config", help="key = value file with one section per command")
        p.add_argument("--output", help="write results to this path")
        p.add_argument("--format", choices=("csv", "json", "svg"), default="csv")
        p.add_argument("--temperature", type=float, help="convert energies by 1/T")

    p = sub.add_parser("solve", help="one correlated formation instance")
    common(p)
    p.add_argument("--probs", help="comma-separated occupation probabilities")
    p.add_argument("--levels", help="comma-separated energies (beta E unless --temperature)")
    p.add_argument("--energies", help="alias for --levels")
    p.add_argument("--beta-e0", type=float, help="two-level shortcut: gap")
    p.add_argument("--n", type=int, help="number of copies")
    p.add_argument("--mode", choices=("float", "exact"), default="float")

    p = sub.add_parser("rstates", help="reversible-state ladder")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--beta-e0", type=float)
    p.add_argument("--gap", type=float, help="energy gap (with --temperature)")

    p = sub.add_parser("sweep", help="state sweep at fixed copy number")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--beta-e0", type=float)
    p.add_argument("--p-points", type=int, default=101)
    p.add_argument("--p-list", help="explicit grid instead of --p-points")

    p = sub.add_parser("limit", help="copy-number sweep and correlation scaling")
    common(p)
    p.add_argument("--p", type=float)
    p.add_argument("--beta-e0", type=float)
    p.add_argument("--n-list", help="explicit ascending copy numbers")
    p.add_argument("--n-max", type=int, help="dyadic grid 1,2,4,... up to this")

    p = sub.add_parser("majorize", help="feasibility or minimal assisting work")
    common(p)
    p.add_argument("--src-probs")
    p.add_argument("--dst-probs")
    p.add_argument("--levels")
    p.add_argument("--dst-levels")
    p.add_argument("--w", type=float, help="check feasibility at this wit charge")
    p.add_argument("--min-work", action="store_true", help="bisect the minimal charge")
    p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("hetero", help="ensemble solve or convergence experiment")
    common(p)
    p.add_argument("--members", help="explicit two-level members 'p@gap,p@gap,...'")
    p.add_argument("--atoms", help="distribution atoms 'w:p:gap;w:p:gap'")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("exact", "class-grouped"), default="class-grouped")
    return parser


def _merge_config(args: argparse.Namespace) -> None:
    """Fill unset options from the config file; explicit flags win."""
    if not getattr(args, "config", None):
        return
    parser = configparser.ConfigParser()
    if not parser.read(args.config):
        raise CorrthermError(f"cannot read config file {args.config!r}")
    if args.command not in parser:
        return
    section = parser[args.command]
    for key, raw in section.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise _Usage(f"unknown config key {key!r} for {args.command}")
        current = getattr(args, attr)
        if current is None or current is False:
            if attr in ("n", "seed", "p_points", "n_max"):
                setattr(args, attr, int(raw))
            elif attr in ("p", "beta_e0", "gap", "temperature", "w", "tol"):
                setattr(args, attr, float(raw))
            elif attr == "min_work":
                setattr(args, attr, raw.strip().lower() in ("1", "true", "yes"))
            else:
                setattr(args, attr, raw)


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise _Usage(f"--{name.replace('_', '-')} is required")


def _system_from(args) -> LocalSystem:
    levels_text = args.levels or getattr(args, "energies", None)
    if levels_text is not None:
        levels = _floats(levels_text)
        if args.temperature:
            levels = [e / args.temperature for e in levels]
        return LocalSystem(tuple(sorted(levels)))
    if args.beta_e0 is not None:
        gap = args.beta_e0
        return LocalSystem((0.0, gap), quantum=gap if gap > 0 else None)
    raise _Usage("provide --levels or --beta-e0")


def _gap_from(args) -> float:
    if args.beta_e0 is not None:
        return args.beta_e0
    if getattr(args, "gap", None) is not None:
        if not args.temperature:
            raise _Usage("--gap needs --temperature")
        return args.gap / args.temperature
    raise _Usage("provide --beta-e0 (or --gap with --temperature)")


# --------------------------------------------------------------------------
# command bodies


def _cmd_solve(args) -> int:
    _require(args, "probs", "n")
    sys_ = _system_from(args)
    state = DiagonalState(tuple(_floats(args.probs)))
    sol, budget, _ = cwork_lp(state, sys_, args.n, mode=args.mode)
    info = budget.delta_f - args.n * delta_f_local(state, sys_)
    header = ["n", "formation", "extraction", "irreversible", "delta_f", "mutual_info", "q_max"]
    row = [
        args.n,
        budget.formation,
        budget.extraction,
        budget.irreversible,
        budget.delta_f,
        max(info, 0.0),
        sol.value,
    ]
    if args.output is None:
        for name, value in zip(header, row):
            print(f"{name} = {_fmt(value)}")
    else:
        _emit(args, header, [row])
    return 0


def _cmd_rstates(args) -> int:
    _require(args, "n")
    gap = _gap_from(args)
    ladder = rstar_ladder(args.n, gap)
    if args.output is None:
        for value in ladder.p_values:
            print(f"{value:.6f}")
        return 0
    header = ["index", "p_star", "log_partial_sum"]
    rows = [
        [i, float(p), float(z)]
        for i, (p, z) in enumerate(zip(ladder.p_values, ladder.log_partial_sums))
    ]
    _emit(args, header, rows, x_field="index")
    return 0


def _sweep_rows(records: list[SweepRecord]):
    header = list(SweepRecord.field_names())
    rows = [[getattr(rec, name) for name in header] for rec in records]
    return header, rows


def _cmd_sweep(args) -> int:
    _require(args, "n")
    gap = _gap_from(args)
    if args.p_list:
        grid = _floats(args.p_list)
    else:
        k = args.p_points
        grid = [i / (k - 1) for i in range(k)]
    header, rows = _sweep_rows(sweep_p(args.n, gap, grid))
    _emit(args, header, rows, x_field="p")
    return 0


def _cmd_limit(args) -> int:
    _require(args, "p")
    gap = _gap_from(args)
    if args.n_list:
        ns = _ints(args.n_list)
    elif args.n_max:
        ns = []
        n = 1
        while n <= args.n_max:
            ns.append(n)
            n *= 2
    else:
        raise _Usage("provide --n-list or --n-max")
    header, rows = _sweep_rows(sweep_n(args.p, gap, ns))
    _emit(args, header, rows, x_field="n")
    return 0


def _cmd_majorize(args) -> int:
    _require(args, "src_probs", "dst_probs", "levels")
    sys_src = _system_from(args)
    if args.dst_levels:
        levels = _floats(args.dst_levels)
        if args.temperature:
            levels = [e / args.temperature for e in levels]
        sys_dst = LocalSystem(tuple(sorted(levels)))
    else:
        sys_dst = sys_src
    src = DiagonalState(tuple(_floats(args.src_probs)))
    dst = DiagonalState(tuple(_floats(args.dst_probs)))
    if args.min_work:
        w = min_work(src, dst, sys_src, sys_dst, tol=args.tol)
        print(f"min_work = {_fmt(w)}")
    else:
        if args.w is None:
            raise _Usage("provide --w or --min-work")
        ok = can_transform(src, dst, sys_src, sys_dst, args.w)
        print(f"feasible = {'true' if ok else 'false'}")
    return 0


def _parse_members(text: str) -> Ensemble:
    members = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        p_text, gap_text = token.split("@")
        p = float(p_text)
        gap = float(gap_text)
        members.append(
            (
                LocalSystem((0.0, gap), quantum=gap if gap > 0 else None),
                DiagonalState((1.0 - p, p)),
            )
        )
    return Ensemble(tuple(members))


def _parse_atoms(text: str) -> DistributionSpec:
    atoms = []
    for token in text.split(";"):
        token = token.strip()
        if not token:
            continue
        w_text, p_text, gap_text = token.split(":")
        p = float(p_text)
        atoms.append(Atom(float(w_text), (1.0 - p, p), (0.0, float(gap_text))))
    kind = "point-mass" if len(atoms) == 1 else "finite-discrete"
    return DistributionSpec(kind, tuple(atoms))


def _cmd_hetero(args) -> int:
    cap = resolve_dim_cap(None)
    if args.members:
        ens = _parse_members(args.members)
        _, budget, _ = ensemble_cwork(ens, dim_cap=cap)
        header = ["n", "formation", "extraction", "irreversible", "delta_f"]
        row = [
            ens.size,
            budget.formation,
            budget.extraction,
            budget.irreversible,
            budget.delta_f,
        ]
        if args.output is None:
            for name, value in zip(header, row):
                print(f"{name} = {_fmt(value)}")
        else:
            _emit(args, header, [row])
        return 0
    if args.atoms:
        _require(args, "n")
        spec = _parse_atoms(args.atoms)
        result = theorem3_experiment(spec, args.n, args.seed, mode=args.mode, dim_cap=cap)
        header = ["n", "seed", "mode", "work_per_copy", "mean_delta_f", "gap"]
        row = [
            result.n,
            result.seed,
            result.mode,
            result.work_per_copy,
            result.mean_delta_f,
            result.gap,
        ]
        if args.output is None:
            for name, value in zip(header, row):
                print(f"{name} = {_fmt(value)}")
        else:
            _emit(args, header, [row])
        return 0
    raise _Usage("provide --members or --atoms")


_BODIES = {
    "solve": _cmd_solve,
    "rstates": _cmd_rstates,
    "sweep": _cmd_sweep,
    "limit": _cmd_limit,
    "majorize": _cmd_majorize,
    "hetero": _cmd_hetero,
}


def run(argv=None) -> int:
    """Parse and dispatch; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        _merge_config(args)
        return _BODIES[args.command](args)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except CorrthermError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
