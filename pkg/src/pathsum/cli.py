"""Command-line interface: ``pathsum {compute,verify,bounds,graph}``.

Matrix files use 1-based indices (see :mod:`pathsum.matrix`), and so does
everything printed here.  Numbers are written in shortest round-trip form,
so output is byte-identical across runs.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 numeric
error.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from typing import Optional, Sequence

import numpy as np

from . import bounds as bnd
from .engine import PathSumEngine, propagator_array
from .errors import InputError, NumericError
from .graph import distance, max_degree, simple_cycles_at, simple_paths
from .matrix import load_spec
from .oracle import neumann_truncated, ode_residual, rk4_propagator
from .star import DEFAULT_NODES, LEFT, RIGHT

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3

DEFAULT_TOLERANCE = 1e-3


def fmt(x: float) -> str:
    """Shortest string that round-trips to the same double."""
    return repr(float(x))


def _parse_entry(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected R,C but got {text!r}")
    try:
        r, c = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two integers, got {text!r}") from None
    if r < 1 or c < 1:
        raise argparse.ArgumentTypeError("entry indices are 1-based")
    return r, c


def _parse_range(text: str) -> list[int]:
    """``"3"``, ``"0..6"`` (inclusive) or ``"1,4,9"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, a range a..b or a list, got {text!r}") from None
    if not values or min(values) < 0:
        raise argparse.ArgumentTypeError(f"distances must be non-negative, got {text!r}")
    return values


def _parse_coords(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _grid_size(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid size must be an integer, got {text!r}") from None
    if n < 2:
        raise argparse.ArgumentTypeError("grid size must be at least 2")
    return n


def _nonneg_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not x >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text!r}")
    return x


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pathsum", description="Time-ordered exponentials by path-sums.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_matrix=True):
        if with_matrix:
            sp.add_argument("--matrix", required=True, help="matrix JSON file")
            sp.add_argument("--grid", type=_grid_size, default=DEFAULT_NODES, help="number of grid nodes (default 400)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", default="-", help="output path, '-' for stdout (default)")

    c = sub.add_parser("compute", help="propagator entries on the grid")
    common(c)
    sel = c.add_mutually_exclusive_group()
    sel.add_argument("--entry", type=_parse_entry, help="1-based R,C")
    sel.add_argument("--all", action="store_true", help="every entry (default)")
    c.add_argument("--convention", choices=(RIGHT, LEFT), default=RIGHT, help="kernel convention")

    v = sub.add_parser("verify", help="compare the path-sum against independent oracles")
    common(v)
    v.add_argument("--tolerance", type=_nonneg_float, default=DEFAULT_TOLERANCE)
    v.add_argument("--substeps", type=int, default=8, help="RK4 steps per grid interval")

    b = sub.add_parser("bounds", help="evaluate a decay envelope")
    common(b, with_matrix=False)
    b.add_argument("--structure", required=True, choices=("tridiagonal", "path-graph", *bnd.STRUCTURES[1:]))
    b.add_argument("--h", type=_nonneg_float, required=True, help="entry bound h (beta*h for hypercube)")
    b.add_argument("--elapsed", type=_nonneg_float, required=True, help="t' - t")
    b.add_argument("--d", type=_parse_range, default=[0], help="distance, a..b range or list")
    b.add_argument("--coords", type=_parse_coords, help="lattice coordinates a1,...,ak")
    b.add_argument("--N", type=int, help="Bethe degree parameter or hypercube dimension")
    b.add_argument("--max-degree", type=int, help="maximum degree for the generic bound")

    g = sub.add_parser("graph", help="sparsity graph summary as JSON")
    g.add_argument("--matrix", required=True)
    g.add_argument("--grid", type=_grid_size, default=DEFAULT_NODES)
    g.add_argument("--out", default="-")
    return p


# ---------------------------------------------------------------------------


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def cmd_compute(args) -> tuple[int, str]:
    spec = load_spec(args.matrix)
    grid = spec.grid(args.grid)
    if args.entry is not None:
        r, c = args.entry
        if r > spec.n or c > spec.n:
            raise InputError(f"--entry {r},{c} is outside a {spec.n}x{spec.n} matrix")
        pairs = [(r - 1, c - 1)]
    else:
        pairs = [(r, c) for r in range(spec.n) for c in range(spec.n)]
    engine = PathSumEngine(spec, grid, convention=args.convention)
    if len(pairs) == 1:
        series = [engine.entry(*pairs[0]).values]
    else:
        table = engine.full()
        series = [table[r][c].values for r, c in pairs]
    ts = grid.nodes
    buf = io.StringIO()
    if args.format == "csv":
        if len(pairs) == 1:
            buf.write("t,value\n")
        else:
            buf.write("t," + ",".join(f"OE_{r + 1}_{c + 1}" for r, c in pairs) + "\n")
        for i, t in enumerate(ts):
            buf.write(",".join([fmt(t)] + [fmt(s[i]) for s in series]) + "\n")
        return EXIT_OK, buf.getvalue()
    items = [
        {"entry": [r + 1, c + 1], "series": [[float(t), float(v)] for t, v in zip(ts, s)]}
        for (r, c), s in zip(pairs, series)
    ]
    doc = items[0] if len(items) == 1 else {"entries": items}
    return EXIT_OK, _dump_json(doc)


def verify_report(spec, grid, substeps: int = 8) -> dict[str, float]:
    """Max-abs deviations of the path-sum from RK4, Neumann and the ODE."""
    U = propagator_array(PathSumEngine(spec, grid).full())
    rk = rk4_propagator(spec, grid, substeps).values
    nm = neumann_truncated(spec, grid).values
    return {
        "engine_vs_rk4": float(np.abs(U - rk).max()),
        "engine_vs_neumann": float(np.abs(U - nm).max()),
        "ode_residual": ode_residual(spec, grid, U),
    }


def cmd_verify(args) -> tuple[int, str]:
    spec = load_spec(args.matrix)
    grid = spec.grid(args.grid)
    if args.substeps < 1:
        raise InputError("--substeps must be positive")
    report = verify_report(spec, grid, args.substeps)
    passed = all(v <= args.tolerance for v in report.values())
    if args.format == "json":
        doc = dict(report, tolerance=args.tolerance, grid=args.grid, passed=passed)
        text = _dump_json(doc)
    else:
        lines = ["check,deviation,passed"]
        lines += [f"{k},{fmt(v)},{str(v <= args.tolerance).lower()}" for k, v in report.items()]
        text = "\n".join(lines) + "\n"
    return (EXIT_OK if passed else EXIT_VERIFY_FAILED), text


def _bound_query(args, d: int) -> bnd.BoundQuery:
    s = "tridiagonal" if args.structure == "path-graph" else args.structure
    if s == "lattice":
        if args.coords is None:
            raise InputError("--structure lattice needs --coords")
        return bnd.BoundQuery(s, args.h, args.elapsed, coords=args.coords)
    if s in ("bethe", "hypercube"):
        if args.N is None:
            raise InputError(f"--structure {s} needs --N")
        return bnd.BoundQuery(s, args.h, args.elapsed, d=d, degree=args.N)
    if s == "generic":
        if args.max_degree is None:
            raise InputError("--structure generic needs --max-degree")
        return bnd.BoundQuery(s, args.h, args.elapsed, d=d, degree=args.max_degree)
    return bnd.BoundQuery(s, args.h, args.elapsed, d=d)


def cmd_bounds(args) -> tuple[int, str]:
    ds = [None] if args.structure == "lattice" else args.d
    rows = []
    for d in ds:
        try:
            value = _bound_query(args, d or 0).evaluate()
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        rows.append((d, value))
    if args.format == "json":
        doc = {"structure": args.structure, "h": args.h, "elapsed": args.elapsed}
        if args.structure == "lattice":
            doc["coords"] = list(args.coords)
            doc["bound"] = rows[0][1]
        else:
            doc["rows"] = [{"d": d, "bound": v} for d, v in rows]
        return EXIT_OK, _dump_json(doc)
    if args.structure == "lattice":
        return EXIT_OK, "coords,bound\n" + ";".join(map(str, args.coords)) + "," + fmt(rows[0][1]) + "\n"
    return EXIT_OK, "d,bound\n" + "".join(f"{d},{fmt(v)}\n" for d, v in rows)


def graph_summary(spec, grid) -> dict:
    """JSON-ready description of the sparsity graph, 1-based."""
    from .graph import build_graph

    g = build_graph(spec, grid)
    n = g.n_vertices
    paths = {}
    dists = []
    for a in range(n):
        row = []
        for w in range(n):
            row.append(distance(g, a, w))
            if a != w:
                ps = simple_paths(g, None, a, w)
                if ps:
                    paths[f"{a + 1}->{w + 1}"] = [[v + 1 for v in p] for p in ps]
        dists.append(row)
    cycles = {}
    for a in range(n):
        cs = simple_cycles_at(g, None, a)
        if cs:
            cycles[str(a + 1)] = [[v + 1 for v in c] for c in cs]
    return {
        "n": n,
        "vertices": list(range(1, n + 1)),
        "edges": [[v + 1, w + 1] for v, w in g.edges],
        "max_degree": max_degree(g),
        "simple_paths": paths,
        "simple_cycles": cycles,
        "distances": dists,
    }


def cmd_graph(args) -> tuple[int, str]:
    spec = load_spec(args.matrix)
    return EXIT_OK, _dump_json(graph_summary(spec, spec.grid(args.grid)))


COMMANDS = {"compute": cmd_compute, "verify": cmd_verify, "bounds": cmd_bounds, "graph": cmd_graph}


def _write(out: str, text: str, stdout) -> None:
    if out == "-":
        stdout.write(text)
        stdout.flush()
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        code, text = COMMANDS[args.command](args)
        _write(args.out, text, stdout)
    except NumericError as exc:
        print(f"pathsum: numeric error: {exc}", file=stderr)
        return EXIT_NUMERIC
    except (InputError, ValueError) as exc:
        print(f"pathsum: input error: {exc}", file=stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"pathsum: cannot write output: {exc}", file=stderr)
        return EXIT_INPUT
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
