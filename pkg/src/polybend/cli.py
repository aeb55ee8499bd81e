"""Command-line front end.

Exit codes: 0 success, 1 failed assertion, 2 infeasible fiber, 64 usage error.
Every JSON report carries the run configuration and the package version;
floats are written with 17 significant digits so that they round-trip.
Timing goes to standard error so that standard output is reproducible.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .bending import (
    BendingSystem,
    caterpillar,
    flow,
    momentum_F,
    sample_fiber,
    snake,
    validate_diagonals,
)
from .config import DEFAULT, Tolerances
from .errors import InfeasibleFiber, PolybendError
from .fibers import classify_fiber, fiber_model_to_json
from .grassmann import fiber_graph, frame_from_json, frame_to_polygon, gc_pattern
from .polyspace import polygon_from_json, polygon_to_json
from .verify import SUITES

EXIT_OK, EXIT_FAIL, EXIT_INFEASIBLE, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)
    samples: int | None = None
    threads: int = 1

    def to_json(self) -> dict:
        out = asdict(self)
        out["tolerances"] = self.tolerances.as_dict()
        return out


# -- output ---------------------------------------------------------------------------


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float printed to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number, bool)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(payload: dict, args, text: str | None = None) -> None:
    out = text if text is not None else dumps(payload) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


# -- argument parsing -----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x != ""]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _system(args) -> BendingSystem:
    r = _floats(args.r)
    n = len(r)
    if n < 4:
        raise UsageError(f"bending systems need n >= 4 sides (got {n})")
    if any(not math.isfinite(x) or x <= 0 for x in r):
        raise UsageError("side lengths must be positive")
    if getattr(args, "diagonals", None):
        pairs = []
        for chunk in args.diagonals.split(";"):
            parts = chunk.replace("-", ",").split(",")
            if len(parts) != 2:
                raise UsageError(f"diagonal {chunk!r} must be written i,j (1-based vertices)")
            pairs.append((int(parts[0]), int(parts[1])))
        try:
            ds = validate_diagonals(n, pairs)
        except PolybendError as exc:
            raise UsageError(str(exc)) from None
    elif getattr(args, "snake", False):
        ds = snake(n)
    else:
        ds = caterpillar(n)
    return BendingSystem(np.array(r), ds)


def _fiber_value(args, sys: BendingSystem) -> np.ndarray:
    if args.c is None:
        raise UsageError("--c is required")
    c = _floats(args.c)
    if len(c) != len(sys.diags):
        raise UsageError(f"--c needs {len(sys.diags)} values (one per diagonal), got {len(c)}")
    if any(x < 0 or not math.isfinite(x) for x in c):
        raise UsageError("momentum values must be finite and nonnegative")
    return np.array(c)


def _tolerances(args) -> Tolerances:
    overrides = {}
    for item in getattr(args, "tol", None) or []:
        key, _, value = item.partition("=")
        if key not in DEFAULT.as_dict() or not value:
            raise UsageError(f"unknown tolerance override {item!r}; keys: {', '.join(DEFAULT.as_dict())}")
        overrides[key] = float(value)
    return DEFAULT.with_overrides(**overrides)


def _threads(args) -> int:
    requested = getattr(args, "threads", None) or 1
    cap = os.environ.get("POLYBEND_THREADS")
    if cap:
        try:
            requested = min(requested, max(1, int(cap))) if getattr(args, "threads", None) else max(1, int(cap))
        except ValueError:
            raise UsageError(f"POLYBEND_THREADS must be an integer, got {cap!r}") from None
    return requested


def _config(args, samples=None) -> RunConfig:
    return RunConfig(seed=int(getattr(args, "seed", 0) or 0), tolerances=_tolerances(args),
                     samples=samples, threads=_threads(args))


def _add_system_flags(p: argparse.ArgumentParser, need_c: bool = True) -> None:
    p.add_argument("--r", required=True, help="side lengths, comma separated")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--diagonals", help="1-based diagonals 'i,j;i,j;...'")
    g.add_argument("--caterpillar", action="store_true", help="fan of diagonals from vertex 1 (default)")
    g.add_argument("--snake", action="store_true", help="zig-zag triangulation")
    if need_c:
        p.add_argument("--c", nargs="?", const="", help="momentum values F = |d|^2/2, comma separated")
    p.add_argument("--tol", action="append", metavar="KEY=VALUE", help="tolerance override")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polybend", description="Bending flows on spaces of 3D polygons.")
    parser.add_argument("--version", action="version", version=f"polybend {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("classify", help="classify a fiber F = c")
    _add_system_flags(p)
    p.add_argument("--out")

    p = sub.add_parser("verify", help="run a property suite")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=9)
    p.add_argument("--threads", type=int)
    p.add_argument("--tol", action="append", metavar="KEY=VALUE")
    p.add_argument("--out")

    p = sub.add_parser("flow", help="apply a bending flow to a polygon")
    p.add_argument("--in", dest="infile", required=True, help="polygon JSON file ('-' for stdin)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--diagonals")
    g.add_argument("--caterpillar", action="store_true")
    g.add_argument("--snake", action="store_true")
    p.add_argument("--k", type=int, required=True, help="0-based diagonal index")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--normalized", action="store_true")
    p.add_argument("--tol", action="append", metavar="KEY=VALUE")
    p.add_argument("--out")

    p = sub.add_parser("sample", help="sample polygons on a fiber")
    _add_system_flags(p)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("gc", help="ladder graph of a caterpillar fiber, or the pattern of a frame")
    p.add_argument("--r")
    p.add_argument("--c", nargs="?", const="")
    p.add_argument("--frame", help="2-frame JSON file: print its pattern and polygon instead")
    p.add_argument("--dot", action="store_true", help="emit Graphviz DOT")
    p.add_argument("--tol", action="append", metavar="KEY=VALUE")
    p.add_argument("--out")
    return parser


# -- commands -------------------------------------------------------------------------


def cmd_classify(args) -> int:
    sys_ = _system(args)
    c = _fiber_value(args, sys_)
    cfg = _config(args)
    model = classify_fiber(sys_, c, cfg.tolerances)
    payload = fiber_model_to_json(model)
    payload.update({"r": sys_.r.tolist(), "diagonals": [[i - 1, j - 1] for i, j in sys_.diags],
                    "c": c.tolist(), "config": cfg.to_json(), "version": __version__})
    _emit(payload, args)
    return EXIT_OK


def cmd_verify(args) -> int:
    fn = SUITES[args.suite]
    if args.n < 4:
        raise UsageError("--n must be at least 4")
    kwargs = {"n": args.n, "seed": args.seed, "tol": _tolerances(args), "workers": _threads(args)}
    if args.samples is not None:
        if args.samples < 0:
            raise UsageError("--samples must be nonnegative")
        kwargs["samples"] = args.samples
    if args.suite in ("isotropy", "gc"):
        kwargs["grid"] = args.grid
    start = time.perf_counter()
    rep = fn(**kwargs)
    elapsed = time.perf_counter() - start
    cfg = _config(args, samples=kwargs.get("samples"))
    payload = rep.to_json()
    payload.update({"config": cfg.to_json(), "version": __version__})
    _emit(payload, args)
    print(f"{args.suite}: {'PASS' if rep.passed else 'FAIL'} in {elapsed:.3f} s", file=sys.stderr)
    if not rep.passed:
        first = next(c for c in rep.checks if not c.passed)
        print(f"first failure: {first.name}: {first.failure}", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _load_json(path: str):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read JSON from {path}: {exc}") from None


def cmd_flow(args) -> int:
    tol = _tolerances(args)
    try:
        u = polygon_from_json(_load_json(args.infile), tol)
    except PolybendError as exc:
        raise UsageError(f"invalid polygon: {exc}") from None
    args.r = ",".join(repr(float(x)) for x in u.r)
    sys_ = _system(args)
    if not 0 <= args.k < len(sys_.diags):
        raise UsageError(f"--k must be in 0..{len(sys_.diags) - 1}")
    v = flow(sys_, u, args.k, args.t, normalized=args.normalized, tol=tol)
    payload = polygon_to_json(v)
    payload.update({"F": momentum_F(sys_, v).tolist(), "closing_defect": v.closing_defect(),
                    "config": _config(args).to_json(), "version": __version__})
    _emit(payload, args)
    return EXIT_OK


def cmd_sample(args) -> int:
    sys_ = _system(args)
    c = _fiber_value(args, sys_)
    if args.count < 0:
        raise UsageError("--count must be nonnegative")
    cfg = _config(args, samples=args.count)
    polys = sample_fiber(sys_, c, args.count, args.seed, cfg.tolerances)
    measured = [momentum_F(sys_, u) for u in polys]
    payload = {
        "polygons": [polygon_to_json(u) for u in polys],
        "c": c.tolist(),
        "max_c_error": max((float(np.abs(m - c).max(initial=0.0)) for m in measured), default=0.0),
        "config": cfg.to_json(),
        "version": __version__,
    }
    _emit(payload, args)
    return EXIT_OK


def cmd_gc(args) -> int:
    tol = _tolerances(args)
    if args.frame:
        try:
            f = frame_from_json(_load_json(args.frame), tol)
        except PolybendError as exc:
            raise UsageError(f"invalid frame: {exc}") from None
        pat = gc_pattern(f)
        payload = {"mu": [pat.mu[k, : min(k + 1, 2)].tolist() for k in range(f.n)],
                   "polygon": polygon_to_json(frame_to_polygon(f, tol)),
                   "config": _config(args).to_json(), "version": __version__}
        _emit(payload, args)
        return EXIT_OK
    if args.r is None:
        raise UsageError("gc needs --r and --c, or --frame")
    sys_ = _system(args)
    c = _fiber_value(args, sys_)
    graph = fiber_graph(sys_.r, c, sys_, tol)
    if args.dot:
        _emit({}, args, text=graph.to_dot())
    else:
        payload = graph.to_json()
        payload.update({"config": _config(args).to_json(), "version": __version__})
        _emit(payload, args)
    return EXIT_OK


COMMANDS = {"classify": cmd_classify, "verify": cmd_verify, "flow": cmd_flow,
            "sample": cmd_sample, "gc": cmd_gc}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleFiber as exc:
        face = f" (face {exc.face})" if exc.face is not None else ""
        print(f"infeasible fiber{face}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except PolybendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
