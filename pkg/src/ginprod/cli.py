"""Command-line front end.

Exit codes: 0 success, 2 invalid flags, 3 unsupported mode (for instance
exact arithmetic with three or more factors), 4 numerical convergence
failure.  The default working precision in bits may be set through the
``APP_PREC`` environment variable.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Sequence

import numpy as np

from .exactnum import ExactValue, to_float
from .kernels import (
    DensityGrid,
    density_complex,
    density_real,
    global_density,
    kernel_entries_real,
    local_density_origin,
    local_density_origin_complex,
    pre_kernel_real,
    two_point_real,
)
from .montecarlo import (
    McConfig,
    estimate_distribution,
    global_law_bin_average,
    histogram_real_global,
    l1_distance,
)
from .moments import UnsupportedModeError
from .probabilities import (
    IllConditionedError,
    expected_reals,
    pnull_fit,
    prob_all_real,
    real_count_distribution,
)
from .special import QuadratureError, SingularPointError
from .weights import ProductSpec

EXIT_FLAGS = 2
EXIT_UNSUPPORTED = 3
EXIT_CONVERGENCE = 4


class FlagError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise FlagError(message)


def _default_prec() -> int:
    raw = os.environ.get("APP_PREC")
    if not raw:
        return 106
    try:
        bits = int(raw)
    except ValueError:
        raise FlagError(f"APP_PREC must be an integer number of bits, got {raw!r}")
    if bits < 24:
        raise FlagError("APP_PREC must be at least 24 bits")
    return bits


def _nu_list(text: str) -> tuple[int, ...]:
    if text is None or text.strip() == "":
        return ()
    try:
        vals = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--nu expects a comma list of integers, got {text!r}")
    if any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("--nu entries must be nonnegative")
    return vals


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--seed expects an integer, got {text!r}")
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("--seed must fit in 64 unsigned bits")
    return v


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list of numbers, got {text!r}")


def _grid(text: str) -> list[float]:
    # start,stop,count  or an explicit list prefixed by '='
    if text.startswith("="):
        return _float_list(text[1:])
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("--grid is start,stop,count or =x1,x2,...")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --grid {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError("--grid count must be positive")
    return [float(v) for v in np.linspace(a, b, n)]


def _scale(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("--scale is N,reps")
    return _positive(parts[0]), _positive(parts[1])


def _common(p: argparse.ArgumentParser, N: bool = True, spec_flags: bool = True):
    if spec_flags:
        if N:
            p.add_argument("--N", type=_positive, required=True)
        p.add_argument("--m", type=_positive, default=2)
        p.add_argument("--nu", type=_nu_list, default=())
    p.add_argument("--format", choices=("json", "csv", "pretty"), default="json")
    p.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ginprod", description="Real eigenvalue statistics of Gaussian matrix products.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_ in (("prob", "distribution of the number of real eigenvalues"),
                        ("allreal", "probability that all eigenvalues are real"),
                        ("expect", "expected number of real eigenvalues")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--mode", choices=("exact", "numeric"), default="exact")
        p.add_argument("--prec", type=_positive, default=None)

    p = sub.add_parser("density", help="finite-N spectral density on a grid")
    _common(p)
    p.add_argument("--kind", choices=("real", "complex"), default="real")
    p.add_argument("--grid", type=_grid, default=_grid("-3,3,13"))
    p.add_argument("--ygrid", type=_grid, default=None, help="imaginary parts for --kind complex")

    p = sub.add_parser("kernel", help="kernel entries and two-point function at (x, y)")
    _common(p)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)

    p = sub.add_parser("local", help="large-N density near the origin")
    _common(p, N=False)
    p.add_argument("--kind", choices=("real", "complex"), default="real")
    p.add_argument("--grid", type=_grid, default=_grid("-2,2,9"))
    p.add_argument("--ygrid", type=_grid, default=None)

    p = sub.add_parser("global", help="limiting global laws")
    _common(p, N=False)
    p.add_argument("--kind", choices=("real", "complex"), default="real")
    p.add_argument("--grid", type=_grid, default=_grid("-1.2,1.2,25"))

    p = sub.add_parser("simulate", help="Monte Carlo estimate of the real-count distribution")
    _common(p)
    p.add_argument("--samples", type=_positive, default=100000)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--law", choices=("gaussian", "rademacher"), default="gaussian")

    p = sub.add_parser("table", help="reproduce a results table")
    _common(p, spec_flags=False)
    p.add_argument("--id", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--simulate", action="store_true")
    p.add_argument("--samples", type=_positive, default=1000000)
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--workers", type=_positive, default=1)

    p = sub.add_parser("figure", help="histogram of rescaled real eigenvalues and the limiting law")
    _common(p, spec_flags=False)
    p.add_argument("--id", type=int, choices=(1,), required=True)
    p.add_argument("--m", type=_positive, default=2)
    p.add_argument("--scale", type=_scale, default=(256, 200))
    p.add_argument("--bins", type=_positive, default=30)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--law", choices=("gaussian", "rademacher"), default="gaussian")

    p = sub.add_parser("pnullfit", help="fit log p_{N,0} against sqrt(N)")
    _common(p, N=False)
    p.add_argument("--range", dest="n_range", default="50,120",
                   help="lo,hi inclusive; even N only")
    p.add_argument("--prec", type=_positive, default=None)
    return parser


def _spec(args) -> ProductSpec:
    try:
        return ProductSpec(getattr(args, "N", 2), args.m, tuple(args.nu))
    except ValueError as exc:
        raise FlagError(str(exc))


def _num(v, prec: int = 53) -> float:
    return float(to_float(v, prec)) if isinstance(v, ExactValue) else float(v)


def _pretty_value(v, label: str) -> str:
    if isinstance(v, ExactValue):
        return f"{label} = {v.pretty()} ≈ {_num(v):.4f}"
    return f"{label} ≈ {float(v):.4f}"


def _rows_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _exact_or_none(v):
    return v.canonical() if isinstance(v, ExactValue) else None


def _cmd_prob(args, prec):
    spec = _spec(args)
    dist = real_count_distribution(spec, args.mode, prec)
    if args.format == "json":
        return json.dumps(dist.to_json(), indent=2)
    if args.format == "csv":
        return _rows_csv(["k", "exact", "float"],
                         [[e["k"], e["exact"] or "", e["float"]] for e in dist.to_json()["entries"]])
    return "; ".join(_pretty_value(dist.probabilities[k], f"p[{k}]") for k in sorted(dist.probabilities))


def _cmd_allreal(args, prec):
    spec = _spec(args)
    v = prob_all_real(spec, args.mode, prec)
    return _scalar_out(args, spec, v, f"p[{spec.N}]", prec)


def _cmd_expect(args, prec):
    spec = _spec(args)
    v = expected_reals(spec, args.mode, prec)
    return _scalar_out(args, spec, v, "E[#reals]", prec)


def _scalar_out(args, spec, v, label, prec):
    flt = _num(v, max(prec, 53))
    if args.format == "json":
        return json.dumps({"spec": {"N": spec.N, "m": spec.m, "nu": list(spec.nu)},
                           "mode": args.mode, "exact": _exact_or_none(v), "float": repr(flt)}, indent=2)
    if args.format == "csv":
        return _rows_csv(["N", "m", "nu", "exact", "float"],
                         [[spec.N, spec.m, " ".join(map(str, spec.nu)), _exact_or_none(v) or "", repr(flt)]])
    return _pretty_value(v, label)


def _grid_out(args, grid: DensityGrid):
    if args.format == "json":
        return json.dumps(grid.to_json(), indent=2)
    if args.format == "csv":
        return grid.to_csv()
    if grid.kind == "complex":
        return "\n".join(f"rho({complex(z).real:g}{complex(z).imag:+g}i) ≈ {v:.6g}"
                         for z, v in zip(grid.abscissae, grid.values))
    return "\n".join(f"rho({x:g}) ≈ {v:.6g}" for x, v in zip(grid.abscissae, grid.values))


def _mesh(args) -> list[complex]:
    ys = args.ygrid or _grid("0.1,2,5")
    if any(y <= 0 for y in ys):
        raise FlagError("--ygrid values must be positive")
    return [complex(x, y) for y in ys for x in args.grid]


def _cmd_density(args, prec):
    spec = _spec(args)
    if spec.N % 2:
        raise FlagError("densities are implemented for even N only")
    if args.kind == "real":
        return _grid_out(args, density_real(spec, args.grid))
    return _grid_out(args, density_complex(spec, _mesh(args)))


def _cmd_kernel(args, prec):
    spec = _spec(args)
    if spec.N % 2:
        raise FlagError("kernels are implemented for even N only")
    e = kernel_entries_real(spec, args.x, args.y)
    s_yx = pre_kernel_real(spec, args.y, args.x)
    rho2 = two_point_real(spec, args.x, args.y)
    rec = {"x": args.x, "y": args.y, "S": e.S, "S_yx": s_yx, "D": e.D, "I_tilde": e.I_tilde, "rho2": rho2}
    if args.format == "json":
        return json.dumps({"spec": {"N": spec.N, "m": spec.m, "nu": list(spec.nu)}, **rec}, indent=2)
    if args.format == "csv":
        return _rows_csv(list(rec), [[repr(v) for v in rec.values()]])
    return "; ".join(f"{k} = {v:.8g}" for k, v in rec.items())


def _cmd_local(args, prec):
    nu = tuple(args.nu)
    spec = ProductSpec(2, args.m, nu)
    if args.kind == "real":
        vals = [local_density_origin(args.m, spec.interior, x) for x in args.grid]
        grid = DensityGrid(args.grid, vals, None, args.m, spec.nu, "local-origin", "real")
    else:
        if not spec.is_square:
            raise UnsupportedModeError("the complex local density needs square factors")
        pts = _mesh(args)
        vals = [local_density_origin_complex(args.m, z) for z in pts]
        grid = DensityGrid(pts, vals, None, args.m, spec.nu, "local-origin", "complex")
    return _grid_out(args, grid)


def _cmd_global(args, prec):
    vals = [global_density(args.m, args.kind, x) for x in args.grid]
    grid = DensityGrid(args.grid, vals, None, args.m, (), "global", "real")
    return _grid_out(args, grid)


def _cmd_simulate(args, prec):
    spec = _spec(args)
    cfg = McConfig(spec, args.samples, args.seed, args.workers, args.law)
    emp = estimate_distribution(cfg)
    if args.format == "json":
        return json.dumps(emp.to_json(), indent=2)
    rows = [[k, emp.counts.get(k, 0), f"{emp.frequency(k):.6f}", f"{emp.interval(k)[0]:.6f}",
             f"{emp.interval(k)[1]:.6f}"] for k in emp.support()]
    if args.format == "csv":
        return _rows_csv(["k", "count", "frequency", "ci_low", "ci_high"], rows)
    return "; ".join(f"p^[{r[0]}] = {r[2]} [{r[3]}, {r[4]}]" for r in rows) + \
        f"; E^[#reals] = {emp.mean_reals():.4f}"


def table_entries(table_id: int, prec: int = 106) -> list[dict]:
    """Exact entries of the three reproduction tables as canonical strings."""
    out = []
    if table_id == 1:
        for N in range(2, 8):
            d2 = real_count_distribution(ProductSpec(N, 2))
            d1 = real_count_distribution(ProductSpec(N, 1))
            for k in sorted(d2.probabilities):
                v = d2.probabilities[k]
                out.append({"N": N, "k": k, "exact": v.canonical(), "float": f"{_num(v):.4f}",
                            "m1_float": f"{_num(d1.probabilities[k]):.4f}"})
    elif table_id == 2:
        for N in range(2, 8):
            v = expected_reals(ProductSpec(N, 2))
            w = expected_reals(ProductSpec(N, 1))
            out.append({"N": N, "exact": v.canonical(), "float": f"{_num(v):.4f}",
                        "m1_float": f"{_num(w):.4f}"})
    else:
        for N in range(2, 8):
            for nu in range(4):
                v = prob_all_real(ProductSpec(N, 2, (nu,)))
                out.append({"N": N, "nu": nu, "exact": v.canonical(), "float": f"{_num(v):.6g}"})
    return out


def _cmd_table(args, prec):
    entries = table_entries(args.id, prec)
    if args.simulate:
        if args.seed is None:
            raise FlagError("--simulate requires --seed")
        cache = {}
        for e in entries:
            nu = (e.get("nu", 0),)
            key = (e["N"], nu)
            if key not in cache:
                cfg = McConfig(ProductSpec(e["N"], 2, nu), args.samples, args.seed, args.workers)
                cache[key] = estimate_distribution(cfg)
            emp = cache[key]
            if args.id == 1:
                e["simulated"] = f"{emp.frequency(e['k']):.4f}"
            elif args.id == 2:
                e["simulated"] = f"{emp.mean_reals():.4f}"
            else:
                e["simulated"] = f"{emp.frequency(e['N']):.6g}"
    if args.format == "json":
        return json.dumps({"table": args.id, "entries": entries}, indent=2)
    header = list(entries[0])
    if args.format == "csv":
        return _rows_csv(header, [[e.get(h, "") for h in header] for e in entries])
    lines = []
    for e in entries:
        tag = f"N={e['N']}" + (f", k={e['k']}" if "k" in e else "") + (f", nu={e['nu']}" if "nu" in e else "")
        val = ExactValue.parse(e["exact"]).pretty()
        extra = "".join(f"  {h}={e[h]}" for h in header if h in ("m1_float", "simulated"))
        lines.append(f"{tag}: {val} ≈ {e['float']}{extra}")
    return "\n".join(lines)


def _cmd_figure(args, prec):
    N, reps = args.scale
    cfg = McConfig(ProductSpec(N, args.m), reps, args.seed, args.workers, args.law)
    hist = histogram_real_global(cfg, args.bins)
    law = global_law_bin_average(args.m, hist.meta["edges"])
    dist = l1_distance(hist)
    if args.format == "json":
        return json.dumps({"histogram": hist.to_json(), "law_bin_average": [float(v) for v in law],
                           "l1_band": dist}, indent=2)
    rows = [[repr(c), repr(v), repr(float(l))] for c, v, l in zip(hist.abscissae, hist.values, law)]
    if args.format == "csv":
        return _rows_csv(["x", "histogram", "law"], rows)
    return (f"m={args.m} N={N} reps={reps}: {hist.meta['total_reals']} real eigenvalues; "
            f"L1 on 0.1<=|x|<=0.9 = {dist:.4f}")


def _cmd_pnullfit(args, prec):
    try:
        lo, hi = (int(t) for t in args.n_range.split(","))
    except ValueError:
        raise FlagError("--range is lo,hi")
    Ns = [n for n in range(lo, hi + 1) if n % 2 == 0]
    a, b, c = pnull_fit(args.m, Ns, prec if args.prec else max(prec, 256))
    rec = {"m": args.m, "N": Ns, "sqrtN_coefficient": a, "constant": b, "inv_sqrtN_coefficient": c}
    if args.format == "json":
        return json.dumps(rec, indent=2)
    if args.format == "csv":
        return _rows_csv(["m", "sqrtN_coefficient", "constant", "inv_sqrtN_coefficient"],
                         [[args.m, repr(a), repr(b), repr(c)]])
    return f"log p[N,0] ≈ {a:.4f} sqrt(N) + {b:.4f} + {c:.4f}/sqrt(N)"


_COMMANDS = {
    "prob": _cmd_prob, "allreal": _cmd_allreal, "expect": _cmd_expect, "density": _cmd_density,
    "kernel": _cmd_kernel, "local": _cmd_local, "global": _cmd_global, "simulate": _cmd_simulate,
    "table": _cmd_table, "figure": _cmd_figure, "pnullfit": _cmd_pnullfit,
}


def _attach_negative_values(argv: Sequence[str]) -> list[str]:
    # argparse reads "--grid -2,2,5" as two flags; bind such values with "="
    out: list[str] = []
    for tok in argv:
        if (out and out[-1].startswith("--") and "=" not in out[-1]
                and len(tok) > 1 and tok[0] == "-" and (tok[1].isdigit() or tok[1] == ".")):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = _attach_negative_values(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        prec = getattr(args, "prec", None) or _default_prec()
        text = _COMMANDS[args.command](args, prec)
    except (FlagError, SingularPointError) as exc:
        print(f"ginprod: error: {exc}", file=stderr)
        return EXIT_FLAGS
    except UnsupportedModeError as exc:
        print(f"ginprod: unsupported: {exc}", file=stderr)
        return EXIT_UNSUPPORTED
    except (QuadratureError, IllConditionedError, np.linalg.LinAlgError, OverflowError) as exc:
        print(f"ginprod: convergence failure: {exc}", file=stderr)
        return EXIT_CONVERGENCE
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
