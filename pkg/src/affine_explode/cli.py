"""``affine-explode`` command line.

Every analysis writes a CSV table (17 significant digits) to stdout or
``--output``; ``--json`` writes one JSON document instead. Exit status is
0 on success, 1 on domain errors and 2 on configuration or usage errors.
Vectors are comma separated, e.g. ``--u -0.5,1``; indices are one-based.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .blowup import blow_up_time, blowup_rate, critical_exponents, in_S_T, trace_ST_boundary
from .equilibrium import enumerate_equilibria, eta
from .errors import AdmissibilityError, AffineExplodeError, ConfigError, DomainError, NotCanonicalizable
from .io import (
    LoadedModel,
    load_config_dict,
    model_from_dict,
    read_csv,
    read_csv_columns,
    validate_config,
    write_csv,
)
from .longterm import growth_rate, in_S_infinity, trace_Sinf_boundary
from .model import check_martingale, validate_admissible
from .oracle import manifold_shoot, mc_exponential_moment
from .presets import PRESETS, get_preset
from .riccati import integrate_ricV, transform_value
from .smile import rate_function, sigma_infinity, smile_at_T

VECTOR_FLAGS = ("--u", "--w", "--nu", "--x-grid")

EXIT_OK, EXIT_DOMAIN, EXIT_CONFIG = 0, 1, 2


@dataclass
class Table:
    header: list[str]
    rows: list[list[Any]]
    meta: dict[str, Any] = field(default_factory=dict)
    lines: list[str] | None = None  # plain-text rendering instead of CSV


# --------------------------------------------------------------------------
# argument helpers


def parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",") if x.strip()], dtype=np.float64)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated vector: {text!r}") from None


def parse_grid(text: str) -> np.ndarray:
    try:
        a, b, n = text.split(":")
        return np.linspace(float(a), float(b), int(n))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be a:b:n, got {text!r}") from None


def parse_horizon(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return np.inf
    try:
        T = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a horizon: {text!r}") from None
    if not T > 0:
        raise argparse.ArgumentTypeError("horizon must be positive")
    return T


def _param_value(text: str) -> Any:
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _join_vector_flags(argv: Sequence[str]) -> list[str]:
    # "--u -0.5,1" would otherwise be read as an unknown option
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok in VECTOR_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def _load(args: argparse.Namespace) -> LoadedModel:
    if args.model:
        return model_from_dict(load_config_dict(args.model), args.model)
    params = {}
    for item in args.param or []:
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = _param_value(v.strip())
    try:
        p = get_preset(args.preset, **params)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    except TypeError as exc:
        raise ConfigError(f"bad preset parameter: {exc}") from None
    return LoadedModel(p.model, p.spec, p.equity, f"preset:{p.name}")


def _need_equity(src: LoadedModel):
    if src.equity is None:
        raise ConfigError("this command needs theta and X0 (preset with an asset or config fields)")
    return src.equity


def _vec_cols(prefix: str, k: int) -> list[str]:
    return [f"{prefix}{i + 1}" for i in range(k)]


# --------------------------------------------------------------------------
# commands


def cmd_validate(args: argparse.Namespace) -> tuple[Table, int]:
    path = args.config or args.model
    if path:
        doc = load_config_dict(path)
        report = validate_config(doc)
        src = None if report else model_from_dict(doc, path)
    else:
        src = _load(args)
        report = validate_admissible(src.spec)
    rows: list[list[Any]] = [["CONSTRAINT", v.name, v.detail] for v in report.violations]
    lines = report.lines()
    code = EXIT_CONFIG if report else EXIT_OK
    if not report:
        rows.append(["OK", "admissible", ""])
        lines.append("OK admissible")
    if src is not None and src.equity is not None:
        mv = check_martingale(src.model, src.equity.theta)
        status = "holds" if mv.holds else "fails"
        rows.append(["MARTINGALE", status, mv.max_residual])
        lines.append(f"MARTINGALE {status}: max residual {mv.max_residual:.3g}")
        if not mv.holds:
            code = EXIT_DOMAIN
    return Table(["kind", "name", "detail"], rows, lines=lines), code


def cmd_equilibria(args: argparse.Namespace) -> tuple[Table, int]:
    src = _load(args)
    m = src.model.m
    eqs = enumerate_equilibria(src.model, args.w)
    rows = [[*e.nu, e.pattern_str(), *e.jacobian_diag, str(e.kind)] for e in eqs]
    return Table(_vec_cols("nu", m) + ["pattern"] + _vec_cols("eig", m) + ["kind"], rows), EXIT_OK


def _points_from_csv(path: str, model, w: np.ndarray | None, T: float | None) -> np.ndarray:
    text = Path(path).read_text()
    header, _ = read_csv(text)
    if any(h.startswith("u") and h[1:].isdigit() for h in header):
        return read_csv_columns(text, "u")
    if "radius" in header:
        if w is None:
            raise ConfigError("boundary CSV input needs --w")
        dirs = read_csv_columns(text, "ray_x")
        radii = read_csv_columns(text, "radius")[:, 0]
        if T is None or not np.isfinite(T):
            base = eta(model, w)
        else:
            base = np.zeros(model.m)
        keep = np.isfinite(radii)
        v = base + radii[keep, None] * dirs[keep]
        return np.column_stack([v, np.tile(w, (v.shape[0], 1))])
    raise ConfigError(f"{path}: expected u1..ud or ray_x1..,radius columns")


def cmd_membership(args: argparse.Namespace) -> tuple[Table, int]:
    src = _load(args)
    model = src.model
    if args.from_csv:
        us = _points_from_csv(args.from_csv, model, args.w, args.T)
    elif args.u is not None:
        us = args.u[None, :]
    else:
        raise ConfigError("membership needs --u or --from-csv")
    T = args.T if args.T is not None else np.inf
    rows = []
    for u in us:
        verdict = in_S_infinity(model, u) if not np.isfinite(T) else in_S_T(model, u, T, diagnostics=False)
        rows.append([*u, verdict.region])
    return Table(_vec_cols("u", model.d) + ["region"], rows, {"T": T}), EXIT_OK


def cmd_boundary(args: argparse.Namespace) -> tuple[Table, int]:
    src = _load(args)
    if args.region == "sinf":
        sec = trace_Sinf_boundary(src.model, args.w, rays=args.rays, tol=args.tol)
    else:
        if args.T is None or not np.isfinite(args.T):
            raise ConfigError("boundary st needs a finite --T")
        sec = trace_ST_boundary(src.model, args.w, args.T, rays=args.rays, tol=args.tol)
    m = src.model.m
    rows = [[*d, r, f] for d, r, f in zip(sec.rays, sec.radii, sec.flags)]
    meta = {"base_point": sec.base_point.tolist(), "w": sec.w.tolist()}
    return Table(_vec_cols("ray_x", m) + ["radius", "flag"], rows, meta), EXIT_OK


def cmd_explode(args: argparse.Namespace) -> tuple[Table, int]:
    src = _load(args)
    model = src.model
    rep = blow_up_time(model, args.u)
    rate = float("nan")
    if args.T is not None and np.isfinite(args.T) and src.equity is not None:
        verdict = in_S_T(model, args.u, args.T, diagnostics=False)
        if verdict.region == "boundary":
            rate = blowup_rate(model, args.u, src.equity.X0, args.T, verdict)
    if args.trajectory:
        v, w = model.split(args.u)
        horizon = rep.t_star if rep.finite else np.inf
        traj = integrate_ricV(model, v, w, horizon=horizon, record=True)
        Path(args.trajectory).write_text(traj.to_csv())
    comps = ";".join(str(i + 1) for i in rep.components)
    meta = {"quadrature_tail": rep.quadrature_tail, "indeterminate": rep.indeterminate}
    return Table(["tStar", "components", "rate"], [[rep.t_star, comps, rate]], meta), EXIT_OK


def cmd_critical(args: argparse.Namespace) -> tuple[Table, int]:
    src = _load(args)
    eq = _need_equity(src)
    ce = critical_exponents(src.model, eq.theta, args.T)
    return Table(["pStar", "qStar"], [[ce.p_star, ce.q_star]], {"T": args.T}), EXIT_OK


def cmd_growth(args: argparse.Namespace) -> tuple[Table, int]:
    src = _load(args)
    verdict = in_S_infinity(src.model, args.u)
    rate = growth_rate(src.model, args.u, verdict)
    return Table(_vec_cols("u", src.model.d) + ["region", "rate"], [[*args.u, verdict.region, rate]]), EXIT_OK


def cmd_smile(args: argparse.Namespace) -> tuple[Table, int]:
    src = _load(args)
    eq = _need_equity(src)
    xs = args.x_grid
    if np.isfinite(args.T):
        # extreme-strike asymptote sigma^2 T ~ slope |x| from the moment formula
        sa = smile_at_T(src.model, eq.theta, args.T)
        rows = [[x, (sa.right_slope if x >= 0 else sa.left_slope) * abs(x) / args.T] for x in xs]
        meta = {"T": args.T, "kind": "wing_asymptote"}
    else:
        rate = rate_function(src.model, eq.theta)
        rows = [[x, sigma_infinity(rate, x)] for x in xs]
        meta = {
            "T": "inf",
            "kind": "large_maturity",
            "p_minus": rate.p_minus,
            "p_plus": rate.p_plus,
            "essentially_smooth": rate.essentially_smooth,
        }
    return Table(["x", "sigma2"], rows, meta), EXIT_OK


def cmd_wings(args: argparse.Namespace) -> tuple[Table, int]:
    src = _load(args)
    eq = _need_equity(src)
    sa = smile_at_T(src.model, eq.theta, args.T)
    row = [sa.p_star, sa.q_star, sa.right_slope, sa.left_slope]
    return Table(["pstar", "qstar", "right_slope", "left_slope"], [row], {"T": args.T}), EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> tuple[Table, int]:
    src = _load(args)
    model = src.model
    if args.kind == "manifold":
        if args.w is None:
            raise ConfigError("oracle manifold needs --w")
        eqs = [e for e in enumerate_equilibria(model, args.w) if e.kind.label == "unstable" and e.kind.type_k == 1]
        if args.nu is not None:
            nus = [args.nu]
        elif eqs:
            nus = [e.nu for e in eqs]
        else:
            raise DomainError("no type-1 equilibrium at this w")
        rows = []
        for k, nu in enumerate(nus):
            rows += [[k + 1, *p] for p in manifold_shoot(model, args.w, nu)]
        return Table(["branch"] + _vec_cols("y", model.m), rows), EXIT_OK
    eq = _need_equity(src)
    if args.u is None:
        raise ConfigError("oracle mc needs --u")
    T = args.T if args.T is not None else 1.0
    est = mc_exponential_moment(model, args.u, eq.X0, T, n_paths=args.paths, dt=args.dt, seed=args.seed)
    exact = float(np.exp(transform_value(model, args.u, eq.X0, T).log_moment))
    diff = abs(est.mean - exact)
    row = [est.mean, est.stderr, exact, diff, diff / est.stderr if est.stderr > 0 else 0.0,
           est.n_paths, est.dt, est.seed, est.generator]
    header = ["mean", "stderr", "transform", "abs_diff", "z", "n_paths", "dt", "seed", "generator"]
    return Table(header, [row], {"T": T}), EXIT_OK


# --------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=sorted(PRESETS), default="heston", help="built-in model (default heston)")
    src.add_argument("--model", metavar="PATH", help="JSON model config")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="preset parameter override")
    p.add_argument("--json", action="store_true", help="emit one JSON document")
    p.add_argument("-o", "--output", metavar="PATH", help="write to a file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="affine-explode", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name: str, fn: Callable, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        _common(p)
        p.set_defaults(fn=fn)
        return p

    p = add("validate", cmd_validate, "check admissibility and the martingale condition")
    p.add_argument("config", nargs="?", help="JSON model config")

    p = add("equilibria", cmd_equilibria, "list the equilibria of the Riccati field")
    p.add_argument("--w", type=parse_vector, required=True)

    p = add("membership", cmd_membership, "classify exponents relative to S_inf or S_T")
    p.add_argument("--u", type=parse_vector)
    p.add_argument("--w", type=parse_vector, help="w for boundary CSV input")
    p.add_argument("--T", type=parse_horizon, help="finite horizon (default: long term)")
    p.add_argument("--from-csv", metavar="PATH", help="u1..ud columns or a boundary CSV")

    p = add("boundary", cmd_boundary, "trace a boundary section along rays")
    p.add_argument("region", choices=["sinf", "st"])
    p.add_argument("--w", type=parse_vector, required=True)
    p.add_argument("--T", type=parse_horizon)
    p.add_argument("--rays", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-6)

    p = add("explode", cmd_explode, "blow-up time of an exponent")
    p.add_argument("--u", type=parse_vector, required=True)
    p.add_argument("--T", type=parse_horizon, help="horizon for the boundary blow-up rate")
    p.add_argument("--trajectory", metavar="PATH", help="also write the Riccati trajectory CSV")

    p = add("critical", cmd_critical, "critical moment exponents at maturity T")
    p.add_argument("--T", type=parse_horizon, required=True)

    p = add("growth", cmd_growth, "long-term growth rate of an exponential moment")
    p.add_argument("--u", type=parse_vector, required=True)

    p = add("smile", cmd_smile, "implied variance asymptotics on an x grid")
    p.add_argument("--T", type=parse_horizon, required=True, help="maturity or 'inf'")
    p.add_argument("--x-grid", type=parse_grid, required=True, metavar="A:B:N")

    p = add("wings", cmd_wings, "critical exponents and wing slopes")
    p.add_argument("--T", type=parse_horizon, required=True)

    p = add("oracle", cmd_oracle, "independent checks")
    p.add_argument("kind", choices=["mc", "manifold"])
    p.add_argument("--u", type=parse_vector)
    p.add_argument("--w", type=parse_vector)
    p.add_argument("--nu", type=parse_vector)
    p.add_argument("--T", type=parse_horizon)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--dt", type=float)
    p.add_argument("--seed", type=int, default=0)
    return ap


def _jsonable(x: Any) -> Any:
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return x


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def run(argv: Sequence[str] | None = None) -> int:
    """Run the command line and return the exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_vector_flags(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        table, code = args.fn(args)
    except AdmissibilityError as exc:
        print("\n".join(exc.report.lines()), file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, NotCanonicalizable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, AffineExplodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if args.json:
        doc = {
            "command": args.command,
            "columns": table.header,
            "rows": _jsonable(table.rows),
            "meta": _jsonable(table.meta),
            "exit_code": code,
        }
        text = json.dumps(doc, indent=2) + "\n"
    elif table.lines is not None:
        text = "\n".join(table.lines) + "\n"
    else:
        text = write_csv(table.header, table.rows)
    _emit(text, args.output)
    return code


def main() -> None:
    sys.exit(run())
