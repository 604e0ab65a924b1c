"""Command-line driver.

Exit codes: 0 success (for ``analyze``: an FD exists), 2 the surface is not
an FD, 1 any error including malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classify import DEFAULT_TOL, Tolerances, fd_existence_verdict
from .coverage import run_coverage
from .csvio import write_csv
from .errors import FiducialError, NotAnFDError, SpecError
from .families import (
    AbsComposite,
    NormalBase,
    ParametricFamily,
    TranslationFamily,
    family_from_text,
    load_family,
)
from .fiducial import (
    SignedFiducialMeasure,
    composite_distribution_of_phi,
    composite_envelope,
    composite_reduce,
    confidence_limit_set,
    extract_fd,
    write_decomposition_csv,
)
from .figures import FIGURE_IDS, write_figure
from .multiobs import combine, combined_quantile
from .surface import DEFAULT_NODES, Grid, auto_grid, build_surface, symmetric_nodes

EXIT_OK, EXIT_ERROR, EXIT_NOT_FD = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Usage errors exit 1 so that 2 keeps meaning 'not an FD'."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def parse_grid(text: str) -> dict[str, tuple[float, float, int]]:
    """'x=min:max:n,theta=min:max:n' -> {'x': (min, max, n), 'theta': (...)}."""
    out = {}
    for part in text.split(","):
        key, sep, rng = part.partition("=")
        key = key.strip()
        if not sep or key not in ("x", "theta"):
            raise SpecError(f"bad grid component {part!r}", field="grid")
        bits = rng.split(":")
        if len(bits) != 3:
            raise SpecError(f"expected min:max:n, got {rng!r}", field=f"grid.{key}")
        try:
            lo, hi, n = float(bits[0]), float(bits[1]), int(bits[2])
        except ValueError as exc:
            raise SpecError(str(exc), field=f"grid.{key}") from exc
        if n < 3:
            raise SpecError("need at least 3 nodes", field=f"grid.{key}")
        if not hi > lo:
            raise SpecError("max must exceed min", field=f"grid.{key}")
        out[key] = (lo, hi, n)
    if set(out) != {"x", "theta"}:
        raise SpecError("grid needs both x and theta", field="grid")
    return out


def _family(args) -> ParametricFamily:
    if args.family is None:
        raise SpecError("--family is required for this command", field="family")
    text = args.family
    if Path(text).exists():
        return load_family(text)
    if text.lstrip().startswith("{"):
        return family_from_text(text)
    raise SpecError(f"no such family file: {text}", field="family")


def _grid(args, family: ParametricFamily) -> Grid:
    symmetric = isinstance(family, AbsComposite)
    if args.grid in (None, "auto"):
        return auto_grid(family, args.nodes, symmetric_theta=symmetric)
    g = parse_grid(args.grid)
    x = np.linspace(*g["x"][:2], g["x"][2])
    lo, hi, n = g["theta"]
    if symmetric and lo == -hi and n % 2 == 1:
        theta = symmetric_nodes(hi, n)
    else:
        theta = np.linspace(lo, hi, n)
    return Grid(x, theta)


def _tolerances(args) -> Tolerances:
    return Tolerances(
        eps_mono=args.tol_mono if args.tol_mono is not None else DEFAULT_TOL.eps_mono,
        eps_plateau=args.tol_plateau if args.tol_plateau is not None else DEFAULT_TOL.eps_plateau,
        delta_complete=args.tol_complete if args.tol_complete is not None else DEFAULT_TOL.delta_complete,
    )


def _surface(args):
    fam = _family(args)
    return build_surface(fam, _grid(args, fam))


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_analyze(args) -> int:
    verdict = fd_existence_verdict(_surface(args), _tolerances(args))
    report = verdict.to_json()
    _dump(_out(args) / "verdict.json", report)
    kinds = sorted({r.kind.value for r in verdict.intersections})
    print(f"fd_exists={verdict.fd_exists} non_intersecting={verdict.non_intersecting} "
          f"complete={verdict.complete} intersection_kinds={','.join(kinds) or '-'}")
    return EXIT_OK if verdict.fd_exists else EXIT_NOT_FD


def cmd_fd(args) -> int:
    fd = extract_fd(_surface(args), args.x0, _tolerances(args))
    path = fd.to_csv(_out(args) / "fd.csv")
    print(f"direction={fd.direction.value} wrote {path}")
    return EXIT_OK


def cmd_limits(args) -> int:
    cl = confidence_limit_set(_surface(args), args.x0, args.beta)
    cl.to_csv(_out(args) / "limits.csv")
    vals = [format(t, ".10g") for t in cl.theta_values]
    vals += [f"[{lo:.10g}, {hi:.10g}]" for lo, hi in cl.intervals]
    print(f"case_kind={cl.case_kind.value} limits={' '.join(vals)}")
    return EXIT_OK


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise SpecError(str(exc), field="obs") from exc


def cmd_combine(args) -> int:
    fam = _family(args)
    grid = _grid(args, fam)
    comb = combine(fam, _float_list(args.obs), grid.theta_nodes)
    out = _out(args)
    comb.to_csv(out / "combined.csv")
    meta = comb.metadata()
    meta["quantiles"] = {format(b, "g"): combined_quantile(comb, b) for b in (0.025, 0.5, 0.975)}
    _dump(out / "combined.json", meta)
    print(f"Z={comb.Z:.10g} median={meta['quantiles']['0.5']:.10g} levels={comb.refinement_levels}")
    return EXIT_OK


def cmd_composite(args) -> int:
    surface = _surface(args)
    if not isinstance(surface.family, AbsComposite):
        raise SpecError("composite needs an abs_x family", field="kind")
    out = _out(args)
    th = surface.theta_nodes
    m = SignedFiducialMeasure(th, surface.family.cdf(args.y, th), args.y)
    write_decomposition_csv(out / "decomposition.csv", m)
    comp = composite_distribution_of_phi(m)
    write_csv(out / "composite_phi.csv", ["phi", "m_hat"], [comp.phi_nodes, comp.values])
    composite_envelope(surface).to_csv(out / "envelope.csv")
    try:
        reduced, mu = composite_reduce(surface)
    except FiducialError as exc:
        print(f"not reducible: {exc}")
    else:
        phi = th[th.size // 2:]
        mu_vals = mu.values(args.y, phi)
        write_csv(out / "truncated_star.csv", ["phi", "m_bar", "mu_bar"], [phi, 1.0 - mu_vals, mu_vals])
        print(f"reducible: mu_bar(0|y)={mu.initial_value(args.y):.10g}")
    return EXIT_OK


def cmd_figure(args) -> int:
    files = write_figure(args.id, _out(args))
    print(f"wrote {len(files)} files")
    return EXIT_OK


def cmd_coverage(args) -> int:
    if args.family is not None:
        fam = _family(args)
        ok = (isinstance(fam, AbsComposite) and isinstance(fam.of, TranslationFamily)
              and isinstance(fam.of.base, NormalBase))
        if not ok:
            raise SpecError("coverage supports only abs_x of the normal translation family", field="kind")
    rep = run_coverage(args.beta, args.trials, args.phi_true, args.seed)
    (_out(args) / "coverage.json").write_text(rep.to_json(), encoding="utf-8")
    print(f"dual={rep.coverage_dual:.4f} (se {rep.se_dual:.4f}) "
          f"reciprocal={rep.coverage_reciprocal:.4f} (se {rep.se_reciprocal:.4f})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fidgeo", description="Fiducial surfaces: verdicts, distributions, limits.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--family", help="family spec JSON file (or inline JSON object)")
    p.add_argument("--grid", default="auto", help="x=min:max:n,theta=min:max:n or 'auto'")
    p.add_argument("--nodes", type=int, default=DEFAULT_NODES, help="nodes per axis for the auto grid")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="unsigned 64-bit RNG seed")
    p.add_argument("--tol-mono", type=float)
    p.add_argument("--tol-plateau", type=float)
    p.add_argument("--tol-complete", type=float)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("analyze", help="FD existence verdict").set_defaults(func=cmd_analyze)
    s = sub.add_parser("fd", help="fiducial distribution at x0")
    s.add_argument("--x0", type=float, required=True)
    s.set_defaults(func=cmd_fd)
    s = sub.add_parser("limits", help="confidence-limit set at x0 and beta")
    s.add_argument("--x0", type=float, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.set_defaults(func=cmd_limits)
    s = sub.add_parser("combine", help="combined FD from several observations")
    s.add_argument("--obs", required=True, help="comma-separated observations")
    s.set_defaults(func=cmd_combine)
    s = sub.add_parser("composite", help="composite decompositions at y")
    s.add_argument("--y", type=float, required=True)
    s.set_defaults(func=cmd_composite)
    s = sub.add_parser("figure", help="curve data for a figure")
    s.add_argument("--id", required=True, choices=FIGURE_IDS)
    s.set_defaults(func=cmd_figure)
    s = sub.add_parser("coverage", help="Monte Carlo coverage of upper limits for |theta|")
    s.add_argument("--beta", type=float, default=0.95)
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--phi-true", type=float, default=2.0)
    s.set_defaults(func=cmd_coverage)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NotAnFDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.command == "fd" and exc.verdict is not None:
            _dump(_out(args) / "verdict.json", exc.verdict.to_json())
        return EXIT_NOT_FD
    except (FiducialError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # last resort: never a traceback on bad input
        print(f"error: unexpected {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
