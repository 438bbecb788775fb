import argparse
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from dotenv import load_dotenv
from pydantic import ValidationError

from core.config import settings
from core.exceptions import (
    BoundaryZeroError,
    ConvergenceError,
    DepthExhaustedError,
    NotARootError,
    ResonanceError,
    SingularGammaError,
    WindingResolutionError,
)
from helpers import io_helpers
from helpers.logging_helper import configure_logging
from schemas.configuration import CenterConfiguration, StrengthTuple
from schemas.optimize import ParetoPoint
from schemas.roots import SearchWindow
from schemas.run import RunConfig
from services import (
    bounds_service,
    exppoly_service,
    geometry_service,
    optimize_service,
    rootfinder_service,
    tetra_service,
)

logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SOLVER = 2
EXIT_CERTIFICATE = 3
EXIT_ENVELOPE = 4

SOLVER_ERRORS = (
    DepthExhaustedError,
    BoundaryZeroError,
    WindingResolutionError,
    SingularGammaError,
    NotARootError,
    ConvergenceError,
)

DEFAULT_WINDOW = "-20,20,-20,1"

Result = Tuple[str, int]


def exit_code_for(error: Exception) -> int:
    if isinstance(error, SOLVER_ERRORS):
        return EXIT_SOLVER
    return EXIT_INPUT


def _threads(run: RunConfig) -> Optional[int]:
    return run.threads or None


def _window(run: RunConfig) -> SearchWindow:
    return run.window or SearchWindow.parse(DEFAULT_WINDOW)


def _load(run: RunConfig) -> Tuple[StrengthTuple, CenterConfiguration]:
    alpha, config = io_helpers.load_configuration(run.input)
    geometry_service.check_lengths(alpha, config)
    return alpha, config


def _certificate_cells(point: ParetoPoint, config: CenterConfiguration, tol: float) -> Tuple[Optional[float], Optional[float]]:
    certificate = point.certificate
    if certificate is None:
        try:
            certificate = optimize_service.certify(point.alpha, config, point.k, "ray", tol)
        except NotARootError:
            return None, None
    return certificate.residual, certificate.xi


def _multiplicity(point: ParetoPoint, config: CenterConfiguration) -> int:
    try:
        return max(rootfinder_service.multiplicity_at(point.alpha, config, point.k), 1)
    except (BoundaryZeroError, WindingResolutionError, SingularGammaError):
        return point.multiplicity


def _refine_all(
    config: CenterConfiguration,
    points: Sequence[Optional[ParetoPoint]],
    tol: float,
    threads: Optional[int],
) -> List[Optional[ParetoPoint]]:
    """Newton refinement per bin; a bin keeps its sampled point when refinement fails."""

    def refine(point: Optional[ParetoPoint]) -> Optional[ParetoPoint]:
        if point is None or not point.alpha.is_real:
            return point
        try:
            refined, _ = optimize_service.refine_extremal(config, point.f, point.alpha, point.r, tol)
        except (ConvergenceError, NotARootError) as e:
            logger.warning("Refinement at f=%.6g kept the sampled point: %s", point.f, e)
            return point
        return refined if refined.r <= point.r + 1e-6 else point

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(refine, points))


def _unachievable_bins(config: CenterConfiguration, f_bins: Sequence[float], width: float) -> List[bool]:
    f_max = max(abs(f) for f in f_bins) + width
    candidates = geometry_service.unachievable_frequency_candidates(config, f_max)
    return [any(abs(abs(f) - c) <= 0.5 * width for c in candidates) for f in f_bins]


def _tetra_edge(config: CenterConfiguration) -> Optional[float]:
    if config.n == 4 and geometry_service.is_equidistant(config):
        return config.diameter
    return None


def _emit(run: RunConfig, header: List[str], rows: List[list], footer: Sequence[str], summary: Dict) -> str:
    if run.format == "csv":
        return io_helpers.render_csv(header, rows, footer)
    records = [
        {name: (value if not isinstance(value, float) or math.isfinite(value) else None) for name, value in zip(header, row)}
        for row in rows
    ]
    return io_helpers.render_json({"rows": records, "summary": summary})


# Subcommands


def run_solve(run: RunConfig) -> Result:
    alpha, config = _load(run)
    roots = rootfinder_service.resonances(alpha, config, _window(run), _threads(run))
    if run.format == "csv":
        rows = [[r.k.real, r.k.imag, r.multiplicity, r.residual] for r in roots]
        return io_helpers.render_csv(["re", "im", "mult", "residual"], rows), EXIT_OK
    return io_helpers.render_json({"roots": [r.to_json() for r in roots]}), EXIT_OK


def run_frontier(run: RunConfig) -> Result:
    _, config = _load(run)
    f_bins = list(run.f_bins)
    points = optimize_service.sample_frontier(
        config, run.sampling, f_bins, run.budget, run.seed, _threads(run), run.r_max,
    )
    if run.refine and run.sampling == "real":
        points = _refine_all(config, points, run.tol, _threads(run))
    marked = _unachievable_bins(config, f_bins, run.bin_width) if run.sampling == "real" else [False] * len(f_bins)
    edge = _tetra_edge(config)

    header = ["f", "r"] + [f"alpha_{j + 1}" for j in range(config.n)] + ["k_re", "k_im", "mult", "cert_residual", "cert_xi"]
    if edge is not None:
        header.append("r_oracle")
    header.append("status")

    rows: List[list] = []
    deviations: List[float] = []
    for f, point, unachievable in zip(f_bins, points, marked):
        status = "unachievable" if unachievable else ("ok" if point is not None else "none")
        if point is None:
            row = [f, None] + [None] * config.n + [None, None, None, None, None]
        else:
            residual, xi = _certificate_cells(point, config, run.tol)
            row = (
                [f, point.r]
                + io_helpers.alpha_cells(point.alpha_columns())
                + [point.k.real, point.k.imag, _multiplicity(point, config), residual, xi]
            )
        if edge is not None:
            oracle = tetra_service.rmin_oracle(f, edge)
            row.append(oracle)
            if oracle is not None and point is not None:
                deviations.append(abs(point.r - oracle))
        row.append(status)
        rows.append(row)

    footer: List[str] = []
    summary: Dict = {"bins": len(f_bins), "achieved": sum(p is not None for p in points)}
    if edge is not None and deviations:
        summary["max_abs_r_minus_oracle"] = max(deviations)
        footer.append(f"max |r - r_oracle| = {io_helpers.format_number(max(deviations))} over {len(deviations)} bins")
    return _emit(run, header, rows, footer, summary), EXIT_OK


def _nearest_root(alpha: StrengthTuple, config: CenterConfiguration, hint: complex, threads: Optional[int]) -> complex:
    half = 0.5 * (1.0 + abs(hint))
    window = SearchWindow(
        re_min=hint.real - half, re_max=hint.real + half, im_min=hint.imag - half, im_max=hint.imag + half,
    )
    roots = rootfinder_service.find_zeros(alpha, config, window, threads)
    if not roots:
        raise NotARootError(f"No zero within {half:.3g} of the hint {hint}.")
    return min(roots, key=lambda r: abs(r.k - hint)).k


def run_certify(run: RunConfig) -> Result:
    alpha, config = _load(run)
    if run.k is not None:
        k = run.k
    elif run.hint is not None:
        k = _nearest_root(alpha, config, run.hint, _threads(run))
    else:
        raise NotARootError("Certification needs --k or --hint.")
    certificate = optimize_service.certify(alpha, config, k, run.mode, run.tol)
    payload = {"k": {"re": k.real, "im": k.imag}, **certificate.to_json()}
    if certificate.vanishing:
        payload["persistence"] = [
            p.model_dump() for p in optimize_service.persistence_check(alpha, config, k, seed=run.seed)
        ]
    return io_helpers.render_json(payload), EXIT_OK if certificate.passed else EXIT_CERTIFICATE


def _seed_decay(alpha: StrengthTuple, config: CenterConfiguration, f: float, r_max: float, threads: Optional[int]) -> float:
    """Decay of the seed tuple's zero closest to Re k = f."""
    window = SearchWindow(re_min=f - 1.0, re_max=f + 1.0, im_min=-r_max, im_max=0.25)
    roots = rootfinder_service.resonances(alpha, config, window, threads)
    if not roots:
        raise ConvergenceError(f"The seed tuple has no resonance near Re k = {f}.")
    return max(-min(roots, key=lambda r: abs(r.k.real - f)).k.imag, 0.0)


def run_refine(run: RunConfig) -> Result:
    alpha, config = _load(run)
    r0 = run.r if run.r is not None else _seed_decay(alpha, config, run.f, run.r_max, _threads(run))
    point, _ = optimize_service.refine_extremal(config, run.f, alpha, r0, run.tol)
    return io_helpers.render_json(point.to_json()), EXIT_OK


def _family_deviation(point: ParetoPoint, optimum) -> float:
    """Distance to the optimal family: all four entries at a⋆, or (nmin2) any two of them."""
    deviations = sorted(
        math.inf if a is None else abs(a - optimum.alpha_star) for a in point.alpha_columns()
    )
    return deviations[-1] if optimum.branch == "nmin4" else deviations[1]


def run_tetra_check(run: RunConfig) -> Result:
    config = tetra_service.tetra_vertices(run.edge)
    f_bins = list(run.f_bins)
    points = optimize_service.sample_frontier(config, "real", f_bins, run.budget, run.seed, _threads(run), run.r_max)
    points = _refine_all(config, points, run.tol, _threads(run))

    header = ["f", "r_oracle", "r_solver", "max|dalpha|", "cert_residual"]
    rows: List[list] = []
    deviations: List[float] = []
    curve, _ = tetra_service.frontier_curve(f_bins, run.edge)
    for f, point, r_curve in zip(f_bins, points, curve):
        oracle = None if math.isnan(r_curve) else float(r_curve)
        if oracle is None or f == 0.0 or point is None:
            rows.append([f, oracle, point.r if point else None, None, None])
            continue
        optimum = tetra_service.optimal_alpha_oracle(f, run.edge)
        residual, _ = _certificate_cells(point, config, run.tol)
        rows.append([f, oracle, point.r, _family_deviation(point, optimum), residual])
        deviations.append(abs(point.r - oracle))

    footer: List[str] = []
    summary: Dict = {"edge": run.edge, "bins": len(f_bins)}
    if deviations:
        summary["max_abs_r_minus_oracle"] = max(deviations)
        footer.append(f"max |r_solver - r_oracle| = {io_helpers.format_number(max(deviations))} over {len(deviations)} bins")
    return _emit(run, header, rows, footer, summary), EXIT_OK


def run_bounds(run: RunConfig) -> Result:
    alpha, config = _load(run)
    report = bounds_service.check_envelope(alpha, config, _window(run), _threads(run))
    return io_helpers.render_json(report.to_json()), EXIT_OK if report.passed else EXIT_ENVELOPE


def run_expand(run: RunConfig) -> Result:
    alpha, config = _load(run)
    reduced, sub = geometry_service.reduce(alpha, config)
    ep = exppoly_service.expand(reduced, sub)
    payload = {"n": ep.n, "nu": ep.nu, "scale": exppoly_service.determinant_scale(ep.n), **ep.to_json()}
    if ep.nu >= 1:
        payload["bounds"] = exppoly_service.strip_bounds(ep, reduced, sub).model_dump()
    return io_helpers.render_json(payload), EXIT_OK


COMMANDS: Dict[str, Callable[[RunConfig], Result]] = {
    "solve": run_solve,
    "frontier": run_frontier,
    "certify": run_certify,
    "refine": run_refine,
    "tetra-check": run_tetra_check,
    "bounds": run_bounds,
    "expand": run_expand,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resonances",
        description="Resonances of point interactions in R³: solve, frontier, certify, refine, tetra-check, bounds, expand.",
    )
    parser.add_argument("--log-level", default=None, help="Overrides LOG_LEVEL.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", help="JSON (or YAML) file with centers and alpha.")
        p.add_argument("--output", help="Output file; stdout when omitted.")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--threads", type=int, default=settings.THREADS, help="0 means available parallelism.")
        p.add_argument("--tol", type=float, default=settings.CERT_TOL)
        p.add_argument("--seed", type=int, default=settings.SEED)

    def sampling(p: argparse.ArgumentParser) -> None:
        p.add_argument("--f-range", default="0,2", help="f_min,f_max")
        p.add_argument("--grid", type=int, default=100, help="Number of frequency bins.")
        p.add_argument("--budget", type=int, default=10_000, help="Total sample budget over all bins.")
        p.add_argument("--r-max", type=float, default=4.0)

    p = sub.add_parser("solve", help="All resonances in a window.")
    common(p)
    p.add_argument("--window", default=DEFAULT_WINDOW, help="re_min,re_max,im_min,im_max")

    p = sub.add_parser("frontier", help="Minimal decay per frequency bin.")
    common(p)
    sampling(p)
    p.add_argument("--class", dest="sampling", choices=("real", "dissipative"), default="real")
    p.add_argument("--refine", action="store_true", help="Newton-refine every sampled point (real class).")

    p = sub.add_parser("certify", help="First-minor optimality certificate at a resonance.")
    common(p)
    p.add_argument("--k", help="Resonance as re,im.")
    p.add_argument("--hint", help="Start for a nearest-zero search when --k is not given.")
    p.add_argument("--mode", choices=("ray", "line"), default="ray")

    p = sub.add_parser("refine", help="Newton refinement of a minimal-decay point.")
    common(p)
    p.add_argument("--f", type=float, required=True)
    p.add_argument("--r", type=float, help="Seed decay; found from the seed tuple when omitted.")
    p.add_argument("--r-max", type=float, default=4.0)

    p = sub.add_parser("tetra-check", help="Solver against the closed form on the regular tetrahedron.")
    common(p)
    sampling(p)
    p.add_argument("--edge", type=float, default=math.pi)

    p = sub.add_parser("bounds", help="Zeros in a window against the resonance-free envelopes.")
    common(p)
    p.add_argument("--window", default=DEFAULT_WINDOW, help="re_min,re_max,im_min,im_max")

    p = sub.add_parser("expand", help="Exponential-polynomial form of the determinant.")
    common(p)
    return parser


def run_config_from(args: argparse.Namespace) -> RunConfig:
    fields = {
        "command": args.command,
        "input": args.input,
        "output": args.output,
        "format": args.format,
        "threads": args.threads,
        "tol": args.tol,
        "seed": args.seed,
    }
    if getattr(args, "window", None):
        fields["window"] = SearchWindow.parse(args.window)
    if getattr(args, "f_range", None):
        fields["f_range"] = io_helpers.parse_range(args.f_range)
    for name in ("grid", "budget", "r_max", "sampling", "refine", "edge", "f", "r", "mode"):
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    if getattr(args, "k", None):
        fields["k"] = io_helpers.parse_complex(args.k)
    if getattr(args, "hint", None):
        fields["hint"] = io_helpers.parse_complex(args.hint)
    return RunConfig(**fields)


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        run = run_config_from(args)
    except (ValidationError, ValueError) as e:
        logger.error("Invalid arguments: %s", e)
        return EXIT_INPUT
    try:
        text, code = COMMANDS[run.command](run)
    except ResonanceError as e:
        code = exit_code_for(e)
        if isinstance(e, DepthExhaustedError):
            logger.error("%s Unresolved boxes: %s", e, e.unresolved)
        else:
            logger.error("%s failed: %s", run.command, e)
        return code
    except ValidationError as e:
        logger.error("Invalid input: %s", e)
        return EXIT_INPUT
    io_helpers.write_output(text, run.output)
    return code


if __name__ == "__main__":
    sys.exit(main())
