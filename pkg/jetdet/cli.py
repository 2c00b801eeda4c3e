"""
Command line front end: milnor, normalize, circle, verify and bench.

Exit codes: 0 success, 1 input or verification error, 2 inconclusive at the
given truncation.
"""

import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import List, Optional

import numpy as np
from pydantic import ValidationError
from tqdm import tqdm

from . import config
from .circle import (
    circle_normalize,
    fourier_to_record,
    matches_oracle,
    parse_fourier_jet,
)
from .corpus import germ_corpus, random_perturbation
from .exceptions import (
    EXIT_INCONCLUSIVE,
    EXIT_INPUT_ERROR,
    EXIT_OK,
    ParseError,
    handle_error,
)
from .ideal import determinacy_exponent, jacobian_ideal, milnor_number, parse_ideal
from .jet import format_jet, parse_jet
from .normalizer import (
    certificate_from_record,
    certificate_to_record,
    certify_schedule,
    normalize,
    verify_certificate,
)
from .scale import ScaleParams
from .schemas import (
    BenchEntry,
    BenchReport,
    CertificateRecord,
    CircleCertificateRecord,
    MilnorReport,
    RunConfig,
)
from .sysinfo import get_memory_usage, get_system_info

logger = logging.getLogger("jetdet")

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def read_expression(value: str) -> str:
    """Inline expression, or the contents of a file when ``value`` names one."""
    path = Path(value)
    if path.is_file():
        return path.read_text().strip()
    return value


def parse_grid(text: Optional[str]) -> List[float]:
    if not text:
        return []
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ParseError(f"--grid expects comma-separated radii, got {text!r}") from exc


def run_config(args) -> RunConfig:
    try:
        return RunConfig(
            command=args.command,
            trunc=args.trunc,
            scale_s=args.scale_s,
            grid=parse_grid(args.grid),
            seed=args.seed,
            radius=args.radius,
            ideal=getattr(args, "ideal", None),
            loss_k=getattr(args, "loss_k", 1),
            m=getattr(args, "m", None),
            output=args.out,
        )
    except ValidationError as exc:
        raise ParseError(f"invalid options: {exc.errors()[0]['msg']}") from exc


def scale_params(cfg: RunConfig) -> ScaleParams:
    if cfg.grid:
        return ScaleParams(cfg.scale_s, tuple(cfg.grid))
    return ScaleParams.geometric(cfg.scale_s, config.GRID_POINTS)


def emit(model, output: Optional[str]) -> None:
    text = model.model_dump_json(indent=2)
    if output:
        parent = os.path.dirname(os.path.abspath(output))
        config.ensure_output_dir(parent)
        with open(output, "w") as fh:
            fh.write(text + "\n")
        logger.info(f"Wrote {output}")
    else:
        print(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_milnor(args) -> int:
    cfg = run_config(args)
    f = parse_jet(read_expression(args.f), cfg.trunc, args.n_vars)
    J = jacobian_ideal(f)
    mu = milnor_number(f, J)
    det = determinacy_exponent(f, J)
    report = MilnorReport(
        f=format_jet(f), trunc=cfg.trunc, mu=mu.value, det_exp=det.value,
        perturbation_space=f"M^{det.value + 2}" if det.conclusive else None,
        certified_degree=mu.certified_degree, reason=mu.reason or det.reason,
    )
    emit(report, cfg.output)
    if not (mu.conclusive and det.conclusive):
        logger.warning(f"Inconclusive at trunc {cfg.trunc}: {report.reason}")
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_normalize(args) -> int:
    cfg = run_config(args)
    scale = scale_params(cfg)
    f = parse_jet(read_expression(args.f), cfg.trunc, args.n_vars)
    g = parse_jet(read_expression(args.g), cfg.trunc, f.n_vars)
    ideal = parse_ideal(cfg.ideal, f.n_vars, cfg.trunc) if cfg.ideal else None
    cert = normalize(f, g, ideal=ideal, scale=scale, radius=cfg.radius)
    base = args.base_s if args.base_s is not None else cfg.scale_s / 4
    verdict = certify_schedule(cert, base, cfg.loss_k, cfg.m, scale.grid, scale, cfg.radius)
    cert = cert.with_schedule(verdict)
    if not verify_certificate(cert):
        logger.error("Freshly built certificate failed verification")
        emit(certificate_to_record(cert), cfg.output)
        return EXIT_INPUT_ERROR
    emit(certificate_to_record(cert), cfg.output)
    if not cert.success:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_circle(args) -> int:
    cfg = run_config(args)
    g = parse_fourier_jet(read_expression(args.g), cfg.trunc)
    result = circle_normalize(args.k, g, cfg.trunc, args.band)
    record = CircleCertificateRecord(
        k=args.k, g=fourier_to_record(result.g), trunc_r=cfg.trunc, band=result.g.band,
        steps=[fourier_to_record(a) for a in result.steps], phi=fourier_to_record(result.phi),
        verified=result.verified, matches_oracle=matches_oracle(result),
    )
    emit(record, cfg.output)
    return EXIT_OK if record.verified and record.matches_oracle else EXIT_INPUT_ERROR


def cmd_verify(args) -> int:
    try:
        text = Path(args.path).read_text()
        record = CertificateRecord.model_validate_json(text)
    except OSError as exc:
        raise ParseError(f"cannot read {args.path}: {exc}") from exc
    except ValidationError as exc:
        raise ParseError(f"{args.path} is not a certificate: {exc.errors()[0]['msg']}") from exc
    cert = certificate_from_record(record)
    if verify_certificate(cert):
        logger.info(f"{args.path}: certificate verified")
        return EXIT_OK
    logger.error(f"{args.path}: certificate does not verify")
    return EXIT_INPUT_ERROR


def cmd_bench(args) -> int:
    cfg = run_config(args)
    scale = scale_params(cfg)
    rng = np.random.default_rng(cfg.seed)
    report = BenchReport(system=get_system_info(), seed=cfg.seed)
    start = time.perf_counter()
    for germ in tqdm(germ_corpus(args.max_k), desc="bench"):
        entry = BenchEntry(name=germ.name, f=germ.expression, n_vars=germ.n_vars, trunc=germ.trunc)
        tick = time.perf_counter()
        try:
            f = germ.jet()
            J = jacobian_ideal(f)
            entry.mu = milnor_number(f, J).value
            det = determinacy_exponent(f, J)
            entry.det_exp = det.value
            if det.conclusive:
                g = random_perturbation(rng, f.n_vars, f.trunc, det.value + 2)
                cert = normalize(f, g, scale=scale, radius=cfg.radius)
                verdict = certify_schedule(cert, cfg.scale_s / 4, cfg.loss_k, cfg.m, scale.grid,
                                           scale, cfg.radius)
                entry.steps = len(cert.steps)
                entry.order_gains = cert.order_gains
                entry.verified = verify_certificate(cert)
                entry.criterion_ok = verdict.criterion_somewhere
        except Exception as exc:
            entry.error = f"{type(exc).__name__}: {exc}"
            logger.error(f"{germ.name}: {entry.error}")
        entry.seconds = round(time.perf_counter() - tick, 4)
        report.entries.append(entry)
    report.total_seconds = round(time.perf_counter() - start, 4)
    logger.info(f"Bench finished in {report.total_seconds}s, memory {get_memory_usage()} MB")
    output = cfg.output or os.path.join(config.ensure_output_dir(), f"bench_seed{cfg.seed}.json")
    emit(report, output)
    failed = [e.name for e in report.entries if e.error or (e.det_exp is not None and not e.verified)]
    if failed:
        logger.error(f"Failed germs: {', '.join(failed)}")
        return EXIT_INPUT_ERROR
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--trunc", type=int, default=config.DEFAULT_TRUNC, help="Truncation degree")
    common.add_argument("--grid", default=None, help="Comma-separated sample radii inside ]0, S[")
    common.add_argument("--scale-s", type=float, default=config.SCALE_S, help="Upper end S of the scale")
    common.add_argument("--seed", type=int, default=config.SEED, help="Seed for random data")
    common.add_argument("--radius", default=config.RADIUS, help="Rational radius of the least-squares weights")
    common.add_argument("--out", default=None, help="Write JSON here instead of stdout")
    common.add_argument("--log-level", default=config.LOG_LEVEL, help="Logging level")
    common.add_argument("--debug", action="store_true", help="Log tracebacks of unexpected errors")

    parser = argparse.ArgumentParser(prog="jetdet", description="Finite determinacy on truncated power series")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("milnor", parents=[common], help="Milnor number and determinacy exponent")
    p.add_argument("f", help="Germ, inline or a file")
    p.add_argument("--n-vars", type=int, default=None, help="Number of variables")
    p.set_defaults(handler=cmd_milnor)

    p = sub.add_parser("normalize", parents=[common], help="Find phi with f∘phi = f + g")
    p.add_argument("f", help="Germ, inline or a file")
    p.add_argument("g", help="Perturbation, inline or a file")
    p.add_argument("--n-vars", type=int, default=None, help="Number of variables")
    p.add_argument("--ideal", action="append", default=None, help="Generator of I (repeat); selects the ideal mode")
    p.add_argument("--loss-k", type=int, default=1, help="Loss exponent k of the right inverse")
    p.add_argument("--m", type=float, default=None, help="Schedule constant m")
    p.add_argument("--base-s", type=float, default=None, help="Base radius s of the schedule (default S/4)")
    p.set_defaults(handler=cmd_normalize)

    p = sub.add_parser("circle", parents=[common], help="Normalize r^k + r^(k+1) g on the circle")
    p.add_argument("k", type=int, help="Exponent k ≥ 1")
    p.add_argument("g", help="Perturbation such as 'r*e(1) + 1'")
    p.add_argument("--band", type=int, default=None, help="Working Fourier band")
    p.set_defaults(handler=cmd_circle)

    p = sub.add_parser("verify", parents=[common], help="Re-check a certificate file")
    p.add_argument("path", help="Certificate JSON")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("bench", parents=[common], help="Run the germ corpus")
    p.add_argument("--max-k", type=int, default=4, help="Largest k in the A_k series")
    p.set_defaults(handler=cmd_bench)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format=LOG_FORMAT,
    )
    try:
        return args.handler(args)
    except Exception as exc:
        return handle_error(exc, debug=args.debug)


if __name__ == "__main__":
    sys.exit(main())
