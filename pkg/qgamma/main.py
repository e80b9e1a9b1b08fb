"""
qgamma command line: gamma, qlog, decompose, irrat, verify and bench.

Exit codes: 0 on success, 1 on a computation error or a failed check, 2 on
a usage error.
"""

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd
from pydantic import ValidationError

from qgamma.config import settings
from qgamma.core.gammaengine import ASYM_METHODS, SERIES_METHODS, compute_gamma
from qgamma.core.irrat import (
    certificate_json,
    rationality_criterion_check,
    test_base2,
    test_base3,
    write_certificate,
)
from qgamma.core.linforms import decompose_base2, decompose_base3, decompose_baseq, decomposition_record
from qgamma.core.numerics import format_fixed
from qgamma.core.qlog import qlog_accel, qlog_series
from qgamma.core.series import reference_gamma
from qgamma.schemas.schema_certificates import ThresholdKind
from qgamma.schemas.schema_cli import BenchRow, CliConfig, OutputFormat, QLogOutput
from qgamma.schemas.schema_numerics import PrecisionPlan, digits_to_bits
from qgamma.schemas.schema_qlog import QLogRequest
from qgamma.util.exceptions import QGammaError, RangeError
from qgamma.util.logger import set_console_level, set_run_id, setup_logger
from qgamma.verification.suites import SUITES, run_suite

logger = setup_logger("main")

GAMMA_METHODS = list(SERIES_METHODS) + list(ASYM_METHODS)
# q-log and decomposition evaluations sum at most this many terms per plan
TERM_HINT = 1 << 20


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="emit JSON")
    fmt.add_argument("--csv", action="store_true", help="emit CSV (bench only)")
    common.add_argument("--out", type=Path, help="write output here (a directory for irrat)")
    common.add_argument("--work-bits", type=int, help="raise the working precision to at least this many bits")
    common.add_argument("--log-level", default=settings.LOG_LEVEL, help="console log level")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="qgamma",
        description="Euler's constant via base-q series, q-logarithm linear forms and irrationality tests.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("gamma", parents=[common], help="γ to a number of digits")
    p.add_argument("--digits", type=int, required=True)
    p.add_argument("--method", choices=GAMMA_METHODS, default="gosper")
    p.add_argument("--q", type=int, help="base for baseq-accel and asym-baseq")
    p.add_argument("--n", type=int, help="override the planned n (asymptotic methods)")
    p.add_argument("--measure", action="store_true", help="report the error against the reference γ")

    p = sub.add_parser("qlog", parents=[common], help="ln_q(1+z)")
    p.add_argument("--q", required=True, help="base, an integer >= 2 (or a rational > 1 with --route series)")
    p.add_argument("--z", required=True, help="argument as an integer or fraction, |z| < q")
    p.add_argument("--digits", type=int, required=True)
    p.add_argument("--route", choices=["series", "accel"], default="accel")

    p = sub.add_parser("decompose", parents=[common], help="I = c·γ + L - A for one form")
    p.add_argument("--base", choices=["2", "3", "q"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True, help="damping exponent (a multiple of 6 in base 3)")
    p.add_argument("--q", type=int, default=3, help="base for --base q")
    p.add_argument("--digits", type=int, default=40)
    p.add_argument("--no-residual", action="store_true", help="skip I from the reference γ")

    p = sub.add_parser("irrat", parents=[common], help="fractional-part irrationality test")
    p.add_argument("--base", type=int, choices=[2, 3], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, help="defaults to 2^n in base 2; base 3 only accepts 3^n - 3")
    p.add_argument("--kind", choices=[k.value for k in ThresholdKind if k is not ThresholdKind.BASE3], default="eq26")
    p.add_argument("--epsilon", type=Fraction, help="ε for --kind eq26_eps")
    p.add_argument("--criterion", action="store_true", help="compare {d·L} with d·I instead of the threshold")

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("--suite", choices=SUITES, required=True)

    p = sub.add_parser("bench", parents=[common], help="digits against work for several methods")
    p.add_argument("--methods", default="gosper,asym-28,asym-29,asym-base3", help="comma-separated γ methods")
    p.add_argument("--digits", default="20,50,100", help="comma-separated digit targets")
    return parser


def _config(args: argparse.Namespace) -> CliConfig:
    fmt = OutputFormat.JSON if args.json else OutputFormat.CSV if args.csv else OutputFormat.TEXT
    digits = args.digits if isinstance(getattr(args, "digits", None), int) else None
    return CliConfig(
        subcommand=args.subcommand,
        output_format=fmt,
        out_path=args.out,
        work_bits_override=args.work_bits,
        log_level=args.log_level,
        digits=digits,
    )


def _plan(cfg: CliConfig, digits: int) -> PrecisionPlan:
    plan = PrecisionPlan.for_digits(digits, term_count_hint=TERM_HINT)
    if cfg.work_bits_override and cfg.work_bits_override > plan.work_bits:
        plan = plan.model_copy(update={"work_bits": cfg.work_bits_override})
    return plan


def _emit(cfg: CliConfig, text: str) -> None:
    if cfg.out_path and cfg.subcommand != "irrat":
        cfg.out_path.parent.mkdir(parents=True, exist_ok=True)
        cfg.out_path.write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_gamma(args: argparse.Namespace, cfg: CliConfig) -> int:
    estimate = compute_gamma(
        args.method,
        args.digits,
        q=args.q,
        n=args.n,
        work_bits=cfg.work_bits_override,
        measure=args.measure,
    )
    _emit(cfg, estimate.model_dump_json() if cfg.output_format is OutputFormat.JSON else estimate.value)
    return 0


def cmd_qlog(args: argparse.Namespace, cfg: CliConfig) -> int:
    req = QLogRequest(
        q=args.q,
        z=args.z,
        plan=_plan(cfg, args.digits),
        allow_rational_q=args.route == "series",
    )
    value = qlog_series(req) if args.route == "series" else qlog_accel(req)
    out = QLogOutput(
        q=str(req.q),
        z=str(req.z),
        route=args.route,
        digits=args.digits,
        value=format_fixed(value, args.digits),
    )
    _emit(cfg, out.model_dump_json() if cfg.output_format is OutputFormat.JSON else out.value)
    return 0


def cmd_decompose(args: argparse.Namespace, cfg: CliConfig) -> int:
    plan = _plan(cfg, args.digits)
    with_residual = not args.no_residual
    if args.base == "2":
        dec = decompose_base2(args.n, args.m, plan, with_residual)
    elif args.base == "3":
        if args.m % 6:
            raise ValueError(f"--m must be a multiple of 6 in base 3, got {args.m}")
        dec = decompose_base3(args.n, args.m // 6, plan, with_residual)
    else:
        dec = decompose_baseq(args.q, args.n, args.m, plan, with_residual)
    record = decomposition_record(dec, args.digits)
    if cfg.output_format is OutputFormat.JSON:
        _emit(cfg, record.model_dump_json())
        return 0
    lines = [
        f"route {record.route.value}  q={record.q} n={record.n} m={record.m}",
        f"gamma_coeff {record.gamma_coeff}",
        f"L {record.L['value']}  (err {record.L['err']})",
        f"A {record.A['value']}  (err {record.A['err']}, exact={record.a_exact})",
    ]
    if record.I is not None:
        lines.append(f"I {record.I['value']}  (err {record.I['err']})")
    lines.append(f"d_{record.l_clearing_N} clears L coefficients: {dec.l_coeffs_integral}")
    _emit(cfg, "\n".join(lines))
    return 0


def cmd_irrat(args: argparse.Namespace, cfg: CliConfig) -> int:
    plan = None
    if cfg.work_bits_override:
        plan = PrecisionPlan.for_digits(settings.CERT_FRACTION_DIGITS + 2)
        plan = plan.model_copy(update={"work_bits": max(plan.work_bits, cfg.work_bits_override)})

    if args.criterion:
        report = rationality_criterion_check(args.n, args.m, plan, base=args.base)
        if cfg.output_format is OutputFormat.JSON:
            _emit(cfg, report.model_dump_json())
        else:
            _emit(
                cfg,
                f"{{d·L}} = {report.frac}\nd·I    = {report.d_times_I}\n"
                f"equal: {report.equal}  0 < d·I < 1: {report.d_times_I_in_unit_interval}",
            )
        return 0

    if args.base == 2:
        cert = test_base2(args.n, args.m if args.m is not None else 1 << args.n, ThresholdKind(args.kind), args.epsilon, plan)
    else:
        if args.m is not None and args.m != 3**args.n - 3:
            raise RangeError(
                f"the base-3 test uses m = 3^n - 3 = {3**args.n - 3}, got --m {args.m}",
                {"n": args.n, "m": args.m},
            )
        cert = test_base3(args.n, plan)
    if cfg.out_path:
        path = write_certificate(cert, cfg.out_path)
        logger.info("Certificate written", extra={"data": {"path": str(path)}})
    if cfg.output_format is OutputFormat.JSON:
        _emit(cfg, certificate_json(cert))
    else:
        verdict = "passed" if cert.passed else "not passed"
        lines = [f"{{d·L}} = {cert.frac}", f"threshold ({cert.kind.value}) = {cert.threshold}", verdict]
        if cert.passed:
            lines.append(f"no divisor of {cert.excluded} is a denominator of γ; |b| >= {cert.denominator_lower_bound}")
        _emit(cfg, "\n".join(lines))
    return 0


def cmd_verify(args: argparse.Namespace, cfg: CliConfig) -> int:
    result = run_suite(args.suite)
    if cfg.output_format is OutputFormat.JSON:
        _emit(cfg, json.dumps([c.model_dump(mode="json") for c in result.checks], indent=2))
    else:
        lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.check} {json.dumps(c.params)}  {c.value}" for c in result.checks]
        if result.error_type:
            lines.append(f"ABORTED  {result.error_type}: {result.error_message}")
        _emit(cfg, "\n".join(lines))
    return 0 if result.success else 1


def _digits_correct(value: str, reference: str) -> int:
    decimals = value.split(".")[1] if "." in value else ""
    expected = reference.split(".")[1]
    count = 0
    for a, b in zip(decimals, expected):
        if a != b:
            break
        count += 1
    return count


def bench_rows(methods: Sequence[str], digit_targets: Sequence[int], work_bits: Optional[int] = None) -> List[BenchRow]:
    """Time each (method, digits) pair and count digits agreeing with the reference γ."""
    reference = reference_gamma(digits_to_bits(max(digit_targets) + 10) + 64)
    ref_text = format_fixed(reference, max(digit_targets) + 8)
    rows = []
    for method in methods:
        for digits in digit_targets:
            start = time.perf_counter()
            estimate = compute_gamma(method, digits, work_bits=work_bits)
            wall_ms = (time.perf_counter() - start) * 1000
            rows.append(
                BenchRow(
                    method=method,
                    q=estimate.q,
                    n=estimate.n,
                    m=estimate.m,
                    digits_correct=_digits_correct(estimate.value, ref_text),
                    terms=estimate.terms,
                    wall_ms=round(wall_ms, 3),
                )
            )
    return rows


def cmd_bench(args: argparse.Namespace, cfg: CliConfig) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = [m for m in methods if m not in GAMMA_METHODS]
    if unknown:
        raise ValueError(f"unknown methods: {', '.join(unknown)}")
    digit_targets = [int(d) for d in args.digits.split(",")]
    rows = bench_rows(methods, digit_targets, cfg.work_bits_override)
    df = pd.DataFrame([r.model_dump() for r in rows], columns=list(BenchRow.model_fields))
    if cfg.output_format is OutputFormat.CSV:
        _emit(cfg, df.to_csv(index=False))
    elif cfg.output_format is OutputFormat.JSON:
        _emit(cfg, df.to_json(orient="records"))
    else:
        _emit(cfg, df.to_string(index=False))
    return 0


COMMANDS = {
    "gamma": cmd_gamma,
    "qlog": cmd_qlog,
    "decompose": cmd_decompose,
    "irrat": cmd_irrat,
    "verify": cmd_verify,
    "bench": cmd_bench,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        cfg = _config(args)
    except ValidationError as e:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"qgamma: error: {e.errors()[0]['msg']}\n")
        return 2

    set_run_id()
    try:
        set_console_level(cfg.log_level)
        return COMMANDS[args.subcommand](args, cfg)
    except QGammaError as e:
        logger.error(e.message, extra={"data": e.details})
        sys.stderr.write(f"qgamma: {e.message}\n")
        return 1
    except (ValidationError, ValueError) as e:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"qgamma: error: {e}\n")
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
