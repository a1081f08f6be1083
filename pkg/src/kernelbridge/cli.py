"""Command-line verification harness and utility commands.

``kernelbridge verify`` runs the randomized identity suites and emits a
JSON report; ``regress`` fits ridge and/or GP predictors to a CSV
dataset; ``rates`` runs the convergence-rate experiment; ``sample``,
``mmd``, ``hsic`` and ``quadrature`` wrap the corresponding library
calls. Every command accepts ``--out`` to write its JSON to a file
instead of stdout, and identical arguments with the same seed produce
byte-identical output apart from the ``wall_time`` line.

Exit codes: 0 on success, 1 when a verification check fails, 2 for
usage, parse, or input errors. No other codes are used.

CSV formats: datasets carry a header ``x1,...,xd,y`` (the ``y`` column
is optional), measures carry ``x1,...,xd,w``, and plain point sets carry
``x1,...,xd``. Decimal points only; no thousands separators.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from . import embeddings, experiments, gp, krr, quadrature
from .dependence import PairedSample, hsic_empirical, hsic_gp_exact, hsic_gp_monte_carlo
from .errors import (
    InputError,
    NumericalError,
    PreconditionError,
    UnsupportedOperationError,
)
from .kernels import Dataset, format_kernel, parse_kernel
from .reporting import SCHEMA_VERSION, json_text, report_dict
from .suites import SUITE_NAMES, run_suite

__all__ = ["main", "entrypoint"]

_BOTH_MODE_TOLERANCE = 1e-8


def _read_rows(path: str):
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            return list(csv.reader(handle))
    except OSError as exc:
        raise InputError(f"could not read {path}: {exc}") from None


def _parse_cell(path: str, line: int, cell: str) -> float:
    text = cell.strip()
    if "_" in text or "," in text:
        raise InputError(f"{path}:{line}: could not parse {cell!r} as a number")
    try:
        value = float(text)
    except ValueError:
        raise InputError(
            f"{path}:{line}: could not parse {cell!r} as a number"
        ) from None
    if not np.isfinite(value):
        raise InputError(f"{path}:{line}: non-finite value {cell!r}")
    return value


def _split_header(path: str, rows):
    if not rows:
        raise InputError(f"{path}:1: missing header row")
    header = [cell.strip() for cell in rows[0]]
    d = 0
    while d < len(header) and header[d] == f"x{d + 1}":
        d += 1
    if d == 0:
        raise InputError(
            f"{path}:1: header must start with coordinate columns x1,...,xd"
        )
    return header, d


def _parse_table(path: str, expected_trailer: str | None, require_trailer: bool):
    """Read a CSV of coordinate columns plus an optional trailing column.

    Returns ``(points, trailer_values_or_None)``.
    """
    rows = _read_rows(path)
    header, d = _split_header(path, rows)
    trailer = header[d:]
    if trailer and (expected_trailer is None or trailer != [expected_trailer]):
        raise InputError(
            f"{path}:1: unexpected trailing columns {trailer!r} after x1..x{d}"
        )
    if require_trailer and not trailer:
        raise InputError(f"{path}:1: missing required column {expected_trailer!r}")
    width = len(header)
    points = np.zeros((len(rows) - 1, d))
    values = np.zeros(len(rows) - 1) if trailer else None
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise InputError(
                f"{path}:{i}: expected {width} columns, found {len(row)}"
            )
        for j in range(d):
            points[i - 2, j] = _parse_cell(path, i, row[j])
        if values is not None:
            values[i - 2] = _parse_cell(path, i, row[d])
    return points, values


def _load_dataset(path: str) -> Dataset:
    points, y = _parse_table(path, "y", require_trailer=False)
    return Dataset(points, y)


def _load_points(path: str) -> np.ndarray:
    points, _ = _parse_table(path, None, require_trailer=False)
    return points


def _load_measure(path: str) -> embeddings.DiscreteMeasure:
    points, w = _parse_table(path, "w", require_trailer=True)
    return embeddings.DiscreteMeasure(points, w)


def _load_column(path: str, name: str) -> np.ndarray:
    rows = _read_rows(path)
    if not rows or [cell.strip() for cell in rows[0]] != [name]:
        raise InputError(f"{path}:1: expected a single column named {name!r}")
    out = np.zeros(len(rows) - 1)
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 1:
            raise InputError(f"{path}:{i}: expected 1 column, found {len(row)}")
        out[i - 2] = _parse_cell(path, i, row[0])
    return out


def _emit(payload: dict, out_path: str | None) -> None:
    text = json_text(payload)
    if out_path is None:
        sys.stdout.write(text)
    else:
        try:
            with open(out_path, "w", encoding="utf-8") as handle:
                handle.write(text)
        except OSError as exc:
            raise InputError(f"could not write {out_path}: {exc}") from None


def _write_predictions(path: str, points: np.ndarray, values: np.ndarray) -> None:
    d = points.shape[1]
    try:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow([f"x{j + 1}" for j in range(d)] + ["y"])
            for row, value in zip(points, values):
                writer.writerow(["%.17g" % v for v in row] + ["%.17g" % value])
    except OSError as exc:
        raise InputError(f"could not write {path}: {exc}") from None


def _cmd_verify(args) -> int:
    start = time.perf_counter()
    cases = run_suite(args.suite, args.seed, args.trials)
    report = report_dict(args.suite, cases, args.seed, time.perf_counter() - start)
    _emit(report, args.out)
    return 0 if all(case.passed for case in cases) else 1


def _cmd_regress(args) -> int:
    start = time.perf_counter()
    kernel = parse_kernel(args.kernel)
    data = _load_dataset(args.data)
    queries = _load_points(args.queries) if args.queries else data.X
    if data.n > 0 and queries.shape[0] > 0 and queries.shape[1] != data.d:
        raise InputError(
            f"queries have dimension {queries.shape[1]} but the data has "
            f"dimension {data.d}"
        )
    payload: dict = {
        "schema": SCHEMA_VERSION,
        "command": "regress",
        "mode": args.mode,
        "kernel": format_kernel(kernel),
        "n": data.n,
        "d": data.d,
    }
    exit_code = 0
    if args.mode == "krr":
        if args.lam is None:
            raise InputError("krr mode requires --lambda")
        payload["lambda"] = args.lam
        estimator = krr.fit_krr(kernel, data, args.lam)
        predictions = krr.predict_at(estimator, queries)
    elif args.mode == "gp":
        if args.sigma2 is None:
            raise InputError("gp mode requires --sigma2")
        payload["sigma2"] = args.sigma2
        post = gp.condition(gp.GPPrior(kernel), data, args.sigma2)
        predictions = gp.posterior_mean_at(post, queries)
    else:
        if args.lam is None:
            raise InputError("both mode requires --lambda")
        sigma2 = data.n * args.lam
        if args.sigma2 is not None and args.sigma2 != sigma2:
            raise InputError(
                f"both mode requires sigma2 = n * lambda = {sigma2!r}, got "
                f"{args.sigma2!r}"
            )
        payload["lambda"] = args.lam
        payload["sigma2"] = sigma2
        estimator = krr.fit_krr(kernel, data, args.lam)
        predictions = krr.predict_at(estimator, queries)
        post = gp.condition(gp.GPPrior(kernel), data, sigma2)
        gp_predictions = gp.posterior_mean_at(post, queries)
        discrepancy = (
            float(np.max(np.abs(predictions - gp_predictions)))
            if queries.shape[0]
            else 0.0
        )
        payload["discrepancy"] = discrepancy
        if discrepancy > _BOTH_MODE_TOLERANCE:
            exit_code = 1
    if args.predictions_out:
        _write_predictions(args.predictions_out, queries, predictions)
        payload["predictions_path"] = args.predictions_out
    else:
        payload["predictions"] = [float(v) for v in predictions]
    payload["wall_time"] = time.perf_counter() - start
    _emit(payload, args.out)
    return exit_code


def _cmd_rates(args) -> int:
    start = time.perf_counter()
    kernel = parse_kernel(args.kernel)
    sizes = _parse_sizes(args.sizes)
    result = experiments.rate_experiment(
        args.target,
        kernel,
        sizes,
        replications=args.replications,
        seed=args.seed,
        lambda_coefficient=args.coefficient,
    )
    payload = {
        "schema": SCHEMA_VERSION,
        "command": "rates",
        "target": args.target,
        "kernel": format_kernel(kernel),
        "replications": args.replications,
        "lambda_coefficient": args.coefficient,
        "seed": args.seed,
        **result.as_dict(),
        "wall_time": time.perf_counter() - start,
    }
    _emit(payload, args.out)
    return 0


def _cmd_sample(args) -> int:
    start = time.perf_counter()
    kernel = parse_kernel(args.kernel)
    points = _load_points(args.points)
    draws = gp.sample_prior(gp.GPPrior(kernel), points, args.count, args.seed)
    payload = {
        "schema": SCHEMA_VERSION,
        "command": "sample",
        "kernel": format_kernel(kernel),
        "n": points.shape[0],
        "d": points.shape[1],
        "count": args.count,
        "seed": args.seed,
        "draws": [[float(v) for v in row] for row in draws],
        "wall_time": time.perf_counter() - start,
    }
    _emit(payload, args.out)
    return 0


def _cmd_mmd(args) -> int:
    start = time.perf_counter()
    kernel = parse_kernel(args.kernel)
    P = _load_measure(args.p)
    Q = _load_measure(args.q)
    value = embeddings.mmd(kernel, P, Q)
    payload = {
        "schema": SCHEMA_VERSION,
        "command": "mmd",
        "kernel": format_kernel(kernel),
        "p_atoms": P.m,
        "q_atoms": Q.m,
        "mmd": value,
        "mmd_squared": value * value,
        "wall_time": time.perf_counter() - start,
    }
    _emit(payload, args.out)
    return 0


def _cmd_hsic(args) -> int:
    start = time.perf_counter()
    kx = parse_kernel(args.kernel_x)
    ky = parse_kernel(args.kernel_y)
    sample = PairedSample(_load_points(args.x), _load_points(args.y))
    payload = {
        "schema": SCHEMA_VERSION,
        "command": "hsic",
        "kernel_x": format_kernel(kx),
        "kernel_y": format_kernel(ky),
        "n": sample.n,
        "hsic": hsic_empirical(kx, ky, sample),
        "gp_exact": hsic_gp_exact(kx, ky, sample),
    }
    if args.draws is not None:
        estimate, se = hsic_gp_monte_carlo(kx, ky, sample, args.draws, args.seed)
        payload["mc_estimate"] = estimate
        payload["mc_se"] = se
        payload["seed"] = args.seed
    payload["wall_time"] = time.perf_counter() - start
    _emit(payload, args.out)
    return 0


def _cmd_quadrature(args) -> int:
    start = time.perf_counter()
    kernel = parse_kernel(args.kernel)
    nodes = _load_points(args.nodes)
    target = _load_measure(args.target)
    rule = quadrature.kq_weights(kernel, nodes, target, args.lam)
    _, variance = quadrature.bq_posterior(rule, np.zeros(rule.n), args.lam)
    payload = {
        "schema": SCHEMA_VERSION,
        "command": "quadrature",
        "kernel": format_kernel(kernel),
        "n": rule.n,
        "lambda": args.lam,
        "weights": [float(w) for w in rule.weights],
        "variance": variance,
    }
    if args.f_values:
        f = _load_column(args.f_values, "f")
        mean, _ = quadrature.bq_posterior(rule, f, args.lam)
        payload["mean"] = mean
    payload["wall_time"] = time.perf_counter() - start
    _emit(payload, args.out)
    return 0


def _parse_sizes(text: str):
    try:
        return [int(piece) for piece in text.split(",") if piece.strip()]
    except ValueError:
        raise InputError(
            f"could not parse sizes {text!r}; expected comma-separated integers"
        ) from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kernelbridge",
        description="Verification harness for kernel regression identities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="run a randomized identity suite")
    verify.add_argument("--suite", choices=SUITE_NAMES + ("all",), default="all")
    verify.add_argument("--trials", type=int, default=200)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--out")
    verify.set_defaults(handler=_cmd_verify)

    regress = sub.add_parser("regress", help="fit ridge or GP predictors to a CSV")
    regress.add_argument("--data", required=True)
    regress.add_argument("--kernel", required=True)
    regress.add_argument("--mode", choices=("krr", "gp", "both"), default="both")
    regress.add_argument("--lambda", dest="lam", type=float)
    regress.add_argument("--sigma2", type=float)
    regress.add_argument("--queries")
    regress.add_argument("--predictions-out")
    regress.add_argument("--out")
    regress.set_defaults(handler=_cmd_regress)

    rates = sub.add_parser("rates", help="run the convergence-rate experiment")
    rates.add_argument("--target", default="matern32-mix")
    rates.add_argument("--kernel", default="matern:alpha=1.5,h=0.2")
    rates.add_argument(
        "--sizes", default=",".join(str(n) for n in experiments.DEFAULT_SIZES)
    )
    rates.add_argument("--replications", type=int, default=4)
    rates.add_argument(
        "--coefficient", type=float, default=experiments.DEFAULT_LAMBDA_COEFFICIENT
    )
    rates.add_argument("--seed", type=int, default=0)
    rates.add_argument("--out")
    rates.set_defaults(handler=_cmd_rates)

    sample = sub.add_parser("sample", help="draw GP prior samples at points")
    sample.add_argument("--kernel", required=True)
    sample.add_argument("--points", required=True)
    sample.add_argument("--count", type=int, default=1)
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--out")
    sample.set_defaults(handler=_cmd_sample)

    mmd_cmd = sub.add_parser("mmd", help="distance between two discrete measures")
    mmd_cmd.add_argument("--kernel", required=True)
    mmd_cmd.add_argument("--p", required=True)
    mmd_cmd.add_argument("--q", required=True)
    mmd_cmd.add_argument("--out")
    mmd_cmd.set_defaults(handler=_cmd_mmd)

    hsic = sub.add_parser("hsic", help="dependence measure on paired samples")
    hsic.add_argument("--x", required=True)
    hsic.add_argument("--y", required=True)
    hsic.add_argument("--kernel-x", default="se")
    hsic.add_argument("--kernel-y", default="se")
    hsic.add_argument("--draws", type=int)
    hsic.add_argument("--seed", type=int, default=0)
    hsic.add_argument("--out")
    hsic.set_defaults(handler=_cmd_hsic)

    quad = sub.add_parser("quadrature", help="kernel quadrature weights and variance")
    quad.add_argument("--kernel", required=True)
    quad.add_argument("--nodes", required=True)
    quad.add_argument("--target", required=True)
    quad.add_argument("--lambda", dest="lam", type=float, default=0.0)
    quad.add_argument("--f-values")
    quad.add_argument("--out")
    quad.set_defaults(handler=_cmd_quadrature)

    return parser


def main(argv=None) -> int:
    """Run the CLI; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return 2 if code not in (0, None) else 0
    try:
        return args.handler(args)
    except (
        InputError,
        PreconditionError,
        NumericalError,
        UnsupportedOperationError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    """Console-script entry."""
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
