"""Command-line front end.

Four subcommands:

``simulate1``
    Monte Carlo study on the continuous-outcome universe (measurement
    error scenarios); prints a bias/SE/RMSE table and optionally writes
    it as CSV.
``simulate2``
    Monte Carlo study on the categorical universe (membership must be
    classified before integrating).
``estimate``
    One-shot estimation from a probability-sample CSV plus a big-data
    CSV, with a choice of estimator.
``classify``
    Fit the membership mixture on the probability sample and label both
    files, writing the fitted tables alongside.

Every flag can also be supplied through ``--config FILE`` where the
file holds either JSON or ``key = value`` lines; explicit command-line
flags override the file.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .calibration import build_controls, regdi_total
from .classifier import (
    ClassifierModel,
    classify,
    em_fit,
    estimate_m,
    initial_u,
    pdi2_total,
    posterior,
)
from .estimators import BigDataTotals, ht_total, pdi_total, ratio_di_total
from .measurement import fit_measurement_model, two_step_regdi
from .simulation import SimConfig, run_sim1, run_sim2, summary_rows
from .variance import ht_variance_quadratic, regdi_residuals

__all__ = ["main"]

CONFIG_KEYS = {
    "scenario",
    "reps",
    "seed",
    "n_a",
    "pop_n",
    "big",
    "big_n",
    "out",
    "sample_a",
    "big_data",
    "method",
    "controls",
    "pi",
    "workers",
    "regenerate_population",
}


def _coerce(text: str):
    lowered = text.strip().lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text.strip()


def _load_config(path: str) -> dict:
    raw = Path(path).read_text()
    if raw.lstrip().startswith("{"):
        values = json.loads(raw)
    else:
        values = {}
        for line in raw.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, rest = line.partition("=")
            if not sep:
                raise SystemExit(f"config line is not 'key = value': {line!r}")
            values[key.strip()] = _coerce(rest)
    normalized = {}
    for key, value in values.items():
        key = key.strip().replace("-", "_")
        if key not in CONFIG_KEYS:
            raise SystemExit(f"unknown config key: {key!r}")
        normalized[key] = value
    return normalized


def _parse_big(text: str) -> tuple[int, int]:
    parts = text.split("/")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected two sizes as n1/n2")
    return int(parts[0]), int(parts[1])


def _require(args, parser, *names) -> None:
    for name in names:
        if getattr(args, name) is None:
            parser.error(
                f"--{name.replace('_', '-')} is required "
                "(on the command line or in --config)"
            )


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="bigsurv",
        description="Finite-population estimation combining a probability "
        "sample with a big non-probability source.",
    )
    parser.add_argument(
        "--config", help="JSON or key=value file; command-line flags override"
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    commands = {}

    p1 = sub.add_parser(
        "simulate1", help="Monte Carlo study with measurement-error scenarios"
    )
    p1.add_argument("--scenario", type=int, choices=(1, 2, 3))
    p1.add_argument("--reps", type=int)
    p1.add_argument("--seed", type=int)
    p1.add_argument("--n-a", type=int, default=1000)
    p1.add_argument("--pop-n", type=int)
    p1.add_argument(
        "--big",
        type=_parse_big,
        metavar="N1/N2",
        help="per-stratum big-data sizes (default 30%%/20%% of the universe)",
    )
    p1.add_argument("--workers", type=int, default=1)
    p1.add_argument(
        "--regenerate-population",
        action="store_true",
        default=None,
        help="rebuild the universe every replicate instead of once",
    )
    p1.add_argument("--out", help="write the summary table as CSV")
    p1.set_defaults(func=cmd_simulate1)
    commands["simulate1"] = p1

    p2 = sub.add_parser(
        "simulate2", help="Monte Carlo study with classified membership"
    )
    p2.add_argument("--n-a", type=int)
    p2.add_argument("--reps", type=int)
    p2.add_argument("--seed", type=int)
    p2.add_argument("--pop-n", type=int)
    p2.add_argument("--big-n", type=int)
    p2.add_argument("--workers", type=int, default=1)
    p2.add_argument("--out", help="write the summary table as CSV")
    p2.set_defaults(func=cmd_simulate2)
    commands["simulate2"] = p2

    pe = sub.add_parser("estimate", help="estimate a population total from CSVs")
    pe.add_argument("--sample-a", help="probability-sample CSV (id,d,pi,y,...)")
    pe.add_argument("--big-data", help="big-data CSV (id,y[,z1..zK,multiplicity])")
    pe.add_argument(
        "--method",
        choices=("ht", "pdi", "ratio", "regdi", "two-step", "pdi2"),
    )
    pe.add_argument(
        "--controls",
        choices=("standard", "duplication", "proxy_ystar"),
        default="standard",
        help="calibration controls for --method regdi",
    )
    pe.add_argument(
        "--pop-n",
        type=int,
        help="universe size (default: rounded sum of design weights)",
    )
    pe.add_argument("--pi", type=float, help="membership rate for --method pdi2")
    pe.add_argument("--out", help="write the estimate as CSV")
    pe.set_defaults(func=cmd_estimate)
    commands["estimate"] = pe

    pc = sub.add_parser(
        "classify", help="label probable big-data members in both files"
    )
    pc.add_argument("--sample-a", help="probability-sample CSV with z columns")
    pc.add_argument("--big-data", help="big-data CSV with z columns")
    pc.add_argument("--pi", type=float, help="marginal membership rate N_b/N")
    pc.add_argument("--pop-n", type=int)
    pc.add_argument("--out", default="labels.csv")
    pc.set_defaults(func=cmd_classify)
    commands["classify"] = pc

    # accept --config on either side of the command name; the value is
    # peeked out of argv before parsing, so the flag itself is inert here
    for command in commands.values():
        command.add_argument(
            "--config", help="JSON or key=value file; command-line flags override"
        )

    return parser, commands


def _print_summary(summary) -> None:
    print(
        f"study={summary.study} scenario={summary.scenario} "
        f"replicates={summary.replicates} truth={summary.truth:.6f}"
    )
    print(f"{'estimator':<14}{'bias':>10}{'se':>10}{'rmse':>10}")
    for row in summary.rows:
        print(
            f"{row.estimator:<14}{row.bias:>10.4f}{row.se:>10.4f}{row.rmse:>10.4f}"
        )
    if summary.var_rel_bias is not None:
        print(f"variance relative bias (regdi): {summary.var_rel_bias:+.4f}")
    if summary.failures:
        print(f"replicate failures redrawn: {summary.failures}")


def _emit_summary(summary, out) -> None:
    _print_summary(summary)
    if out:
        fileio.write_summary_csv(out, summary_rows(summary))
        print(f"wrote {out}")


def cmd_simulate1(args, parser) -> int:
    _require(args, parser, "scenario", "reps", "seed")
    config = SimConfig(
        study="sim1",
        scenario=args.scenario,
        n_a=args.n_a,
        replicates=args.reps,
        master_seed=args.seed,
        pop_n=args.pop_n,
        stratum_sizes=args.big,
        regenerate_population=bool(args.regenerate_population),
        workers=args.workers,
    )
    _emit_summary(run_sim1(config), args.out)
    return 0


def cmd_simulate2(args, parser) -> int:
    _require(args, parser, "n_a", "reps", "seed")
    config = SimConfig(
        study="sim2",
        n_a=args.n_a,
        replicates=args.reps,
        master_seed=args.seed,
        pop_n=args.pop_n,
        big_n=args.big_n,
        workers=args.workers,
    )
    _emit_summary(run_sim2(config), args.out)
    return 0


def _aligned_delta(sample, big) -> np.ndarray:
    """Membership indicator for sample units, derived from ids if absent."""
    if sample.delta is not None:
        return sample.delta
    return np.isin(sample.unit_ids, big.unit_ids).astype(np.int64)


def _join_big_values(sample, big) -> tuple[np.ndarray, np.ndarray]:
    """Look up each sampled unit's big-data value by id.

    Returns ``(values, found)`` where ``values`` is zero wherever
    ``found`` is false.
    """
    order = np.argsort(big.unit_ids)
    sorted_ids = big.unit_ids[order]
    pos = np.searchsorted(sorted_ids, sample.unit_ids)
    pos = np.clip(pos, 0, sorted_ids.size - 1)
    found = sorted_ids[pos] == sample.unit_ids
    values = np.zeros(sample.n)
    values[found] = big.values[order][pos[found]]
    return values, found


def _fit_mixture(sample, big, pi):
    if sample.z is None:
        raise SystemExit("the probability-sample CSV has no z columns")
    if big.z is None:
        raise SystemExit("the big-data CSV has no z columns")
    if big.z.shape[1] != sample.z.shape[1]:
        raise SystemExit("the two files carry different numbers of z columns")
    levels = tuple(
        int(max(sample.z[:, k].max(), big.z[:, k].max()))
        for k in range(sample.z.shape[1])
    )
    model0 = ClassifierModel(
        pi=pi,
        m=estimate_m(big, levels),
        u=initial_u(sample.z, sample.d, levels),
    )
    return em_fit(sample, model0)


def _linearized_variance(sample, outcome, variant, **controls) -> float | None:
    """Total-scale calibration variance when joint probabilities exist."""
    if sample.joint_pi is None:
        return None
    spec = build_controls(variant, **controls)
    resid = regdi_residuals(sample, outcome, spec.x)
    return ht_variance_quadratic(sample, resid.e_hat)


def cmd_estimate(args, parser) -> int:
    _require(args, parser, "sample_a", "big_data", "method")
    sample = fileio.read_sample_csv(args.sample_a, N=args.pop_n)
    big = fileio.read_big_data_csv(args.big_data, N=sample.N)
    value_col = sample.y if sample.y is not None else sample.y_star
    method = args.method

    if method == "ht":
        if value_col is None:
            raise SystemExit("ht needs a y or y_star column in the sample")
        report = ht_total(sample, value_col)
        if sample.joint_pi is not None:
            report = dataclasses.replace(
                report, variance=ht_variance_quadratic(sample, value_col)
            )
    elif method in ("pdi", "ratio", "regdi"):
        if sample.y is None:
            raise SystemExit(f"{method} needs a y column in the sample")
        delta = _aligned_delta(sample, big)
        totals = BigDataTotals(T_b=big.total, N_b=big.N_b, N=sample.N)
        if method == "pdi":
            report = pdi_total(sample, delta, sample.y, totals)
            variance = _linearized_variance(
                sample,
                sample.y,
                "standard",
                delta=delta,
                y=sample.y,
                N=sample.N,
                N_b=big.N_b,
                T_b=big.total,
            )
            report = dataclasses.replace(report, variance=variance)
        elif method == "ratio":
            report = ratio_di_total(sample, delta, sample.y, totals.T_b)
        else:
            kwargs = {
                "delta": delta,
                "N": sample.N,
                "N_b": big.N_b,
                "T_b": big.total,
            }
            if args.controls == "proxy_ystar":
                if sample.y_star is None:
                    raise SystemExit("proxy_ystar controls need a y_star column")
                kwargs["y_star"] = sample.y_star
            else:
                kwargs["y"] = sample.y
            spec = build_controls(args.controls, **kwargs)
            report = regdi_total(sample, sample.y, spec)
            variance = None
            if sample.joint_pi is not None:
                resid = regdi_residuals(sample, sample.y, spec.x)
                variance = ht_variance_quadratic(sample, resid.e_hat)
            report = dataclasses.replace(report, variance=variance)
    elif method == "two-step":
        if sample.y_star is None:
            raise SystemExit("two-step needs a y_star column in the sample")
        if sample.y is not None and sample.delta is not None:
            work = sample
        else:
            # pull the matched units' true values out of the big source
            matched_y, found = _join_big_values(sample, big)
            work = dataclasses.replace(
                sample,
                y=matched_y if sample.y is None else sample.y,
                delta=found.astype(np.int64) if sample.delta is None else sample.delta,
            )
        report = two_step_regdi(work, big, N=sample.N)
        matched = work.delta > 0
        if matched.sum() >= 2 and sample.joint_pi is not None:
            model = fit_measurement_model(
                work.y[matched], work.y_star[matched], work.d[matched]
            )
            y_hat = model.invert(work.y_star)
            spec = build_controls(
                "standard",
                delta=work.delta,
                y=work.y,
                N=sample.N,
                N_b=big.N_b,
                T_b=big.total,
            )
            resid = regdi_residuals(sample, y_hat, spec.x, kind="two_step")
            report = dataclasses.replace(
                report, variance=ht_variance_quadratic(sample, resid.e_hat)
            )
    else:  # pdi2
        pi = args.pi if args.pi is not None else big.N_b / sample.N
        fitted, _ = _fit_mixture(sample, big, pi)
        report = pdi2_total(sample, big, fitted, N=sample.N)

    _emit_estimate(report, args.out)
    return 0


def _emit_estimate(report, out) -> None:
    print(f"estimator: {report.estimator}")
    print(f"total:     {report.total!r}")
    print(f"mean:      {report.mean!r}")
    if report.variance is not None:
        print(f"variance:  {report.variance!r} (total scale)")
    if report.controls:
        print(f"controls:  {report.controls}")
    for note in report.notes:
        print(f"note:      {note}")
    if out:
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["estimator", "total", "mean", "variance", "population_size",
                 "controls", "notes"]
            )
            writer.writerow(
                [
                    report.estimator,
                    repr(report.total),
                    repr(report.mean),
                    "" if report.variance is None else repr(report.variance),
                    report.population_size,
                    report.controls or "",
                    "; ".join(report.notes),
                ]
            )
        print(f"wrote {out}")


def cmd_classify(args, parser) -> int:
    _require(args, parser, "sample_a", "big_data", "pi")
    sample = fileio.read_sample_csv(args.sample_a, N=args.pop_n)
    big = fileio.read_big_data_csv(args.big_data, N=sample.N)
    fitted, post = _fit_mixture(sample, big, args.pi)

    out = Path(args.out)
    fileio.write_labels_csv(out, sample.unit_ids, post.p_hat, post.delta_hat)
    p_big = posterior(fitted, big.z)
    big_path = out.with_name(out.stem + "_big" + out.suffix)
    fileio.write_labels_csv(big_path, big.unit_ids, p_big, classify(p_big))
    model_path = out.with_suffix(".model.txt")
    fileio.write_classifier_model(model_path, fitted)

    iters = len(post.loglik_trace) - 1
    print(
        f"fitted mixture in {iters} iterations; "
        f"final log-likelihood {post.loglik_trace[-1]:.6f}"
    )
    print(
        f"labelled {int(post.delta_hat.sum())}/{sample.n} sampled units as members "
        f"(design-weighted member share {post.design_weighted_mean:.4f})"
    )
    print(f"wrote {out}, {big_path}, {model_path}")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, commands = build_parser()

    peek = argparse.ArgumentParser(add_help=False)
    peek.add_argument("--config")
    known, _ = peek.parse_known_args(argv)
    if known.config:
        overrides = _load_config(known.config)
        for sub in commands.values():
            sub.set_defaults(**overrides)

    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    return args.func(args, commands[args.command])


if __name__ == "__main__":
    raise SystemExit(main())
