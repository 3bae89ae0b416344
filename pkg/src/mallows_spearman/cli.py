"""Command-line front end.

Subcommands: ztable (frequency-table files), simulate (draw synthetic
rankings), fit (posterior inference on a rankings CSV), elicit (prior
modes from covariates), reproduce (bundled reference studies).

Exit codes: 0 ok, 2 usage error, 3 data validation error, 4 numerical
failure.  Every command writes a run manifest sufficient to re-run it
bit-identically.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import datasets
from .dataio import (
    RunManifest,
    format_number,
    load_covariates_csv,
    load_rankings_csv,
    save_rankings_csv,
    sha256_file,
    summary_to_dict,
    trace_to_csv,
    write_json,
)
from .errors import (
    DataValidationError,
    EnumerationLimit,
    EstimateDiverged,
    GridRangeError,
    TableFormatError,
    TiesPresent,
)
from .inference import (
    McmcConfig,
    ThetaPrior,
    canonical_case,
    exact_posterior_fixed_theta,
    exact_posterior_joint,
    run_mcmc,
    summarize,
)
from .model import MmsParams, mle_rho, mle_theta, sample_exact
from .partition import (
    N_ENUM_MAX,
    build_frequency_table,
    cached_table,
    load_table,
    save_table,
)
from .perm import (
    PermutohedronPoint,
    Ranking,
    RankingSample,
    rank_vector,
    spearman_distance,
)
from .prior import EmmsPrior, elicit_from_covariates, elicit_topk

TABLE_DIR_ENV = "MALLOWS_TABLE_DIR"

DEFAULT_ITERATIONS = 55_000
DEFAULT_BURN_IN = 5_000


def _get_table(n: int):
    cache = os.environ.get(TABLE_DIR_ENV)
    if cache:
        return cached_table(n, cache)
    return build_frequency_table(n)


def _parse_ranking(text: str) -> Ranking:
    try:
        return Ranking(tuple(int(v) for v in text.replace(" ", "").split(",")))
    except ValueError as exc:
        raise ValueError(f"invalid ranking {text!r}: {exc}") from None


def _parse_item(token: str, n: int) -> int:
    token = token.strip()
    if token.isdigit():
        item = int(token)
    elif len(token) == 1 and token.isalpha():
        item = ord(token.upper()) - ord("A") + 1
    elif token.startswith("item_"):
        item = int(token[5:])
    else:
        raise ValueError(f"cannot parse item {token!r}")
    if not 1 <= item <= n:
        raise ValueError(f"item {token!r} outside 1..{n}")
    return item


def _parse_rho0(text: str, n: int):
    """Prior mode: 'barycenter', a full ranking, or top-k syntax.

    Top-k example: ``topk:1=A,2=D,3=C`` fixes the ranks of items A, D, C
    (letters or indices) and spreads the rest uniformly.
    """
    if text == "barycenter":
        return PermutohedronPoint.barycenter(n)
    if text.startswith("topk:"):
        spec = {}
        for part in text[5:].split(","):
            rank_s, _, item_s = part.partition("=")
            if not item_s:
                raise ValueError(f"bad topk entry {part!r}; expected rank=item")
            spec[_parse_item(item_s, n)] = int(rank_s)
        return elicit_topk(n, spec)
    rho = _parse_ranking(text)
    if rho.n != n:
        raise ValueError(f"prior mode has {rho.n} items, data has {n}")
    return rho


def _parse_theta_prior(text: str) -> ThetaPrior:
    if text == "jeffreys":
        return ThetaPrior.jeffreys()
    if text == "zstar":
        return ThetaPrior.zstar_proportional()
    kind, _, value = text.partition(":")
    if kind == "exp" and value:
        return ThetaPrior.exponential(float(value))
    if kind == "flat" and value:
        return ThetaPrior.flat(float(value))
    raise ValueError(
        f"invalid theta prior {text!r}; use jeffreys, exp:<rate>, flat:<hi>, zstar"
    )


def _epp_argmax(epp: dict) -> tuple[Ranking, bool]:
    best = max(epp.values())
    winners = sorted(r.ranks for r, p in epp.items() if abs(p - best) < 1e-12)
    return Ranking(winners[0]), len(winners) > 1


def _manifest(args, config: dict, seed, inputs, outputs, t0) -> RunManifest:
    return RunManifest(
        command=list(args.argv),
        config=config,
        seed=seed,
        inputs={str(p): sha256_file(p) for p in inputs},
        outputs=[str(p) for p in outputs],
        wall_time_s=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_ztable(args) -> int:
    t0 = time.perf_counter()
    n_max = args.n if args.allow_long else N_ENUM_MAX
    table = build_frequency_table(args.n, n_max=n_max)
    out = Path(args.out)
    save_table(table, out)
    manifest = _manifest(
        args, {"n": args.n, "allow_long": args.allow_long}, None, [], [out], t0
    )
    manifest.write(out.with_suffix(out.suffix + ".manifest.json"))
    print(f"wrote {out} ({len(table.entries)} distance entries)")
    return 0


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    rho = _parse_ranking(args.rho)
    table = _get_table(rho.n)
    sample = sample_exact(MmsParams(rho, args.theta), args.n_samples, table, args.seed)
    out = Path(args.out)
    save_rankings_csv(sample, out)
    config = {
        "rho": list(rho.ranks),
        "theta": args.theta,
        "n_samples": args.n_samples,
    }
    manifest = _manifest(args, config, args.seed, [], [out], t0)
    manifest.write(out.with_suffix(out.suffix + ".manifest.json"))
    print(f"wrote {out} ({sample.size} rankings of {rho.n} items)")
    return 0


def _resolve_fit_setup(args, n: int):
    """Validate flag combinations; returns (prior, theta_prior, case)."""
    if args.eta0 is not None and args.n0 is not None:
        raise ValueError("--eta0 and --n0 are mutually exclusive")
    rho0 = _parse_rho0(args.rho0, n)
    if args.n0 is not None:
        prior = EmmsPrior.theta_linked(rho0, args.n0)
        case = canonical_case(args.case) if args.case else "b_linked_exact"
        if case == "a_independent":
            raise ValueError("--n0 (theta-linked precision) requires case b or c")
    else:
        prior = EmmsPrior.fixed(rho0, args.eta0 if args.eta0 is not None else 0.0)
        case = canonical_case(args.case) if args.case else "a_independent"
        if case != "a_independent":
            raise ValueError("case b/c need a theta-linked precision; pass --n0")

    if args.fixed_theta is not None:
        return prior, None, case

    if case == "c_linked_large_n":
        if args.theta_prior not in (None, "zstar"):
            raise ValueError(
                "case c fixes the theta prior to the Z*-proportional form; "
                "drop --theta-prior or pass zstar"
            )
        theta_prior = ThetaPrior.zstar_proportional()
    else:
        theta_prior = _parse_theta_prior(args.theta_prior or "jeffreys")
        if theta_prior.kind == "zstar_proportional" and not prior.is_theta_linked:
            raise ValueError("zstar theta prior requires --n0")
    return prior, theta_prior, case


def _run_chains(sample, prior, theta_prior, base_config, table, chains, fixed_theta):
    if chains == 1:
        return [run_mcmc(sample, prior, theta_prior, base_config,
                         table, fixed_theta=fixed_theta)]
    seeds = [
        int(ss.generate_state(1)[0])
        for ss in np.random.SeedSequence(base_config.seed).spawn(chains)
    ]
    configs = [
        McmcConfig(
            iterations=base_config.iterations,
            burn_in=base_config.burn_in,
            thin=base_config.thin,
            leap_size=base_config.leap_size,
            theta_proposal_sd=base_config.theta_proposal_sd,
            adapt_during_burnin=base_config.adapt_during_burnin,
            seed=s,
            case=base_config.case,
        )
        for s in seeds
    ]
    with ThreadPoolExecutor(max_workers=min(chains, 4)) as pool:
        futures = [
            pool.submit(run_mcmc, sample, prior, theta_prior, cfg,
                        table, None, fixed_theta)
            for cfg in configs
        ]
        return [f.result() for f in futures]


def cmd_fit(args) -> int:
    t0 = time.perf_counter()
    sample, n = load_rankings_csv(args.data)
    table = _get_table(n)
    prior, theta_prior, case = _resolve_fit_setup(args, n)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    outputs = []

    config_echo = {
        "data": str(args.data),
        "n_items": n,
        "n_observations": sample.size,
        "rho0": [format_number(c) for c in prior.rho0.coords],
        "eta0": prior.eta0,
        "n0": prior.n0,
        "case": case,
        "theta_prior": args.theta_prior or ("zstar" if case == "c_linked_large_n" else "jeffreys"),
        "fixed_theta": args.fixed_theta,
        "exact": args.exact,
    }

    if args.exact:
        if args.fixed_theta is not None:
            epp = exact_posterior_fixed_theta(sample, args.fixed_theta, prior)
            theta_mean, theta_ci = args.fixed_theta, (args.fixed_theta, args.fixed_theta)
        else:
            joint = exact_posterior_joint(sample, prior, theta_prior, table=table)
            epp = joint.epp
            theta_mean, theta_ci = joint.theta_mean, joint.theta_interval()
        map_ranking, tied = _epp_argmax(epp)
        summary = {
            "method": "exact",
            "epp": {" ".join(map(str, r.ranks)): p for r, p in
                    sorted(epp.items(), key=lambda kv: (-kv[1], kv[0].ranks))},
            "map_ranking": " ".join(map(str, map_ranking.ranks)),
            "map_tied": tied,
            "theta_mean": theta_mean,
            "theta_ci": list(theta_ci),
            "config": config_echo,
            "seed": None,
        }
        summary_path = Path(f"{prefix}_summary.json")
        write_json(summary, summary_path)
        outputs.append(summary_path)
        print(f"exact posterior written to {summary_path}")
    else:
        base_config = McmcConfig(
            iterations=args.iterations,
            burn_in=args.burn_in,
            thin=args.thin,
            leap_size=args.leap,
            theta_proposal_sd=args.proposal_sd,
            adapt_during_burnin=not args.no_adapt,
            seed=args.seed,
            case=case,
        )
        config_echo["mcmc"] = {
            "iterations": args.iterations,
            "burn_in": args.burn_in,
            "thin": args.thin,
            "leap_size": args.leap,
            "theta_proposal_sd": args.proposal_sd,
            "adapt_during_burnin": not args.no_adapt,
            "chains": args.chains,
        }
        traces = _run_chains(
            sample, prior, theta_prior, base_config, table,
            args.chains, args.fixed_theta,
        )
        for idx, trace in enumerate(traces):
            suffix = f"_trace_chain{idx}.csv" if len(traces) > 1 else "_trace.csv"
            path = Path(f"{prefix}{suffix}")
            trace_to_csv(trace, path)
            outputs.append(path)
        summaries = [summarize(t) for t in traces]
        if len(traces) > 1:
            keys = {r for s in summaries for r in s.epp}
            cross = max(
                max(s.epp.get(r, 0.0) for s in summaries)
                - min(s.epp.get(r, 0.0) for s in summaries)
                for r in keys
            )
        else:
            cross = None
        pooled_rho = tuple(r for t in traces for r in t.rho_states)
        pooled_theta = tuple(v for t in traces for v in t.theta_states)
        from .inference import McmcTrace

        pooled = McmcTrace(
            rho_states=pooled_rho,
            theta_states=pooled_theta,
            accept_rho=float(np.mean([t.accept_rho for t in traces])),
            accept_theta=float(np.mean([t.accept_theta for t in traces])),
        )
        summary = summary_to_dict(summarize(pooled), pooled)
        summary["method"] = "mcmc"
        summary["config"] = config_echo
        summary["seed"] = args.seed
        if cross is not None:
            summary["cross_chain_max_epp_gap"] = cross
        summary_path = Path(f"{prefix}_summary.json")
        write_json(summary, summary_path)
        outputs.append(summary_path)
        print(
            f"mcmc fit written to {summary_path} "
            f"(accept rho {pooled.accept_rho:.2f}, theta {pooled.accept_theta:.2f})"
        )

    manifest = _manifest(args, config_echo, args.seed, [args.data], outputs, t0)
    manifest_path = Path(f"{prefix}_manifest.json")
    manifest.write(manifest_path)
    return 0


def _parse_orientations(text, names):
    orient = {name: "higher_is_better" for name in names}
    if text:
        for part in text.split(","):
            name, _, direction = part.partition("=")
            name = name.strip()
            if name not in orient:
                raise ValueError(f"unknown covariate {name!r} in --orient")
            if direction not in ("higher", "lower"):
                raise ValueError(f"orientation must be higher|lower, got {direction!r}")
            orient[name] = f"{direction}_is_better"
    return [orient[name] for name in names]


def cmd_elicit(args) -> int:
    t0 = time.perf_counter()
    items, names, matrix = load_covariates_csv(args.covariates)
    orientations = _parse_orientations(args.orient, names)
    columns, rho01 = elicit_from_covariates(matrix, orientations)
    rho02 = rank_vector(rho01, ties="midrank")
    report = {
        "items": items,
        "covariates": names,
        "orientations": orientations,
        "rank_vectors": {
            name: [format_number(c) for c in col.coords]
            for name, col in zip(names, columns)
        },
        "rho01": [format_number(c) for c in rho01.coords],
        "rho02": [format_number(c) for c in rho02.coords],
    }
    out = Path(args.out)
    write_json(report, out)
    manifest = _manifest(
        args,
        {"covariates": str(args.covariates), "orientations": orientations},
        None,
        [args.covariates],
        [out],
        t0,
    )
    manifest.write(out.with_suffix(out.suffix + ".manifest.json"))
    print(f"wrote {out}")
    return 0


def _reproduce_table1(args, out_dir: Path, t0) -> int:
    table = _get_table(4)
    rho_true = Ranking(datasets.SIMSTUDY_TRUE_RHO)
    rho0 = Ranking(datasets.SIMSTUDY_RHO0)
    sample = sample_exact(
        MmsParams(rho_true, datasets.SIMSTUDY_TRUE_THETA),
        datasets.SIMSTUDY_N,
        table,
        datasets.SIMSTUDY_SEED,
    )
    rankings = sorted(datasets.SIMSTUDY_REFERENCE_TABLE)
    n0_settings = datasets.SIMSTUDY_N0_SETTINGS
    epp_cols = []
    theta_means = []
    modal = []
    for idx, n0 in enumerate(n0_settings):
        prior = EmmsPrior.theta_linked(rho0, n0)
        config = McmcConfig(
            iterations=args.iterations,
            burn_in=args.burn_in,
            seed=args.seed + idx,
            case="b_linked_exact",
        )
        trace = run_mcmc(sample, prior, ThetaPrior.jeffreys(), config, table)
        summ = summarize(trace)
        epp_cols.append({r: summ.epp.get(Ranking(r), 0.0) for r in rankings})
        theta_means.append(summ.theta_mean)
        modal.append(summ.map_ranking)

    max_delta = 0.0
    lines = []
    header = ["rho", "D", "D*"] + [f"N0={v}" for v in n0_settings]
    lines.append("  ".join(f"{h:>10}" for h in header))
    csv_rows = [["rho", "D", "Dstar"]
                + [f"epp_n0_{v}" for v in n0_settings]
                + [f"delta_n0_{v}" for v in n0_settings]]
    for r in rankings:
        d_ref, dstar_ref, ref_epps = datasets.SIMSTUDY_REFERENCE_TABLE[r]
        d_val = sum(spearman_distance(row, Ranking(r)) for row in sample)
        dstar_val = spearman_distance(rho0, Ranking(r))
        cells = [epp_cols[i][r] for i in range(len(n0_settings))]
        deltas = [c - ref for c, ref in zip(cells, ref_epps)]
        max_delta = max(max_delta, max(abs(x) for x in deltas))
        label = ",".join(map(str, r))
        lines.append(
            "  ".join(
                [f"{label:>10}", f"{d_val:>10}", f"{dstar_val:>10}"]
                + [f"{c:>10.3f}" for c in cells]
            )
        )
        csv_rows.append(
            [" ".join(map(str, r)), d_val, dstar_val]
            + [repr(c) for c in cells]
            + [repr(dl) for dl in deltas]
        )

    epp_path = out_dir / "table1_epp.csv"
    with epp_path.open("w", newline="") as fh:
        import csv as _csv

        _csv.writer(fh).writerows(csv_rows)

    theta_hat = mle_theta(sample, mle_rho(sample), table)
    summary = {
        "n0_settings": list(n0_settings),
        "theta_means": theta_means,
        "reference_theta_means": list(datasets.SIMSTUDY_REFERENCE_THETA_MEANS),
        "theta_mle": theta_hat,
        "modal_per_column": [" ".join(map(str, m.ranks)) for m in modal],
        "max_abs_epp_delta": max_delta,
        "sample_mean": [repr(v) for v in sample.as_array().mean(axis=0)],
        "data_seed": datasets.SIMSTUDY_SEED,
    }
    summary_path = out_dir / "table1_summary.json"
    write_json(summary, summary_path)

    print("\n".join(lines))
    print(f"\nmax |EPP - reference| over all cells: {max_delta:.4f}")
    print(f"theta posterior means: {[round(v, 4) for v in theta_means]}")
    print(f"theta MLE: {theta_hat:.4f}")

    config = {
        "target": "table1",
        "iterations": args.iterations,
        "burn_in": args.burn_in,
        "data_seed": datasets.SIMSTUDY_SEED,
    }
    manifest = _manifest(args, config, args.seed, [], [epp_path, summary_path], t0)
    manifest.write(out_dir / "table1_manifest.json")
    return 0


def _reproduce_sushi(args, out_dir: Path, t0) -> int:
    columns, rho01 = elicit_from_covariates(
        datasets.SUSHI_COVARIATES, datasets.SUSHI_ORIENTATIONS
    )
    rho02 = rank_vector(rho01, ties="midrank")

    rendered = [
        [format_number(col.coords[i]) for col in columns]
        for i in range(len(datasets.SUSHI_ITEMS))
    ]
    reference = [
        [format_number(v) for v in row] for row in datasets.SUSHI_REFERENCE_RANKS
    ]
    rho01_rendered = [format_number(v) for v in rho01.coords]
    rho02_rendered = [format_number(v) for v in rho02.coords]
    exact_match = (
        rendered == reference
        and rho01_rendered == [format_number(v) for v in datasets.SUSHI_RHO01]
        and rho02_rendered == [format_number(v) for v in datasets.SUSHI_RHO02]
    )

    ranks_path = out_dir / "sushi_ranks.csv"
    with ranks_path.open("w", newline="") as fh:
        import csv as _csv

        writer = _csv.writer(fh)
        writer.writerow(("item",) + datasets.SUSHI_COVARIATE_NAMES)
        for item, row in zip(datasets.SUSHI_ITEMS, rendered):
            writer.writerow([item] + row)

    summary = {
        "rank_vectors": {
            name: [row[j] for row in rendered]
            for j, name in enumerate(datasets.SUSHI_COVARIATE_NAMES)
        },
        "rho01": rho01_rendered,
        "rho02": rho02_rendered,
        "matches_reference": exact_match,
    }
    summary_path = out_dir / "sushi_summary.json"
    write_json(summary, summary_path)

    width = max(len(i) for i in datasets.SUSHI_ITEMS)
    print(f"{'item':<{width}}  " + "  ".join(f"{n:>6}" for n in datasets.SUSHI_COVARIATE_NAMES))
    for item, row in zip(datasets.SUSHI_ITEMS, rendered):
        print(f"{item:<{width}}  " + "  ".join(f"{v:>6}" for v in row))
    print(f"rho01: {rho01_rendered}")
    print(f"rho02: {rho02_rendered}")
    print(f"matches reference: {exact_match}")

    manifest = _manifest(
        args, {"target": "sushi"}, None, [], [ranks_path, summary_path], t0
    )
    manifest.write(out_dir / "sushi_manifest.json")
    return 0 if exact_match else 4


def cmd_reproduce(args) -> int:
    t0 = time.perf_counter()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.target == "table1":
        return _reproduce_table1(args, out_dir, t0)
    return _reproduce_sushi(args, out_dir, t0)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mallows",
        description="Bayesian inference for the Spearman-distance ranking model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ztable", help="build and save a distance-frequency table")
    p.add_argument("-n", type=int, required=True, help="number of items")
    p.add_argument("--out", required=True, help="output table file")
    p.add_argument(
        "--allow-long",
        action="store_true",
        help=f"permit n beyond the default limit {N_ENUM_MAX} (slow)",
    )
    p.set_defaults(func=cmd_ztable)

    p = sub.add_parser("simulate", help="draw rankings from the model")
    p.add_argument("--rho", required=True, help="consensus ranking, e.g. 2,1,4,3")
    p.add_argument("--theta", type=float, required=True, help="concentration >= 0")
    p.add_argument("--n-samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output rankings CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="posterior inference on a rankings CSV")
    p.add_argument("--data", required=True, help="rankings CSV")
    p.add_argument(
        "--rho0",
        default="barycenter",
        help="prior mode: ranking, topk:1=A,2=C syntax, or 'barycenter'",
    )
    p.add_argument("--eta0", type=float, help="fixed prior precision (case a)")
    p.add_argument("--n0", type=float, help="prior sample size (precision theta*n0)")
    p.add_argument(
        "--theta-prior",
        help="jeffreys (default), exp:<rate>, flat:<hi>, or zstar",
    )
    p.add_argument("--case", choices=["a", "b", "c"], help="inference case")
    p.add_argument("--fixed-theta", type=float, help="skip theta updates")
    p.add_argument(
        "--exact",
        action="store_true",
        help="exact enumeration instead of MCMC (small n only)",
    )
    p.add_argument("--iterations", type=int, default=DEFAULT_ITERATIONS)
    p.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--leap", type=int, default=1, help="leap-and-shift window")
    p.add_argument("--proposal-sd", type=float, default=0.3)
    p.add_argument("--no-adapt", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("elicit", help="prior modes from an item covariate CSV")
    p.add_argument("--covariates", required=True, help="covariates CSV")
    p.add_argument(
        "--orient",
        help="comma list name=higher|lower (default: higher for every covariate)",
    )
    p.add_argument("--out", required=True, help="output report JSON")
    p.set_defaults(func=cmd_elicit)

    p = sub.add_parser("reproduce", help="re-run a bundled reference study")
    p.add_argument("target", choices=["table1", "sushi"])
    p.add_argument("--out-dir", default="reproduction")
    p.add_argument("--iterations", type=int, default=DEFAULT_ITERATIONS)
    p.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN)
    p.add_argument("--seed", type=int, default=0, help="chain seed base")
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except (DataValidationError, TableFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (EstimateDiverged, GridRangeError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except (ValueError, EnumerationLimit, TiesPresent) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
