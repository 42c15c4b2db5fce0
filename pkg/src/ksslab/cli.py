"""Command line interface.

Subcommands: sample, count, mc-moments, kac-rice, v-inf, hermite-check,
compare.  Shared flags: --m --d --n --seed --workers --strict --config
--out; configuration files are flat key = value text and every key can be
overridden by a KSSLAB_<KEY> environment variable.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .asymptotics import v_infinity_report
from .engine import ExperimentConfig, compare_routes, load_config, run_experiment
from .hermite import b_coefficient, f_coefficient, f_tilde_22
from .kernel import kac_rice_report
from .rootcount import count_system, count_univariate
from .systems import KssSystem, sample_system


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--m", type=int, default=None)
    parser.add_argument("--d", type=int, nargs="+", default=None)
    parser.add_argument("--n", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--strict", action="store_true")
    parser.add_argument("--config", type=str, default=None)
    parser.add_argument("--out", type=str, default=None)


def _config_from(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    over = {}
    if args.m is not None:
        over["m"] = args.m
    if args.d is not None:
        over["d_list"] = tuple(sorted(args.d))
    if args.n is not None:
        over["n_samples"] = args.n
    if args.seed is not None:
        over["master_seed"] = args.seed
    if args.workers is not None:
        over["workers"] = args.workers
    if args.strict:
        over["strict"] = True
    if args.out is not None:
        over["out_dir"] = args.out
    return replace(cfg, **over)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="ksslab",
        description="Sample KSS random polynomial systems, count their real "
        "roots exactly, and cross-validate three root-count variance routes.",
    )
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name in ("sample", "count", "mc-moments", "kac-rice", "v-inf", "hermite-check", "compare"):
        p = sub.add_parser(name)
        _common(p)
        if name == "sample":
            p.add_argument("--json", type=str, default=None, help="write the system JSON here")
        if name == "count":
            p.add_argument("--json", type=str, default=None, help="read a system JSON instead of sampling")
    args = ap.parse_args(argv)
    cfg = _config_from(args)

    if args.cmd == "sample":
        system = sample_system(cfg.m, cfg.d_list[0], cfg.master_seed)
        text = system.to_json()
        if args.json:
            Path(args.json).write_text(text + "\n")
        else:
            print(text)
        return 0

    if args.cmd == "count":
        if args.json:
            system = KssSystem.from_json(Path(args.json).read_text())
        else:
            system = sample_system(cfg.m, cfg.d_list[0], cfg.master_seed)
        res = (
            count_univariate(system.coefficients[0], method=cfg.counter_method)
            if system.m == 1
            else count_system(system)
        )
        print(
            json.dumps(
                {
                    "count": res.count,
                    "certified": res.certified,
                    "unresolved_regions": res.unresolved_regions,
                    "bezout_cap": res.bezout_cap,
                    "method": res.method,
                }
            )
        )
        return 0 if (res.certified or not cfg.strict) else 1

    if args.cmd == "mc-moments":
        run = run_experiment(cfg)
        for d, est in sorted(run.estimates.items()):
            print(
                f"m={cfg.m} d={d} n={est.n}: mean={est.mean:.6f} var={est.variance:.6f} "
                f"mean/d^(m/2)={est.mean / d ** (cfg.m / 2):.6f} "
                f"+- {3 * est.se_mean / d ** (cfg.m / 2):.6f} (3SE) "
                f"uncertified={est.uncertified_fraction:.4f}"
            )
        print(f"aggregate: {run.json_path}")
        return 0

    if args.cmd == "kac-rice":
        writer = csv.writer(sys.stdout)
        writer.writerow(["d", "m", "variance_finite_d", "quadrature_error", "g_se_max"])
        for d in cfg.d_list:
            rep = kac_rice_report(d, cfg.m, cfg.quadrature_spec(), seed=cfg.master_seed)
            writer.writerow([d, cfg.m, f"{rep.value:.10f}", f"{rep.quadrature_error:.3e}", f"{rep.g_se_max:.3e}"])
        return 0

    if args.cmd == "v-inf":
        rep = v_infinity_report(cfg.m, seed=cfg.master_seed)
        print(
            json.dumps(
                {
                    "m": cfg.m,
                    "value": rep.value,
                    "quadrature_error": rep.quadrature_error,
                    "mc_error": rep.mc_error,
                    "nodes": rep.nodes,
                }
            )
        )
        return 0

    if args.cmd == "hermite-check":
        m = cfg.m
        ft_m, ft_m_se = f_tilde_22(m, seed=cfg.master_seed)
        ft_e, ft_e_se = f_tilde_22(m, seed=cfg.master_seed, normalization="expansion")
        f0 = f_coefficient(np.zeros(m * m, dtype=int), m, seed=cfg.master_seed)
        print(
            json.dumps(
                {
                    "m": m,
                    "b0": b_coefficient((0,) * m),
                    "f0": {"estimate": f0[0], "se": f0[1]},
                    "f_tilde_22_moment": {"estimate": ft_m, "se": ft_m_se},
                    "f_tilde_22_expansion": {"estimate": ft_e, "se": ft_e_se},
                }
            )
        )
        return 0

    if args.cmd == "compare":
        table = compare_routes(cfg.m, cfg.d_list, cfg)
        hdr = f"{'d':>7} {'mean/d^(m/2)':>13} {'MC var':>10} {'+-SE':>9} {'Kac-Rice':>10} {'gap/SE':>7} flag"
        print(hdr)
        for row in table["rows"]:
            print(
                f"{row['d']:>7} {row['mc_mean_scaled']:>13.5f} {row['mc_var_scaled']:>10.5f} "
                f"{row['mc_var_se']:>9.5f} {row['kac_rice']:>10.5f} {row['gap_over_se']:>7.2f} "
                f"{'!' if row['flag'] else ''}"
            )
        print(
            f"v_infinity({table['m']}) = {table['v_infinity']:.6f} +- {table['v_infinity_error']:.1e}; "
            f"i2d lower bound = {table['i2d_lower_bound']:.6f} +- {table['i2d_se']:.1e}"
        )
        flagged = [r["d"] for r in table["rows"] if r["flag"]]
        return 1 if flagged and cfg.strict else 0

    return 2


if __name__ == "__main__":
    raise SystemExit(main())
