"""Experiment orchestration: configs, reproducible parallel runs, persistence.

A run is a pure function of its configuration: replicate i draws from the
derived seed hash(master_seed, i), workers only change scheduling, and the
aggregate is computed from rows sorted by replicate index, so outputs are
byte-identical for any worker count.  Interrupted runs resume from the
per-replicate CSV, completing exactly the missing replicates.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .asymptotics import v_infinity
from .hermite import i2d_lower_bound
from .kernel import QuadratureSpec, kac_rice_report
from .parallel import deterministic_map
from .rootcount import MomentEstimate, _count_one, summarize_counts
from .seeds import derive_seed

ENV_PREFIX = "KSSLAB_"  # environment overrides: KSSLAB_<KEY> (upper-case key)
SCHEMA_VERSION = 1

__all__ = [
    "ExperimentConfig",
    "MomentEstimate",
    "run_experiment",
    "compare_routes",
    "load_config",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration of a Monte Carlo root-count experiment."""

    m: int = 1
    d_list: tuple[int, ...] = (10,)
    n_samples: int = 1000
    master_seed: int = 0
    workers: int = 1
    strict: bool = False
    out_dir: str = "runs"
    counter_method: str = "auto"
    quad_tol: float = 1e-8
    g_pairs: int = 2_000_000
    g_nodes: int = 200
    quad_z_cut: float = 12.0
    quad_z0: float = 0.05

    def __post_init__(self):
        if self.m < 1 or self.n_samples < 2 or self.workers < 1:
            raise ValueError("budgets must be positive (m, n_samples, workers)")
        if any(d <= 1 for d in self.d_list):
            raise ValueError("every degree must be > 1")
        if any(a >= b for a, b in zip(self.d_list, self.d_list[1:])):
            raise ValueError("d_list must be strictly increasing")
        if self.quad_tol <= 0 or self.g_pairs < 100 or self.g_nodes < 10:
            raise ValueError("invalid quadrature budgets")

    def quadrature_spec(self) -> QuadratureSpec:
        return QuadratureSpec(
            tol=self.quad_tol,
            n_g_nodes=self.g_nodes,
            g_pairs=self.g_pairs,
            z_cut=self.quad_z_cut,
            z0_series=self.quad_z0,
        )

    # -- flat key/value persistence -----------------------------------------

    def to_text(self) -> str:
        lines = []
        for k, v in asdict(self).items():
            if k == "d_list":
                v = ",".join(str(x) for x in v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        raw: dict[str, str] = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {line!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            raw[k] = v
        return cls(**_coerce_fields(raw))


def _coerce_fields(raw: dict[str, str]) -> dict:
    out: dict = {}
    types = ExperimentConfig.__dataclass_fields__
    for k, v in raw.items():
        if k not in types:
            raise ValueError(f"unknown config key {k!r}")
        if k == "d_list":
            out[k] = tuple(int(x) for x in v.split(",") if x.strip())
        elif k == "strict":
            out[k] = v.lower() in ("1", "true", "yes")
        elif types[k].type in ("int",):
            out[k] = int(v)
        elif types[k].type in ("float",):
            out[k] = float(v)
        else:
            out[k] = v
    return out


def load_config(path: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Config from file plus environment (KSSLAB_*) plus explicit overrides."""
    raw: dict[str, str] = {}
    if path:
        raw.update(
            {
                k: v
                for k, v in (
                    _parse_line(line)
                    for line in Path(path).read_text().splitlines()
                    if line.split("#", 1)[0].strip()
                )
            }
        )
    for key in ExperimentConfig.__dataclass_fields__:
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            raw[key] = env
    cfg = ExperimentConfig(**_coerce_fields(raw))
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def _parse_line(line: str) -> tuple[str, str]:
    k, v = line.split("#", 1)[0].split("=", 1)
    return k.strip(), v.strip()


# ---------------------------------------------------------------------------
# running


@dataclass(frozen=True)
class RunResult:
    estimates: dict[int, MomentEstimate]  # by degree
    csv_path: str
    json_path: str
    failed: tuple[int, ...]


def _replicate_rows_path(out: Path, cfg: ExperimentConfig, d: int) -> Path:
    return out / f"replicates_m{cfg.m}_d{d}.csv"


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    """Run (or resume) the configured replicates and write reports.

    Writes one per-replicate CSV per degree (seed, m, d, count, certified,
    unresolved_regions, wall_time_ms) and one aggregate JSON; the JSON
    contains no timing, so it is byte-identical across worker counts.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    estimates: dict[int, MomentEstimate] = {}
    ag: dict = {
        "schema_version": SCHEMA_VERSION,
        "m": cfg.m,
        "master_seed": cfg.master_seed,
        "n_samples": cfg.n_samples,
        "counter_method": cfg.counter_method,
        "per_degree": {},
    }
    failed: list[int] = []
    for d in cfg.d_list:
        rows = _run_degree(cfg, d, out)
        counts = np.array([r["count"] for r in rows], dtype=float)
        cert = np.array([r["certified"] for r in rows], dtype=bool)
        est = summarize_counts(counts, cert, wall_time=sum(r["wall_time_ms"] for r in rows) / 1e3)
        estimates[d] = est
        ag["per_degree"][str(d)] = {
            "mean": est.mean,
            "variance": est.variance,
            "se_mean": est.se_mean,
            "se_variance": est.se_variance,
            "n": est.n,
            "uncertified_fraction": est.uncertified_fraction,
            "mean_scaled": est.mean / d ** (cfg.m / 2),
            "variance_scaled": est.variance / d ** (cfg.m / 2),
        }
        if cfg.strict and est.uncertified_fraction > 0:
            failed.append(d)
    json_path = out / f"aggregate_m{cfg.m}.json"
    json_path.write_text(json.dumps(ag, indent=2, sort_keys=True) + "\n")
    if failed and cfg.strict:
        manifest = out / "failure_manifest.json"
        manifest.write_text(json.dumps({"uncertified_degrees": failed}) + "\n")
        raise RuntimeError(f"uncertified counts at degrees {failed} (strict mode)")
    return RunResult(
        estimates=estimates,
        csv_path=str(out),
        json_path=str(json_path),
        failed=tuple(failed),
    )


_CSV_FIELDS = ["replicate", "seed", "m", "d", "count", "certified", "unresolved_regions", "wall_time_ms"]


def _run_degree(cfg: ExperimentConfig, d: int, out: Path) -> list[dict]:
    path = _replicate_rows_path(out, cfg, d)
    done: dict[int, dict] = {}
    if path.exists():
        with path.open() as fh:
            for row in csv.DictReader(fh):
                done[int(row["replicate"])] = {
                    "replicate": int(row["replicate"]),
                    "seed": int(row["seed"]),
                    "count": int(row["count"]),
                    "certified": row["certified"] == "True",
                    "unresolved_regions": int(row["unresolved_regions"]),
                    "wall_time_ms": float(row["wall_time_ms"]),
                }
    missing = [i for i in range(cfg.n_samples) if i not in done]
    if missing:
        tasks = [(cfg.m, d, derive_seed(cfg.master_seed, d, i), cfg.counter_method) for i in missing]
        results = deterministic_map(_count_one, tasks, workers=cfg.workers)
        for i, (count, certified, unresolved, wall) in zip(missing, results):
            done[i] = {
                "replicate": i,
                "seed": derive_seed(cfg.master_seed, d, i),
                "count": count,
                "certified": certified,
                "unresolved_regions": unresolved,
                "wall_time_ms": wall * 1e3,
            }
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=_CSV_FIELDS)
            writer.writeheader()
            for i in range(cfg.n_samples):
                row = dict(done[i])
                row["m"] = cfg.m
                row["d"] = d
                writer.writerow({k: row[k] for k in _CSV_FIELDS})
    return [done[i] for i in range(cfg.n_samples)]


# ---------------------------------------------------------------------------
# route comparison


def compare_routes(m: int, d_list, cfg: ExperimentConfig | None = None) -> dict:
    """Monte Carlo vs Kac-Rice scaled variance per degree, plus limit rows.

    One row per degree with the scaled MC variance and its SE, the
    quadrature value, and the gap in combined SEs; final rows report the
    limit variance and the degree-two chaos lower bound.  Rows whose gap
    exceeds three combined errors are flagged.
    """
    cfg = cfg or ExperimentConfig(m=m, d_list=tuple(d_list))
    cfg = replace(cfg, m=m, d_list=tuple(sorted(d_list)))
    run = run_experiment(cfg)
    spec = cfg.quadrature_spec()
    rows = []
    for d in cfg.d_list:
        est = run.estimates[d]
        scale = d ** (m / 2)
        rep = kac_rice_report(d, m, spec, seed=cfg.master_seed)
        mc_v = est.variance / scale
        se = est.se_variance / scale
        combined = math.sqrt(se * se + rep.mc_error**2 + rep.quadrature_error**2)
        gap = abs(mc_v - rep.value)
        rows.append(
            {
                "d": d,
                "mc_mean_scaled": est.mean / scale,
                "mc_mean_se": est.se_mean / scale,
                "mc_var_scaled": mc_v,
                "mc_var_se": se,
                "kac_rice": rep.value,
                "kac_rice_error": rep.quadrature_error + rep.mc_error,
                "gap_over_se": gap / combined if combined else float("inf"),
                "flag": gap > 3 * combined,
            }
        )
    vinf, vinf_err = v_infinity(m, seed=cfg.master_seed)
    i2d, i2d_se = i2d_lower_bound(max(cfg.d_list), m, seed=cfg.master_seed)
    return {
        "m": m,
        "rows": rows,
        "v_infinity": vinf,
        "v_infinity_error": vinf_err,
        "i2d_lower_bound": i2d,
        "i2d_se": i2d_se,
    }
