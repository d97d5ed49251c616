"""Job orchestration: each command turns a config and a series into report documents."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Optional

import numpy as np

from . import gibbs_mean, gibbs_variance
from .backtest import rolling_backtest
from .config import RunConfig, a_parameterization, to_ini
from .errors import UsageError
from .io import ReturnSeries, export_histogram, write_report, write_table
from .outliers import detect_outliers, outlier_stability
from .partition import partition_frequencies
from .rand import stream_rng
from .var import aggregate_returns, ml_normal_var, var_estimate

COMMANDS = ("estimate", "backtest", "outliers", "sensitivity", "aggregate")
TOP_PARTITIONS = 10


class JobResult:
    """A report document plus named tables, writable to a directory."""

    def __init__(self, command: str, report: dict, tables: Optional[dict[str, list[dict]]] = None):
        self.command = command
        self.report = report
        self.tables = tables or {}

    def write(self, output_dir) -> list[str]:
        os.makedirs(output_dir, exist_ok=True)
        paths = [os.path.join(output_dir, f"{self.command}_report.json")]
        write_report(paths[0], self.report)
        for name, rows in sorted(self.tables.items()):
            path = os.path.join(output_dir, f"{self.command}_{name}.csv")
            write_table(path, rows)
            paths.append(path)
        return paths


def _fit(y, model: str, cfg: RunConfig, store: bool = False, mean=None, variance=None):
    if model == "mu-ppm":
        return gibbs_mean.run_chain(y, mean or cfg.mean, cfg.mcmc, store=store,
                                    fit_scale=cfg.model.fit_scale)
    if model == "sigma2-ppm":
        return gibbs_variance.run_chain(y, variance or cfg.variance, cfg.mcmc, store=store,
                                        fit_scale=cfg.model.fit_scale)
    raise UsageError(f"model {model!r} has no sampler", module="jobs")


def _minor_clusters(p) -> str:
    """Clusters other than the largest, which would usually list every index."""
    sizes = p.sizes
    big = sizes.index(max(sizes))
    rest = [cl for d, cl in enumerate(p.clusters) if d != big]
    return " ".join("{" + ";".join(map(str, cl)) + "}" for cl in rest)


def _estimate(cfg: RunConfig, y: np.ndarray, h: int):
    reports, tables = [], {}
    for model in cfg.model.models:
        if model == "ml-normal":
            for k, alpha in enumerate(cfg.run.alphas):
                rep = ml_normal_var(y, alpha, cfg.run.bootstrap_reps, stream_rng(cfg.mcmc.seed, k),
                                    horizon_days=h)
                reports.append(rep.summary())
            continue
        draws = _fit(y, model, cfg, store=True)
        freq = partition_frequencies(draws.partitions)[:TOP_PARTITIONS]
        tables[f"{model}_partitions"] = [
            {"rank": r, "frequency": f, "n_clusters": len(p), "sizes": " ".join(map(str, p.sizes)),
             "minor_clusters": _minor_clusters(p)}
            for r, (p, f) in enumerate(freq)
        ]
        for alpha in cfg.run.alphas:
            rep = var_estimate(draws, alpha, horizon_days=h)
            reports.append(rep.summary())
            hist = export_histogram(rep.draws, cfg.run.histogram_bins)
            tag = f"{alpha:g}".replace(".", "p")
            tables[f"{model}_hist_{tag}"] = hist.rows()
    return {"var": reports}, tables


def _backtest(cfg: RunConfig, y: np.ndarray):
    reports, tables = [], {}
    for model in cfg.model.models:
        for alpha in cfg.run.alphas:
            rep = rolling_backtest(y, model, cfg.backtest.window, alpha, cfg.backtest_mcmc,
                                   cfg.mean, cfg.variance, cfg.model.fit_scale, cfg.run.workers)
            reports.append(rep.summary())
            tables[f"{model}_{alpha:g}".replace(".", "p")] = rep.stage_table()
    return {"backtests": reports}, tables


def _outliers(cfg: RunConfig, y: np.ndarray, dates):
    kw = dict(p=cfg.score, mcmc_full=cfg.mcmc, mcmc_conditional=cfg.conditional_mcmc,
              fit_scale=cfg.model.fit_scale, workers=cfg.run.workers)
    res = detect_outliers(y, cfg.mean, **kw)
    doc = {
        "best_partition_sizes": list(res.best_partition.sizes),
        "n_clusters": len(res.best_partition),
        "score": res.score,
        "outlier_indices": list(res.outlier_indices),
        "n_candidates": len(res.candidates),
    }
    if dates is not None:
        doc["outlier_dates"] = [dates[i] for i in res.outlier_indices]
    tables = {"candidates": [
        {"rank": r["rank"], "clusters": r["clusters"], "score": r["score"], "sigma_sq": r["sigma_sq"],
         "minor_clusters": _minor_clusters(c.partition)}
        for r, c in zip(res.table(), res.candidates)
    ]}
    if cfg.run.stability:
        rows = outlier_stability(y, cfg.sensitivity.c_grid, cfg.mean, **kw)
        doc["stability"] = [
            {"c": r.c, "outlier_indices": list(r.outlier_indices), "n_flagged": len(r.outlier_indices),
             "n_clusters": r.n_clusters, "score": r.score}
            for r in rows
        ]
    return doc, tables


def _sensitivity(cfg: RunConfig, y: np.ndarray, h: int):
    points = []
    for model in cfg.model.models:
        if model == "ml-normal":
            continue
        for c in cfg.sensitivity.c_grid:
            points.append(("c", float(c), model, replace(cfg.mean, c=float(c)),
                           replace(cfg.variance, c=float(c))))
        for a in cfg.sensitivity.a_grid:
            lam, nu = a_parameterization(float(a))
            points.append(("a", float(a), model, replace(cfg.mean, lambda0=lam, nu0=nu),
                           replace(cfg.variance, lambda0=lam, nu0=nu)))

    def run(point):
        param, value, model, mh, vh = point
        draws = _fit(y, model, cfg, mean=mh, variance=vh)
        stats = draws.cluster_stats()
        rows = []
        for alpha in cfg.run.alphas:
            rep = var_estimate(draws, alpha, horizon_days=h)
            rows.append({"parameter": param, "value": value, "model": model, "alpha": alpha,
                         "point": rep.point, "interval_lo": rep.interval_lo,
                         "interval_hi": rep.interval_hi,
                         "mean_cluster_count": stats.mean_cluster_count})
        return rows

    if cfg.run.workers > 1:
        with ThreadPoolExecutor(cfg.run.workers) as pool:
            results = list(pool.map(run, points))
    else:
        results = [run(p) for p in points]
    rows = [r for block in results for r in block]
    return {"n_rows": len(rows)}, {"grid": rows}


def run_job(cfg: RunConfig, command: str, series: ReturnSeries,
            output_dir=None) -> JobResult:
    """Run one command and optionally write its report and tables to ``output_dir``."""
    if command not in COMMANDS:
        raise UsageError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}", module="jobs")
    h = cfg.run.horizon_days
    y = series.returns
    dates = series.dates
    if h > 1 and command != "backtest":
        y = aggregate_returns(y, h)
        if dates is not None:
            dates = dates[len(dates) - y.size * h + h - 1::h]
    if command == "aggregate":
        body, tables = {"n_rows": int(y.size)}, {"returns": [
            {"index": i, "date": "" if dates is None else dates[i], "return": float(v)}
            for i, v in enumerate(y)
        ]}
    elif command == "estimate":
        body, tables = _estimate(cfg, y, h)
    elif command == "backtest":
        body, tables = _backtest(cfg, y)
    elif command == "outliers":
        body, tables = _outliers(cfg, y, dates)
    else:
        body, tables = _sensitivity(cfg, y, h)
    report = {
        "command": command,
        "seed": cfg.mcmc.seed,
        "n_returns": int(series.returns.size),
        "n_used": int(y.size),
        "skipped_rows": series.skipped,
        "source": series.source,
        "config": cfg.as_dict(),
        "config_ini": to_ini(cfg),
        **body,
    }
    result = JobResult(command, report, tables)
    if output_dir is not None:
        result.write(output_dir)
    return result
