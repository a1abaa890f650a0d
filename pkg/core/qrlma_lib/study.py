"""Simulation studies: repeated simulate-then-fit runs and their summaries."""
import logging
import time
import warnings
from functools import partial
from typing import Any, Dict, List, Literal, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import spearmanr

from qrlma_lib.error import InvalidInputError, QrlmaError
from qrlma_lib.fixtures import Preset, load_preset
from qrlma_lib.gillespie import make_generator, simulate_dataset
from qrlma_lib.infer import FitConfig, lla_estimate, lma_fit
from qrlma_lib.metrics import EstimateEnsemble, bias_summary, bootstrap_band, wasserstein1
from qrlma_lib.parallel import parallel_map
from qrlma_lib.reaction import ReactionSystem

logger = logging.getLogger(__name__)

Sweep = Literal["dt", "T", "stderr", "scaling"]

ENSEMBLE_COLUMNS = [
    "sweep",
    "value",
    "seed_index",
    "method",
    "reaction",
    "estimate",
    "stderr",
    "truth",
    "mean_dt",
    "converged",
    "fit_seconds",
]

DEFAULT_SCALING_PRESETS = (
    "scaling-p3",
    "scaling-p6",
    "scaling-p9",
    "scaling-r3",
    "scaling-r6",
    "scaling-r9",
    "scaling-r12",
    "scaling-r15",
)


class StudyConfig(BaseModel):
    sweep: Sweep = "dt"
    n_seeds: Optional[int] = None
    seed: int = 0
    keep_every_grid: Optional[List[int]] = None
    T_grid: Optional[List[int]] = None
    keep_every: Optional[int] = None
    T: Optional[int] = None
    n_replicates: Optional[int] = None
    scaling_presets: List[str] = Field(default_factory=lambda: list(DEFAULT_SCALING_PRESETS))
    methods: List[Literal["lla", "lma"]] = Field(default_factory=lambda: ["lla", "lma"])
    n_boot: int = 1000
    fit: FitConfig = Field(default_factory=lambda: FitConfig(compute_stderr=False))
    workers: Optional[int] = 1
    progress: bool = False


class StudyJob(BaseModel):
    """One simulated dataset and the fits run on it."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    sweep: str
    value: float
    seed_index: int
    seed: np.random.SeedSequence
    system: ReactionSystem
    theta: List[float]
    y0: List[float]
    keep_every: int
    T: int
    n_replicates: int
    times: Optional[List[float]] = None
    methods: List[str]
    fit: FitConfig


class StudyResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    sweep: str
    preset: str
    ensemble: pd.DataFrame
    summary: pd.DataFrame
    statistics: Dict[str, Any] = Field(default_factory=dict)


def run_job(job: StudyJob) -> List[Dict[str, Any]]:
    data = simulate_dataset(
        job.system,
        job.theta,
        job.y0,
        job.n_replicates,
        keep_every=job.keep_every,
        T=job.T,
        seed=job.seed,
        times=job.times,
    )
    labels = job.system.reaction_labels
    base = {
        "sweep": job.sweep,
        "value": job.value,
        "seed_index": job.seed_index,
        "mean_dt": data.mean_dt,
    }
    nan = [float("nan")] * len(labels)
    rows: List[Dict[str, Any]] = []

    def emit(
        method: str, estimate: Sequence[float], se: Sequence[float], ok: bool, t: float
    ) -> None:
        for j, label in enumerate(labels):
            rows.append(
                {
                    **base,
                    "method": method,
                    "reaction": label,
                    "estimate": float(estimate[j]),
                    "stderr": float(se[j]),
                    "truth": job.theta[j],
                    "converged": ok,
                    "fit_seconds": t,
                }
            )

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if "lla" in job.methods:
            start = time.perf_counter()
            try:
                est = lla_estimate(data, job.system, job.fit).tolist()
                ok = True
            except QrlmaError as e:
                logger.debug(f"LLA failed on seed {job.seed_index}: {e}")
                est, ok = nan, False
            emit("lla", est, nan, ok, time.perf_counter() - start)
        if "lma" in job.methods:
            start = time.perf_counter()
            try:
                fit = lma_fit(data, job.system, job.fit)
                est, ok = fit.theta_hat, fit.converged
                se = fit.stderr if fit.stderr is not None else nan
            except QrlmaError as e:
                logger.debug(f"LMA failed on seed {job.seed_index}: {e}")
                est, se, ok = nan, nan, False
            emit("lma", est, se, ok, time.perf_counter() - start)
    return rows


def _jobs(
    preset: Preset,
    config: StudyConfig,
    sweep: str,
    values: Sequence[float],
    settings: Sequence[Dict[str, int]],
    root: np.random.SeedSequence,
) -> List[StudyJob]:
    n_seeds = config.n_seeds or preset.n_seeds
    jobs = []
    for value, setting, child in zip(values, settings, root.spawn(len(values))):
        for s, seed in enumerate(child.spawn(n_seeds)):
            jobs.append(
                StudyJob(
                    sweep=sweep,
                    value=value,
                    seed_index=s,
                    seed=seed,
                    system=preset.system,
                    theta=preset.theta_true,
                    y0=preset.y0,
                    times=preset.times,
                    methods=list(config.methods),
                    fit=config.fit,
                    **setting,
                )
            )
    return jobs


def _run(jobs: List[StudyJob], config: StudyConfig) -> pd.DataFrame:
    chunks = parallel_map(
        run_job, jobs, workers=config.workers, desc="study", progress=config.progress
    )
    return pd.DataFrame([row for chunk in chunks for row in chunk], columns=ENSEMBLE_COLUMNS)


def dt_sweep(preset: Preset, config: Optional[StudyConfig] = None) -> pd.DataFrame:
    """Per-seed estimates over the keep_every grid; larger keep_every means larger gaps."""
    config = config or StudyConfig(sweep="dt")
    grid = config.keep_every_grid or preset.keep_every_grid
    T = config.T or preset.T
    n = config.n_replicates or preset.n_replicates
    settings = [{"keep_every": k, "T": T, "n_replicates": n} for k in grid]
    jobs = _jobs(preset, config, "dt", grid, settings, np.random.SeedSequence(config.seed))
    return _run(jobs, config)


def T_sweep(preset: Preset, config: Optional[StudyConfig] = None) -> pd.DataFrame:
    config = config or StudyConfig(sweep="T")
    grid = config.T_grid or preset.T_grid
    keep = config.keep_every or preset.keep_every
    n = config.n_replicates or preset.n_replicates
    settings = [{"keep_every": keep, "T": t, "n_replicates": n} for t in grid]
    jobs = _jobs(preset, config, "T", grid, settings, np.random.SeedSequence(config.seed))
    return _run(jobs, config)


def stderr_sweep(preset: Preset, config: Optional[StudyConfig] = None) -> pd.DataFrame:
    """LMA fits with standard errors on n_seeds datasets of n_replicates trajectories each."""
    config = config or StudyConfig(sweep="stderr")
    config = config.model_copy(
        update={
            "methods": ["lma"],
            "fit": config.fit.model_copy(update={"compute_stderr": True}),
        }
    )
    setting = {
        "keep_every": config.keep_every or preset.keep_every,
        "T": config.T or preset.T,
        "n_replicates": config.n_replicates or 100,
    }
    jobs = _jobs(
        preset, config, "stderr", [0.0], [setting], np.random.SeedSequence(config.seed)
    )
    return _run(jobs, config)


def scaling_sweep(config: Optional[StudyConfig] = None) -> pd.DataFrame:
    """Fits over the block-replicated and reaction-growing families, with fit wall time."""
    config = config or StudyConfig(sweep="scaling")
    root = np.random.SeedSequence(config.seed)
    frames = []
    for name, child in zip(config.scaling_presets, root.spawn(len(config.scaling_presets))):
        preset = load_preset(name)
        setting = {
            "keep_every": config.keep_every or preset.keep_every,
            "T": config.T or preset.T,
            "n_replicates": config.n_replicates or preset.n_replicates,
        }
        jobs = _jobs(preset, config, name, [0.0], [setting], child)
        frame = _run(jobs, config)
        frame["value"] = preset.system.n_reactions
        frame.insert(2, "n_species", preset.system.n_species)
        frames.append(frame)
        logger.info(f"{name}: p={preset.system.n_species} r={preset.system.n_reactions}")
    return pd.concat(frames, ignore_index=True)


def _ensemble(group: pd.DataFrame) -> EstimateEnsemble:
    wide = group.pivot(index="seed_index", columns="reaction", values="estimate")
    labels = list(dict.fromkeys(group["reaction"]))
    wide = wide[labels].dropna()
    truth = group.drop_duplicates("reaction").set_index("reaction").loc[labels, "truth"]
    return EstimateEnsemble(estimates=wide.to_numpy(), truth=truth.to_numpy(), labels=labels)


def summarize(ensemble: pd.DataFrame, n_boot: int = 1000, seed: int = 0) -> pd.DataFrame:
    """Bias, sd and W1 with its bootstrap band per sweep value and method."""
    rng = make_generator(seed)
    frames = []
    for (sweep, value, method), group in ensemble.groupby(
        ["sweep", "value", "method"], sort=False
    ):
        try:
            ens = _ensemble(group)
        except InvalidInputError:
            logger.warning(f"No usable estimates for {method} at {sweep}={value}")
            continue
        band = bootstrap_band(ens, n_boot=n_boot, seed=int(rng.integers(2**32)))
        table = bias_summary(ens)
        table.insert(0, "method", method)
        table.insert(0, "value", value)
        table.insert(0, "sweep", sweep)
        table["n_seeds"] = ens.estimates.shape[0]
        table["mean_dt"] = float(group["mean_dt"].mean())
        table["w1"] = wasserstein1(ens)
        table["w1_q25"] = band.q25
        table["w1_median"] = band.median
        table["w1_q75"] = band.q75
        table["fit_seconds"] = float(group.drop_duplicates("seed_index")["fit_seconds"].median())
        frames.append(table)
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()


def sd_slope(summary: pd.DataFrame, method: str = "lma") -> Dict[str, float]:
    """Log-log slope of sd against T per reaction; about -0.5 for a consistent estimator."""
    out = {}
    rows = summary[(summary["method"] == method) & (summary["sweep"] == "T")]
    for reaction, group in rows.groupby("reaction", sort=False):
        group = group[group["sd"] > 0]
        if len(group) < 2:
            continue
        slope, _ = np.polyfit(np.log(group["value"]), np.log(group["sd"]), 1)
        out[str(reaction)] = float(slope)
    return out


def bias_trend(summary: pd.DataFrame) -> Dict[str, Dict[str, float]]:
    """Spearman correlation of |bias| with the mean observation gap, per method and reaction."""
    out: Dict[str, Dict[str, float]] = {}
    rows = summary[summary["sweep"] == "dt"]
    for (method, reaction), group in rows.groupby(["method", "reaction"], sort=False):
        if len(group) < 3:
            continue
        rho, _ = spearmanr(group["mean_dt"], group["mean_bias"].abs())
        out.setdefault(str(method), {})[str(reaction)] = float(rho)
    return out


def stderr_validation(
    ensemble: pd.DataFrame, n_boot: int = 1000, seed: int = 0
) -> pd.DataFrame:
    """Empirical variance of the estimates across datasets against the median theoretical one.

    The empirical band is the 10%-90% range of the variance over bootstrap resamples of
    the datasets.
    """
    rng = make_generator(seed)
    rows = []
    lma = ensemble[ensemble["method"] == "lma"]
    for reaction, group in lma.groupby("reaction", sort=False):
        est = group["estimate"].dropna().to_numpy()
        se = group["stderr"].to_numpy()
        se = se[np.isfinite(se)]
        if est.size < 2:
            continue
        idx = rng.integers(0, est.size, size=(n_boot, est.size))
        boot = est[idx].var(axis=1, ddof=1)
        q10, q90 = np.quantile(boot, [0.1, 0.9])
        theoretical = float(np.median(se**2)) if se.size else float("nan")
        rows.append(
            {
                "reaction": reaction,
                "truth": float(group["truth"].iloc[0]),
                "empirical_var": float(est.var(ddof=1)),
                "empirical_var_q10": float(q10),
                "empirical_var_q90": float(q90),
                "theoretical_var_median": theoretical,
                "within_band": bool(q10 <= theoretical <= q90),
            }
        )
    return pd.DataFrame(rows)


def run_study(preset: Preset, config: StudyConfig) -> StudyResult:
    logger.info(f"Running {config.sweep} study on preset {preset.name}")
    sweeps = {
        "dt": partial(dt_sweep, preset),
        "T": partial(T_sweep, preset),
        "stderr": partial(stderr_sweep, preset),
        "scaling": scaling_sweep,
    }
    ensemble = sweeps[config.sweep](config)
    statistics: Dict[str, Any] = {}
    if config.sweep == "stderr":
        summary = stderr_validation(ensemble, config.n_boot, config.seed)
    else:
        summary = summarize(ensemble, config.n_boot, config.seed)
    if config.sweep == "T" and not summary.empty:
        statistics["sd_slope"] = sd_slope(summary)
    if config.sweep == "dt" and not summary.empty:
        statistics["bias_trend"] = bias_trend(summary)
    return StudyResult(
        sweep=config.sweep,
        preset=preset.name,
        ensemble=ensemble,
        summary=summary,
        statistics=statistics,
    )
