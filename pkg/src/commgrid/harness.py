"""Experiment orchestration: config, seeded multi-run execution, persistence.

An experiment is ``conditions x runs`` independent training runs with seeds
``base_seed + i``. Each run writes its own directory of diff-friendly logs,
and a cross-condition summary is recomputed from those logs alone, so
``analyze`` on a finished output directory reproduces the summary byte for
byte. Runs may execute in parallel; results are merged in fixed
condition/seed order, so output never depends on scheduling.

On-disk layout (under ``output_dir``)::

    config.json               resolved configuration
    <COND>_seed<N>/
        episodes.csv          episode,steps,success,return
        symbols.csv           episode,t,agent,symbol,context
        summary.json          per-run metrics
    summary.json              cross-condition summary

CSV columns: ``success`` is 0/1, ``agent`` is 0/1, ``symbol`` and
``context`` are symbol indices 0..3, ``t`` is the 1-based timestep.
"""
from __future__ import annotations

import csv
import json
import re
import shutil
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .analysis import (
    ProbeDataset,
    attenuation_rate,
    js_divergence,
    mean_final_steps,
    probe_accuracy,
    shannon_entropy,
    symbol_counts,
    welch_t_test,
)
from .gridworld import N_SYMBOLS
from .training import Condition, EpisodeRecord, SymbolLogEntry, run_training

METRIC_WINDOW = 100
SMOOTH_WINDOW = 50

EPISODES_CSV = "episodes.csv"
SYMBOLS_CSV = "symbols.csv"
SUMMARY_JSON = "summary.json"

_RUN_DIR_RE = re.compile(r"^(EC|PSP)_seed(\d+)$")


class ConfigError(ValueError):
    """Raised for unparseable, unknown, or out-of-range configuration."""


@dataclass
class Config:
    grid_size: int = 5
    episodes: int = 500
    runs: int = 10
    max_steps: int = 100
    gamma: float = 0.95
    lr: float = 1e-3
    epsilon: float = 0.1
    buffer_capacity: int = 2000
    batch_size: int = 32
    hidden_units: int = 32
    base_seed: int = 0
    conditions: tuple[str, ...] = ("EC", "PSP")
    output_dir: str = "results"

    def validate(self) -> Config:
        def check_int(name, value, minimum):
            if type(value) is not int:
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            if value < minimum:
                raise ConfigError(f"{name} must be >= {minimum}, got {value}")

        check_int("grid_size", self.grid_size, 2)
        check_int("episodes", self.episodes, 1)
        check_int("runs", self.runs, 1)
        check_int("max_steps", self.max_steps, 1)
        check_int("buffer_capacity", self.buffer_capacity, 1)
        check_int("batch_size", self.batch_size, 1)
        check_int("hidden_units", self.hidden_units, 1)
        check_int("base_seed", self.base_seed, 0)
        for name, value in (("gamma", self.gamma), ("lr", self.lr), ("epsilon", self.epsilon)):
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"{name} must be a number, got {value!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma out of range [0, 1]: {self.gamma}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon out of range [0, 1]: {self.epsilon}")
        if self.lr <= 0.0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.batch_size > self.buffer_capacity:
            raise ConfigError(
                f"batch_size {self.batch_size} exceeds buffer_capacity {self.buffer_capacity}"
            )
        if not isinstance(self.conditions, (list, tuple)) or not self.conditions:
            raise ConfigError(f"conditions must be a non-empty list, got {self.conditions!r}")
        seen = []
        for cond in self.conditions:
            if cond not in (Condition.EC.value, Condition.PSP.value):
                raise ConfigError(f"unknown condition {cond!r}; expected 'EC' or 'PSP'")
            if cond in seen:
                raise ConfigError(f"duplicate condition {cond!r}")
            seen.append(cond)
        if not isinstance(self.output_dir, str) or not self.output_dir:
            raise ConfigError(f"output_dir must be a non-empty string, got {self.output_dir!r}")
        return self

    @property
    def seeds(self) -> list[int]:
        return [self.base_seed + i for i in range(self.runs)]

    @property
    def metric_window(self) -> int:
        return min(METRIC_WINDOW, self.episodes)

    def training_kwargs(self) -> dict:
        return dict(
            grid_size=self.grid_size,
            episodes=self.episodes,
            max_steps=self.max_steps,
            gamma=self.gamma,
            lr=self.lr,
            epsilon=self.epsilon,
            buffer_capacity=self.buffer_capacity,
            batch_size=self.batch_size,
            hidden_units=self.hidden_units,
        )


def load_config(path: str | Path) -> Config:
    """Parse a flat JSON config; missing keys default, unknown keys reject."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object, got {type(raw).__name__}")
    known = {f.name for f in fields(Config)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    if "conditions" in raw and isinstance(raw["conditions"], list):
        raw = dict(raw, conditions=tuple(raw["conditions"]))
    return Config(**raw).validate()


def _json_dumps(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _write_episodes_csv(path: Path, records: Sequence[EpisodeRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["episode", "steps", "success", "return"])
        for r in records:
            writer.writerow([r.index, r.steps, int(r.success), repr(r.total_reward)])


def _write_symbols_csv(path: Path, records: Sequence[EpisodeRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["episode", "t", "agent", "symbol", "context"])
        for r in records:
            for e in r.symbols:
                writer.writerow([r.index, e.t, e.agent, e.symbol, e.context])


def _load_run_records(run_dir: Path) -> list[EpisodeRecord]:
    """Rebuild episode records from a run directory's two CSV logs."""
    episodes_path = run_dir / EPISODES_CSV
    symbols_path = run_dir / SYMBOLS_CSV
    for p in (episodes_path, symbols_path):
        if not p.is_file():
            raise ValueError(f"missing log file: {p}")
    by_episode: dict[int, list[SymbolLogEntry]] = {}
    try:
        with open(symbols_path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                by_episode.setdefault(int(row["episode"]), []).append(
                    SymbolLogEntry(
                        t=int(row["t"]),
                        agent=int(row["agent"]),
                        symbol=int(row["symbol"]),
                        context=int(row["context"]),
                    )
                )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"corrupt symbols log {symbols_path}: {exc}") from exc
    records = []
    try:
        with open(episodes_path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                index = int(row["episode"])
                records.append(
                    EpisodeRecord(
                        index=index,
                        steps=int(row["steps"]),
                        success=bool(int(row["success"])),
                        total_reward=float(row["return"]),
                        symbols=by_episode.get(index, []),
                    )
                )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"corrupt episodes log {episodes_path}: {exc}") from exc
    if not records:
        raise ValueError(f"episodes log {episodes_path} holds no episodes")
    return records


def _run_summary(condition: str, seed: int, records: Sequence[EpisodeRecord]) -> dict:
    """Per-run metrics; the probe split is seeded by the run's own seed."""
    window = min(METRIC_WINDOW, len(records))
    counts = symbol_counts(records, window)
    dist = (counts / counts.sum()).tolist()
    per_agent = []
    for agent in (0, 1):
        agent_counts = symbol_counts(records, window, agent)
        per_agent.append(agent_counts / agent_counts.sum())
    final = records[-window:]
    return {
        "condition": condition,
        "seed": seed,
        "episodes": len(records),
        "metric_window": window,
        "mean_final_steps": mean_final_steps(records, window),
        "success_rate_final": float(np.mean([r.success for r in final])),
        "symbol_distribution": dist,
        "agent_symbol_distributions": [d.tolist() for d in per_agent],
        "entropy_bits": shannon_entropy(np.asarray(dist)),
        "jsd_bits": js_divergence(per_agent[0], per_agent[1]),
        "probe_accuracy": probe_accuracy(ProbeDataset.from_records(final), split_seed=seed),
    }


def _execute_run(cfg_kwargs: dict, condition: str, seed: int, output_dir: str) -> str:
    """Train one run and persist its logs; cleans up the run dir on failure."""
    run_dir = Path(output_dir) / f"{condition}_seed{seed}"
    run_dir.mkdir(parents=True, exist_ok=True)
    try:
        result = run_training(condition, seed, **cfg_kwargs)
        _write_episodes_csv(run_dir / EPISODES_CSV, result.episodes)
        _write_symbols_csv(run_dir / SYMBOLS_CSV, result.episodes)
        summary = _run_summary(condition, seed, result.episodes)
        (run_dir / SUMMARY_JSON).write_text(_json_dumps(summary))
    except BaseException:
        shutil.rmtree(run_dir, ignore_errors=True)
        raise
    return run_dir.name


def run_experiment(
    config: Config,
    workers: int = 1,
    progress: Callable[[str], None] | None = None,
) -> dict:
    """Execute every condition x seed run, then write the pooled summary.

    The summary is produced by :func:`analyze` over the written logs, so a
    later ``analyze`` of the same directory reproduces it exactly.
    """
    config.validate()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(_json_dumps(asdict(config)))
    jobs = [(cond, seed) for cond in config.conditions for seed in config.seeds]
    kwargs = config.training_kwargs()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_execute_run, kwargs, cond, seed, config.output_dir): (cond, seed)
                for cond, seed in jobs
            }
            for future in as_completed(futures):
                name = future.result()
                if progress is not None:
                    progress(name)
    else:
        for cond, seed in jobs:
            name = _execute_run(kwargs, cond, seed, config.output_dir)
            if progress is not None:
                progress(name)
    summary = analyze(out)
    (out / SUMMARY_JSON).write_text(_json_dumps(summary))
    return summary


def _discover_runs(run_dir: Path) -> dict[str, dict[int, Path]]:
    """Map condition -> seed -> run directory for complete runs."""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise ValueError(f"not a directory: {run_dir}")
    found: dict[str, dict[int, Path]] = {}
    for child in sorted(run_dir.iterdir()):
        match = _RUN_DIR_RE.match(child.name)
        if match and child.is_dir():
            found.setdefault(match.group(1), {})[int(match.group(2))] = child
    if not found:
        raise ValueError(f"no run directories (like EC_seed0) found in {run_dir}")
    return found


def _condition_block(per_run: list[dict]) -> dict:
    """Pool one condition's per-run metrics across seeds."""
    counts = np.zeros(N_SYMBOLS, dtype=int)
    for run in per_run:
        counts += run["_counts"]
    dist = counts / counts.sum()
    return {
        "seeds": [run["seed"] for run in per_run],
        "mean_final_steps_per_seed": [run["mean_final_steps"] for run in per_run],
        "mean_final_steps": float(np.mean([run["mean_final_steps"] for run in per_run])),
        "symbol_distribution": dist.tolist(),
        "entropy_bits": shannon_entropy(dist),
        "jsd_per_seed": [run["jsd_bits"] for run in per_run],
        "jsd_bits_mean": float(np.mean([run["jsd_bits"] for run in per_run])),
        "probe_accuracy_per_seed": [run["probe_accuracy"] for run in per_run],
        "probe_accuracy_mean": float(np.mean([run["probe_accuracy"] for run in per_run])),
    }


def analyze(run_dir: str | Path) -> dict:
    """Recompute the cross-condition summary from the CSV logs alone."""
    found = _discover_runs(Path(run_dir))
    episode_counts = set()
    conditions: dict[str, dict] = {}
    per_condition_runs: dict[str, list[dict]] = {}
    for cond in (Condition.EC.value, Condition.PSP.value):
        if cond not in found:
            continue
        per_run = []
        for seed in sorted(found[cond]):
            records = _load_run_records(found[cond][seed])
            episode_counts.add(len(records))
            summary = _run_summary(cond, seed, records)
            summary["_counts"] = symbol_counts(records, summary["metric_window"])
            per_run.append(summary)
        per_condition_runs[cond] = per_run
        conditions[cond] = _condition_block(per_run)
    if len(episode_counts) > 1:
        raise ValueError(
            f"run directories disagree on episode count ({sorted(episode_counts)}); "
            "analyze expects runs from a single configuration"
        )

    comparison = None
    if Condition.EC.value in conditions and Condition.PSP.value in conditions:
        ec = conditions[Condition.EC.value]
        psp = conditions[Condition.PSP.value]
        comparison = {
            "attenuation_pct": attenuation_rate(psp["mean_final_steps"], ec["mean_final_steps"]),
            "welch_t": None,
            "welch_df": None,
            "welch_p": None,
        }
        ec_means = ec["mean_final_steps_per_seed"]
        psp_means = psp["mean_final_steps_per_seed"]
        if len(ec_means) >= 2 and len(psp_means) >= 2:
            t, df, p = welch_t_test(psp_means, ec_means)
            comparison.update(welch_t=t, welch_df=df, welch_p=p)

    return {
        "metric_window": min(METRIC_WINDOW, next(iter(episode_counts))),
        "conditions": conditions,
        "comparison": comparison,
    }


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return repr(float(x))


def _stderr_across(rows: np.ndarray) -> np.ndarray:
    """Standard error over axis 0; zero when only one series is present."""
    if rows.shape[0] < 2:
        return np.zeros(rows.shape[1])
    return rows.std(axis=0, ddof=1) / np.sqrt(rows.shape[0])


def _trailing_mean(series: np.ndarray, window: int) -> np.ndarray:
    """Mean over the trailing ``window`` values, partial at the start."""
    sums = np.cumsum(series, dtype=float)
    out = np.empty_like(sums)
    for i in range(len(series)):
        lo = max(0, i - window + 1)
        out[i] = (sums[i] - (sums[lo - 1] if lo > 0 else 0.0)) / (i - lo + 1)
    return out


def emit_plot_data(run_dir: str | Path) -> list[Path]:
    """Write plot-ready CSV series from a finished experiment directory.

    Produces ``learning_curve.csv`` (raw per-episode mean steps with a
    standard-error band), ``learning_curve_smoothed.csv`` (the same after a
    trailing window-50 average per seed), ``symbol_frequencies.csv`` (final
    symbol distribution per condition), and ``entropy_curve.csv`` (sliding
    window-50 pooled symbol entropy per episode).
    """
    run_dir = Path(run_dir)
    found = _discover_runs(run_dir)
    curve_rows, smooth_rows, freq_rows, entropy_rows = [], [], [], []
    for cond in (Condition.EC.value, Condition.PSP.value):
        if cond not in found:
            continue
        all_records = [_load_run_records(found[cond][seed]) for seed in sorted(found[cond])]
        lengths = {len(records) for records in all_records}
        if len(lengths) > 1:
            raise ValueError(f"{cond} runs disagree on episode count: {sorted(lengths)}")
        episodes = lengths.pop()
        steps = np.array([[r.steps for r in records] for records in all_records], dtype=float)

        mean = steps.mean(axis=0)
        err = _stderr_across(steps)
        curve_rows += [[e, _fmt(mean[e]), _fmt(err[e]), cond] for e in range(episodes)]

        window = min(SMOOTH_WINDOW, episodes)
        smooth = np.array([_trailing_mean(row, window) for row in steps])
        smooth_mean = smooth.mean(axis=0)
        smooth_err = _stderr_across(smooth)
        smooth_rows += [[e, _fmt(smooth_mean[e]), _fmt(smooth_err[e]), cond] for e in range(episodes)]

        final_window = min(METRIC_WINDOW, episodes)
        counts = np.zeros(N_SYMBOLS, dtype=int)
        for records in all_records:
            counts += symbol_counts(records, final_window)
        dist = counts / counts.sum()
        freq_rows += [[cond, s, _fmt(dist[s])] for s in range(N_SYMBOLS)]

        per_episode = np.zeros((episodes, N_SYMBOLS), dtype=int)
        for records in all_records:
            for e, record in enumerate(records):
                for entry in record.symbols:
                    per_episode[e, entry.symbol] += 1
        for e in range(episodes):
            lo = max(0, e - window + 1)
            pooled = per_episode[lo : e + 1].sum(axis=0)
            entropy_rows.append([e, _fmt(shannon_entropy(pooled / pooled.sum())), cond])

    paths = [
        run_dir / "learning_curve.csv",
        run_dir / "learning_curve_smoothed.csv",
        run_dir / "symbol_frequencies.csv",
        run_dir / "entropy_curve.csv",
    ]
    _write_csv(paths[0], ["episode", "mean", "stderr", "condition"], curve_rows)
    _write_csv(paths[1], ["episode", "mean", "stderr", "condition"], smooth_rows)
    _write_csv(paths[2], ["condition", "symbol", "frequency"], freq_rows)
    _write_csv(paths[3], ["episode", "entropy", "condition"], entropy_rows)
    return paths
