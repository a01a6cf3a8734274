"""Experiment configuration, seeded batch runs and CSV emission."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field

from .baselines import oracle_opt, run_cc
from .errors import ConfigError, NonlinearWeightsError, QosdError, SolverTimeout
from .framework import run_iterative
from .instance import QosdInstance, load_instance, make_er_instance
from .lr import run_lr
from .pathcore import unseparated_pairs
from .report import Deadline, RunReport
from .sa import SaConfig, run_sa

CONFIG_HEADER = "qosd-config v1"

CSV_COLUMNS = [
    "algorithm", "n", "m", "model", "T", "k", "seed",
    "norm", "outer_iters", "inner_iters", "wall_time_s", "feasible", "extras",
]

ALGORITHMS = ("ig", "at", "sa", "lr", "cc", "oracle")


@dataclass
class ExperimentConfig:
    """One batch: an instance source, a threshold sweep and an algorithm list."""

    source: str = "er"                # "er" or "file"
    er_n: int = 60
    er_rho: float = 0.1
    instance_file: str | None = None
    model: str = "linear"
    thresholds: list[int] = field(default_factory=lambda: [3])
    k: int = 10
    algorithms: list[str] = field(default_factory=lambda: ["ig", "at"])
    repetitions: int = 5
    master_seed: int = 0
    time_limit: float = 86_400.0      # one day per run
    threads: int = 1
    q: int = 1
    alpha: float = 0.8
    epsilon: float = 0.3
    delta: float = 0.2
    sample_mode: str = "practical"
    samples: int | None = None
    output: str | None = None

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if self.source not in ("er", "file"):
            raise ConfigError(f"unknown source {self.source!r}")
        if self.source == "file" and not self.instance_file:
            raise ConfigError("source=file needs instance_file")
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {alg!r}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse the 'qosd-config v1' key = value format (see README)."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != CONFIG_HEADER:
        raise ConfigError(f"missing header {CONFIG_HEADER!r}")
    kwargs: dict = {}
    int_keys = {"er_n", "k", "repetitions", "master_seed", "threads", "q"}
    float_keys = {"er_rho", "time_limit", "alpha", "epsilon", "delta"}
    for line_no, raw in enumerate(lines[1:], start=2):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            if key in int_keys:
                kwargs[key] = int(value)
            elif key in float_keys:
                kwargs[key] = float(value)
            elif key == "T":
                kwargs["thresholds"] = [int(v) for v in value.split(",") if v.strip()]
            elif key == "algorithms":
                kwargs["algorithms"] = [v.strip() for v in value.split(",") if v.strip()]
            elif key == "samples":
                kwargs["samples"] = int(value) if int(value) > 0 else None
            elif key in ("source", "model", "sample_mode", "instance_file", "output"):
                kwargs[key] = value
            else:
                raise ConfigError(f"line {line_no}: unknown key {key!r}")
        except ValueError:
            raise ConfigError(f"line {line_no}: bad value for {key!r}: {value!r}") from None
    return ExperimentConfig(**kwargs)


def derive_seed(master_seed: int, threshold: int, repetition: int, algorithm_index: int) -> int:
    """Documented formula: first 8 bytes of sha256("master:T:rep:alg_index")."""
    text = f"{master_seed}:{threshold}:{repetition}:{algorithm_index}"
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2**31)


def run_algorithm(
    instance: QosdInstance,
    algorithm: str,
    *,
    seed: int = 0,
    threads: int = 1,
    deadline: Deadline | float | None = None,
    q: int = 1,
    alpha: float = 0.8,
    epsilon: float = 0.3,
    delta: float = 0.2,
    sample_mode: str = "practical",
    samples: int | None = None,
    eta_override: float | None = None,
) -> RunReport:
    """Dispatch one named solver with common knobs."""
    if algorithm in ("ig", "at"):
        return run_iterative(
            instance, algorithm, threads=threads, deadline=deadline, seed=seed
        )
    if algorithm == "sa":
        config = SaConfig(
            q=q, alpha=alpha, epsilon=epsilon, delta=delta,
            sample_mode=sample_mode, samples_per_round=samples, seed=seed,
        )
        return run_sa(instance, config, threads=threads, deadline=deadline)
    if algorithm == "lr":
        return run_lr(
            instance, delta=delta, seed=seed,
            eta_override=eta_override, threads=threads, deadline=deadline,
        )
    if algorithm == "cc":
        return run_cc(instance, threads=threads, deadline=deadline, seed=seed)
    if algorithm == "oracle":
        import time as _time

        start = _time.perf_counter()
        result = oracle_opt(instance)
        return RunReport(
            algorithm="oracle",
            budget=result.witness,
            norm=result.opt_norm,
            outer_iterations=0,
            inner_iterations=result.explored,
            wall_time=_time.perf_counter() - start,
            feasible=True,
            seed=seed,
            extras={"feasible_paths": result.feasible_paths},
        )
    raise ConfigError(f"unknown algorithm {algorithm!r}")


def _build_instance(config: ExperimentConfig, threshold: int, repetition: int) -> QosdInstance:
    if config.source == "file":
        with open(config.instance_file) as handle:
            return load_instance(handle)
    seed = derive_seed(config.master_seed, threshold, repetition, 0xFFFF)
    return make_er_instance(
        config.er_n, config.er_rho, threshold, config.k, config.model, seed
    )


def run_experiment(config: ExperimentConfig) -> list[dict]:
    """Every (threshold, repetition, algorithm) cell as one CSV-ready row.

    Each returned budget vector is re-verified with an independent
    separation check; incompatible algorithm/model combinations and
    timeouts become per-row errors, never batch failures.
    """
    rows: list[dict] = []
    for threshold in config.thresholds:
        for repetition in range(config.repetitions):
            try:
                instance = _build_instance(config, threshold, repetition)
            except QosdError as exc:
                for alg in config.algorithms:
                    rows.append(_error_row(config, alg, threshold, 0, f"instance: {exc}"))
                continue
            model = config.model if config.source == "er" else "file"
            opt_norm: int | None = None
            if "oracle" in config.algorithms:
                oracle_report = run_algorithm(instance, "oracle")
                opt_norm = oracle_report.norm
            for alg_index, alg in enumerate(config.algorithms):
                seed = derive_seed(config.master_seed, threshold, repetition, alg_index)
                if alg == "oracle":
                    report = oracle_report
                else:
                    try:
                        report = run_algorithm(
                            instance, alg,
                            seed=seed, threads=config.threads,
                            deadline=Deadline(config.time_limit),
                            q=config.q, alpha=config.alpha,
                            epsilon=config.epsilon, delta=config.delta,
                            sample_mode=config.sample_mode, samples=config.samples,
                        )
                    except SolverTimeout:
                        rows.append(_error_row(config, alg, threshold, seed, "timeout", model))
                        continue
                    except NonlinearWeightsError:
                        rows.append(
                            _error_row(config, alg, threshold, seed, "nonlinear-weights", model)
                        )
                        continue
                verified = not unseparated_pairs(instance, report.budget)
                extras = dict(report.extras)
                extras["verified"] = verified
                if opt_norm is not None:
                    extras["opt"] = opt_norm
                rows.append(
                    {
                        "algorithm": report.algorithm,
                        "n": instance.graph.n,
                        "m": instance.graph.m,
                        "model": model,
                        "T": threshold,
                        "k": instance.k,
                        "seed": report.seed if report.seed is not None else seed,
                        "norm": report.norm,
                        "outer_iters": report.outer_iterations,
                        "inner_iters": report.inner_iterations,
                        "wall_time_s": f"{report.wall_time:.6f}",
                        "feasible": str(bool(report.feasible and verified)).lower(),
                        "extras": json.dumps(extras, sort_keys=True),
                    }
                )
    return rows


def _error_row(config, alg, threshold, seed, message, model=None) -> dict:
    return {
        "algorithm": alg,
        "n": config.er_n if config.source == "er" else "",
        "m": "",
        "model": model or config.model,
        "T": threshold,
        "k": config.k,
        "seed": seed,
        "norm": "",
        "outer_iters": "",
        "inner_iters": "",
        "wall_time_s": "",
        "feasible": "false",
        "extras": json.dumps({"error": message}),
    }


def rows_to_csv(rows: list[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()
