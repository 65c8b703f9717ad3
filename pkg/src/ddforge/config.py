"""Experiment configuration: one TOML file fully specifies a run.

Sections: [experiment] (kind, seed, shots, out), [workload], [noise],
[timing], [backend], [ga], [baselines], and per-command sections
([mrb_scan], [explore], [replay]).  Seeds are explicit; nothing defaults to
wall-clock time.
"""

from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .ga import GAConfig
from .scheduler import GateTimingModel

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "config_hash"]

WORKLOAD_KINDS = ("bv", "ghz", "grover", "mrb")


class ConfigError(ValueError):
    """Malformed or incomplete experiment configuration."""


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    shots: int
    out_dir: Path
    workload: dict
    noise: dict
    timing: GateTimingModel
    ga: GAConfig
    max_colors: int
    baselines: list[str]
    baseline_repeats: int
    trained_strategies: dict[str, Path]
    trajectories: int | None
    statevector_limit: int
    mrb_scan: dict
    explore: dict
    replay: dict
    source_path: Path | None = None
    raw_bytes: bytes = b""

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.raw_bytes).hexdigest()[:16]


def config_hash(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing required key {key!r} in [{where}]")
    return section[key]


def load_config(
    path: str | Path, seed_override: int | None = None, out_override: str | None = None
) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    raw = path.read_bytes()
    try:
        data = tomllib.loads(raw.decode())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None

    exp = data.get("experiment", {})
    kind = _require(exp, "kind", "experiment")
    if kind not in WORKLOAD_KINDS:
        raise ConfigError(f"unknown workload kind {kind!r}; expected one of {WORKLOAD_KINDS}")
    if seed_override is None and "seed" not in exp:
        raise ConfigError("no seed: set [experiment].seed or pass --seed")
    seed = int(exp["seed"]) if seed_override is None else int(seed_override)
    shots = int(exp.get("shots", 2000))
    out_dir = Path(out_override if out_override is not None else exp.get("out", "runs/out"))

    timing_sec = data.get("timing", {})
    timing = GateTimingModel(
        one_qubit_duration=float(timing_sec.get("one_qubit", 50.0)),
        two_qubit_duration=float(timing_sec.get("two_qubit", 500.0)),
        pulse_duration=float(timing_sec.get("pulse", 50.0)),
        measurement_duration=float(timing_sec.get("measurement", 700.0)),
    )

    ga_sec = data.get("ga", {})
    try:
        ga = GAConfig(
            population_size=int(ga_sec.get("population_size", 16)),
            sequence_length=int(ga_sec.get("sequence_length", 8)),
            iterations=int(ga_sec.get("iterations", 20)),
            shots=shots,
            mutation_prob_init=float(ga_sec.get("mutation_prob_init", 0.7)),
            mutation_step=float(ga_sec.get("mutation_step", 0.1)),
            mutation_bounds=tuple(ga_sec.get("mutation_bounds", (0.1, 0.9))),
            equilibrium_statistic=str(ga_sec.get("equilibrium_statistic", "range")),
            far_threshold=float(ga_sec.get("far_threshold", 0.15)),
            close_threshold=float(ga_sec.get("close_threshold", 0.03)),
            mutation_direction=str(ga_sec.get("mutation_direction", "paper")),
            utility_target=(
                float(ga_sec["utility_target"]) if "utility_target" in ga_sec else None
            ),
            seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(f"bad [ga] section: {exc}") from None

    backend_sec = data.get("backend", {})
    trajectories = backend_sec.get("trajectories")
    trajectories = int(trajectories) if trajectories is not None else None

    baselines_sec = data.get("baselines", {})
    trained = {
        str(name): Path(p)
        for name, p in dict(baselines_sec.get("trained", {})).items()
    }
    # Referenced artifact files (trained strategies, replay checkpoints) are
    # validated by the commands that consume them: one config file commonly
    # drives a train phase and a later replay phase against its outputs.
    replay_sec = dict(data.get("replay", {}))

    return ExperimentConfig(
        kind=kind,
        seed=seed,
        shots=shots,
        out_dir=out_dir,
        workload=dict(data.get("workload", {})),
        noise=dict(data.get("noise", {})),
        timing=timing,
        ga=ga,
        max_colors=int(ga_sec.get("max_colors", 3)),
        baselines=list(
            baselines_sec.get("include", ["cpmg", "cpmg_pm", "xy4", "edd", "ur16"])
        ),
        baseline_repeats=int(baselines_sec.get("repeats", 5)),
        trained_strategies=trained,
        trajectories=trajectories,
        statevector_limit=int(backend_sec.get("statevector_limit", 14)),
        mrb_scan=dict(data.get("mrb_scan", {})),
        explore=dict(data.get("explore", {})),
        replay=replay_sec,
        source_path=path,
        raw_bytes=raw,
    )
