"""Experiment drivers: train / compare-baselines / mrb-scan / explore /
replay, with deterministic reports, per-iteration checkpoints, and resume.

Every artifact is a pure function of (config file, seed): reports carry the
config hash and seed, floats are serialized verbatim, and nothing reads the
clock.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .backend import LocalSimulatorBackend
from .config import ExperimentConfig
from .ga import GAConfig, IterationRecord, TrainingResult, run_gadd
from .metrics import (
    FitFailure,
    fit_epl,
    mrb_training_utility,
    one_norm_utility,
    polarization_point,
    success_probability,
)
from .scheduler import GateTimingModel, ScheduledCircuit, find_idle_gaps, insert_dd
from .sim import NoiseModel, desk_device_noise, simulate_ideal
from .strategy import (
    ColorAssignment,
    DDStrategy,
    Population,
    UnsupportedBaseline,
    canonical_strategies,
    color_graph,
)
from .topology import Topology
from .workloads import (
    bv_circuit,
    cliffordize,
    ghz_circuit,
    grover_circuit,
    grover_default_iterations,
    mrb_training_set,
)

__all__ = [
    "CheckpointCorrupt",
    "WorkloadBundle",
    "build_workload",
    "build_noise",
    "cmd_train",
    "cmd_compare_baselines",
    "cmd_mrb_scan",
    "cmd_explore",
    "cmd_replay",
    "cmd_workload",
    "load_checkpoint",
    "load_strategy",
]


class CheckpointCorrupt(ValueError):
    pass


# --------------------------------------------------------------------------
# deterministic artifact IO
# --------------------------------------------------------------------------


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _report_header(config: ExperimentConfig, command: str) -> dict:
    return {
        "command": command,
        "config_hash": config.hash,
        "seed": config.seed,
        "versions": {"ddforge": __version__, "numpy": np.__version__},
    }


def save_strategy(path: Path, strategy: DDStrategy) -> None:
    write_json(path, strategy.to_json_dict())


def load_strategy(path: Path) -> DDStrategy:
    try:
        return DDStrategy.from_json_dict(json.loads(Path(path).read_text()))
    except (OSError, KeyError, ValueError) as exc:
        raise CheckpointCorrupt(f"cannot load strategy from {path}: {exc}") from None


def save_checkpoint(path: Path, record: IterationRecord, master_seed: int) -> None:
    write_json(
        path,
        {
            "generation": record.iteration,
            "mutation_prob": record.mutation_prob,
            "strategies": [json.loads(s) for s in record.population],
            "utilities": record.utilities,
            "master_seed": master_seed,
        },
    )


def load_checkpoint(path: Path) -> tuple[Population, float, int]:
    try:
        data = json.loads(Path(path).read_text())
        strategies = [DDStrategy.from_json_dict(d) for d in data["strategies"]]
        pop = Population(
            strategies=strategies,
            utilities=[float(u) for u in data["utilities"]],
            generation=int(data["generation"]),
        )
        return pop, float(data["mutation_prob"]), int(data["master_seed"])
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise CheckpointCorrupt(f"cannot load checkpoint {path}: {exc}") from None


def latest_checkpoint(out_dir: Path) -> Path | None:
    candidates = sorted(out_dir.glob("checkpoint_*.json"))
    return candidates[-1] if candidates else None


# --------------------------------------------------------------------------
# workload assembly
# --------------------------------------------------------------------------


@dataclass
class WorkloadBundle:
    """Training circuits plus the utility that scores their joint output."""

    kind: str
    circuits: list[ScheduledCircuit]
    utility: Callable[[list], float]
    coloring: ColorAssignment
    metadata: dict

    @property
    def coupling_edges(self) -> tuple[tuple[int, int], ...]:
        return self.circuits[0].coupling_edges


def _topology(name: str, size: int) -> Topology:
    if name == "line":
        return Topology.line(size)
    if name == "ring":
        return Topology.ring(size)
    if name == "complete":
        return Topology.complete(size)
    if name == "heavy_hex":
        return Topology.heavy_hex_fragment()
    raise ValueError(f"unknown topology {name!r}")


def _union_interaction_edges(circuits: Sequence[ScheduledCircuit]) -> tuple:
    edges = set()
    for c in circuits:
        edges.update(c.interaction_edges())
    return tuple(sorted(edges))


def build_workload(config: ExperimentConfig) -> WorkloadBundle:
    w = config.workload
    kind = config.kind
    timing = config.timing
    if kind == "bv":
        n = int(w.get("n", 9))
        topo = _topology(str(w.get("topology", "line")), n + 1)
        circuit, target = bv_circuit(n, topo, timing)
        circuits = [circuit]
        utility = lambda counts: float(success_probability(counts[0], target))
        meta = {"kind": kind, "n": n, "target": target}
    elif kind == "ghz":
        n = int(w.get("n", 8))
        topo = _topology(str(w.get("topology", "line")), n)
        circuit, ideal = ghz_circuit(n, topo, timing)
        circuits = [circuit]
        utility = lambda counts: float(one_norm_utility(counts[0], ideal))
        meta = {"kind": kind, "n": n, "ideal": ideal}
    elif kind == "grover":
        n = int(w.get("n", 5))
        oracle = str(w.get("oracle_bits", "1" * n))
        iterations = int(w.get("iterations", grover_default_iterations(n)))
        circuit = grover_circuit(n, oracle, iterations, timing)
        if bool(w.get("cliffordized", False)):
            rng = np.random.default_rng(
                np.random.SeedSequence([config.seed, 11])
            )
            circuit = cliffordize(circuit, rng)
        ideal = simulate_ideal(circuit, config.statevector_limit)
        circuits = [circuit]
        utility = lambda counts: float(one_norm_utility(counts[0], ideal))
        meta = {
            "kind": kind,
            "n": n,
            "oracle_bits": oracle,
            "iterations": iterations,
            "cliffordized": bool(w.get("cliffordized", False)),
        }
    elif kind == "mrb":
        width = int(w.get("width", 10))
        layers = int(w.get("layers", 6))
        count = int(w.get("count", 5))
        flavor = str(w.get("flavor", "clifford"))
        density = float(w.get("two_qubit_density", 0.25))
        topo_name = str(w.get("topology", "line"))
        edges = _topology(topo_name, width).induced(width)
        pairs = mrb_training_set(
            width, layers, count, flavor, config.seed, edges, density, timing
        )
        circuits = [c for c, _ in pairs]
        targets = [t for _, t in pairs]

        def utility(counts_list, _targets=targets):
            per = [
                float(success_probability(c, t)) for c, t in zip(counts_list, _targets)
            ]
            return float(mrb_training_utility(per))

        meta = {
            "kind": kind,
            "width": width,
            "layers": layers,
            "count": count,
            "flavor": flavor,
            "targets": targets,
        }
    else:  # pragma: no cover - guarded by config validation
        raise ValueError(f"unknown workload kind {kind!r}")

    interaction = _union_interaction_edges(circuits)
    num_qubits = circuits[0].num_qubits
    max_colors = config.max_colors if kind != "grover" else max(config.max_colors, num_qubits)
    coloring = color_graph(interaction, num_qubits, max_colors)
    return WorkloadBundle(
        kind=kind, circuits=circuits, utility=utility, coloring=coloring, metadata=meta
    )


def build_noise(config: ExperimentConfig, coupling_edges) -> NoiseModel:
    sec = config.noise
    preset = str(sec.get("preset", "desk_device"))
    scale = float(sec.get("scale", 1.0))
    if preset == "none":
        base = NoiseModel()
    elif preset == "desk_device":
        base = desk_device_noise(coupling_edges, scale)
    else:
        raise ValueError(f"unknown noise preset {preset!r}")
    overrides = {}
    for key in ("sigma_x", "sigma_y", "sigma_z", "flip_angle_error",
                "markovian_dephasing_rate", "readout_error"):
        if key in sec:
            overrides[key] = float(sec[key])
    if "zz_j" in sec:
        overrides["zz_coupling"] = {
            tuple(sorted(e)): float(sec["zz_j"]) for e in coupling_edges
        }
    if "identity_as_2pi_pulse" in sec:
        overrides["identity_as_2pi_pulse"] = bool(sec["identity_as_2pi_pulse"])
    if not overrides:
        return base
    from dataclasses import replace

    return replace(base, **overrides)


def _make_backend(config: ExperimentConfig, noise: NoiseModel) -> LocalSimulatorBackend:
    return LocalSimulatorBackend(
        noise=noise,
        trajectories=config.trajectories,
        statevector_limit=config.statevector_limit,
    )


# --------------------------------------------------------------------------
# evaluation helpers
# --------------------------------------------------------------------------


def _max_insertable_length(circuits, timing: GateTimingModel) -> int:
    longest = 0.0
    for c in circuits:
        for gap in find_idle_gaps(c, 0.0):
            longest = max(longest, gap.duration)
    return int(longest // timing.pulse_duration)


def evaluate_option(
    bundle: WorkloadBundle,
    strategy: DDStrategy | None,
    backend,
    shots: int,
    seeds: Sequence,
    timing: GateTimingModel,
) -> list[float]:
    """Utility of a DD option (None = bare circuits) over several eval seeds."""
    if strategy is None:
        circuits = bundle.circuits
    else:
        circuits = [insert_dd(c, strategy, bundle.coloring, timing) for c in bundle.circuits]
    values = []
    for seed in seeds:
        counts = backend.submit(circuits, shots, seed)
        values.append(float(bundle.utility(counts)))
    return values


def _mean_stderr(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size <= 1:
        return float(arr.mean()), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def _comparison_rows(
    bundle: WorkloadBundle,
    backend,
    config: ExperimentConfig,
    extra: dict[str, DDStrategy],
    seed_tag: int,
) -> list[dict]:
    timing = config.timing
    repeats = config.baseline_repeats
    seeds = [
        np.random.SeedSequence([config.seed, seed_tag, r]) for r in range(repeats)
    ]
    max_len = _max_insertable_length(bundle.circuits, timing)
    suite = canonical_strategies(bundle.coloring.num_colors, max_len)
    options: list[tuple[str, DDStrategy | UnsupportedBaseline | None]] = [("no_dd", None)]
    wanted = set(config.baselines)
    for name, strat in suite.items():
        base = name.rsplit("_", 1)[0] if name != "ur16" else "ur16"
        if base in wanted or name in wanted:
            options.append((name, strat))
    options.extend(extra.items())

    rows = []
    for name, strat in options:
        if isinstance(strat, UnsupportedBaseline):
            rows.append(
                {"name": name, "status": "unsupported", "reason": strat.reason,
                 "mean": None, "stderr": None, "values": []}
            )
            continue
        values = evaluate_option(bundle, strat, backend, config.shots, seeds, timing)
        mean, stderr = _mean_stderr(values)
        rows.append(
            {"name": name, "status": "ok", "mean": mean, "stderr": stderr,
             "values": values}
        )
    return rows


def _best_supported(rows: list[dict], exclude: Sequence[str]) -> dict | None:
    candidates = [
        r for r in rows if r["status"] == "ok" and r["name"] not in exclude
    ]
    return max(candidates, key=lambda r: r["mean"], default=None)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_train(config: ExperimentConfig, resume: bool = False) -> dict:
    """Run the GA against the configured backend; write trace, checkpoints,
    the best strategy, and a final baseline-comparison report."""
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    bundle = build_workload(config)
    noise = build_noise(config, bundle.coupling_edges)
    backend = _make_backend(config, noise)

    initial_pop = None
    initial_prob = None
    if resume:
        ckpt = latest_checkpoint(out)
        if ckpt is not None:
            initial_pop, initial_prob, saved_seed = load_checkpoint(ckpt)
            if saved_seed != config.seed:
                raise CheckpointCorrupt(
                    f"checkpoint seed {saved_seed} != config seed {config.seed}"
                )

    trace_path = out / "trace.jsonl"
    mode = "a" if (resume and initial_pop is not None) else "w"
    trace_fh = trace_path.open(mode)

    def on_iteration(record: IterationRecord) -> None:
        trace_fh.write(json.dumps(record.to_json_dict(), sort_keys=True) + "\n")
        trace_fh.flush()
        save_checkpoint(
            out / f"checkpoint_{record.iteration:03d}.json", record, config.seed
        )

    try:
        result = run_gadd(
            bundle.circuits,
            bundle.utility,
            backend,
            bundle.coloring,
            config.ga,
            config.timing,
            initial_population=initial_pop,
            initial_mutation_prob=initial_prob,
            on_iteration=on_iteration,
        )
    finally:
        trace_fh.close()

    save_strategy(out / "strategy_best.json", result.best_strategy)

    rows = _comparison_rows(
        bundle, backend, config, {"ga_best": result.best_strategy}, seed_tag=9
    )
    best_baseline = _best_supported(rows, exclude=("ga_best",))
    ga_row = next(r for r in rows if r["name"] == "ga_best")
    report = _report_header(config, "train")
    report.update(
        {
            "workload": bundle.metadata,
            "coloring": list(bundle.coloring.colors),
            "ga": {
                "iterations_run": result.records[-1].iteration,
                "best_utility_trained": result.best_utility,
                "best_strategy": result.best_strategy.to_json_dict(),
                "best_utility_trace": result.best_utility_trace,
            },
            "comparison": rows,
            "summary": {
                "ga_mean": ga_row["mean"],
                "best_baseline": None if best_baseline is None else best_baseline["name"],
                "best_baseline_mean": None if best_baseline is None else best_baseline["mean"],
                "margin": None
                if best_baseline is None
                else ga_row["mean"] - best_baseline["mean"],
            },
        }
    )
    write_json(out / "report.json", report)
    write_csv(
        out / "report.csv",
        ["name", "status", "mean", "stderr"],
        [[r["name"], r["status"], r["mean"], r["stderr"]] for r in rows],
    )
    return report


def cmd_compare_baselines(config: ExperimentConfig) -> dict:
    """Evaluate the canonical suite plus saved strategies on the workload."""
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    bundle = build_workload(config)
    noise = build_noise(config, bundle.coupling_edges)
    backend = _make_backend(config, noise)
    extra = {
        name: load_strategy(path) for name, path in config.trained_strategies.items()
    }
    rows = _comparison_rows(bundle, backend, config, extra, seed_tag=9)
    report = _report_header(config, "compare-baselines")
    report.update({"workload": bundle.metadata, "comparison": rows})
    write_json(out / "report.json", report)
    write_csv(
        out / "report.csv",
        ["name", "status", "mean", "stderr"],
        [[r["name"], r["status"], r["mean"], r["stderr"]] for r in rows],
    )
    return report


def cmd_mrb_scan(config: ExperimentConfig) -> dict:
    """EPL vs width for each DD option; fit failures recorded as no-signal."""
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    scan = config.mrb_scan
    widths = [int(v) for v in scan.get("widths", (2, 4, 6, 8))]
    depths = [int(v) for v in scan.get("depths", (2, 4, 8, 16))]
    per_depth = int(scan.get("circuits_per_depth", 5))
    flavor = str(scan.get("flavor", "clifford"))
    density = float(scan.get("two_qubit_density", 0.25))
    timing = config.timing

    trained = {
        name: load_strategy(path) for name, path in config.trained_strategies.items()
    }
    option_names = list(
        scan.get(
            "options",
            ["no_dd", "cpmg_staggered", "xy4_staggered", "edd_staggered"]
            + list(trained),
        )
    )

    decay_rows = []
    cells = []
    for width in widths:
        edges = Topology.line(width).edges
        coloring = color_graph(edges, width, config.max_colors)
        noise = build_noise(config, edges)
        backend = _make_backend(config, noise)
        circuits: dict[int, list] = {}
        for depth in depths:
            sets = mrb_training_set(
                width,
                depth,
                per_depth,
                flavor,
                (config.seed, 13, width, depth),
                edges,
                density,
                timing,
            )
            circuits[depth] = sets
        max_len = _max_insertable_length(
            [c for group in circuits.values() for c, _ in group], timing
        )
        suite = canonical_strategies(coloring.num_colors, max_len)
        for name in option_names:
            if name == "no_dd":
                strategy = None
            elif name in trained:
                strategy = trained[name]
            elif name in suite:
                strat = suite[name]
                if isinstance(strat, UnsupportedBaseline):
                    cells.append(
                        {"option": name, "width": width, "status": "unsupported",
                         "reason": strat.reason, "epl": None}
                    )
                    continue
                strategy = strat
            else:
                raise ValueError(f"unknown scan option {name!r}")
            points = []
            for depth in depths:
                for i, (circ, target) in enumerate(circuits[depth]):
                    run = circ if strategy is None else insert_dd(
                        circ, strategy, coloring, timing
                    )
                    seed = np.random.SeedSequence(
                        [config.seed, 17, width, depth, i]
                    )
                    counts = backend.submit([run], config.shots, seed)[0]
                    pt = polarization_point(counts, target, width, depth)
                    points.append(pt)
                    decay_rows.append(
                        [name, width, depth, pt.polarization, pt.uncertainty]
                    )
            try:
                fit = fit_epl(points, width)
                cells.append(
                    {"option": name, "width": width, "status": "ok",
                     "epl": fit["epl"], "A": fit["A"], "p": fit["p"]}
                )
            except FitFailure as exc:
                cells.append(
                    {"option": name, "width": width, "status": "no_signal",
                     "reason": str(exc), "epl": None}
                )

    report = _report_header(config, "mrb-scan")
    report.update(
        {
            "widths": widths,
            "depths": depths,
            "circuits_per_depth": per_depth,
            "flavor": flavor,
            "cells": cells,
        }
    )
    write_json(out / "report.json", report)
    write_csv(out / "decay.csv", ["option", "N", "D", "S", "stderr"], decay_rows)
    write_csv(
        out / "report.csv",
        ["option", "N", "status", "epl"],
        [[c["option"], c["width"], c["status"], c["epl"]] for c in cells],
    )
    return report


def cmd_explore(config: ExperimentConfig) -> dict:
    """Initial-population exploration table (uniform vs random)."""
    from .ga import simulate_exploration

    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    sec = config.explore
    probs = [float(p) for p in sec.get("probs", np.round(np.arange(0.1, 1.0, 0.1), 1))]
    table = simulate_exploration(
        init=str(sec.get("init", "both")),
        mutation_probs=probs,
        trials=int(sec.get("trials", 25)),
        iterations=int(sec.get("iterations", 7)),
        seed=config.seed,
        init_size=int(sec.get("init_size", 16)),
        pool_size=int(sec.get("pool_size", 100)),
    )
    report = _report_header(config, "explore")
    report.update({"table": table})
    write_json(out / "report.json", report)
    rows = []
    for mode, payload in table["modes"].items():
        for prob, series in payload["unique_strategies"].items():
            for it, mean in enumerate(series, start=1):
                rows.append([mode, prob, it, mean])
    write_csv(out / "report.csv", ["mode", "mutation_prob", "iteration", "mean_unique"], rows)
    return report


def perturb_noise(noise: NoiseModel, fraction: float, seed) -> NoiseModel:
    """Scale every noise parameter by an independent factor in [1-f, 1+f]."""
    rng = np.random.default_rng(seed)

    def factor():
        return float(rng.uniform(1.0 - fraction, 1.0 + fraction))

    def scale_val(v):
        arr = np.asarray(v, dtype=float)
        if arr.ndim == 0:
            return float(arr) * factor()
        return tuple(float(x) * factor() for x in arr)

    return NoiseModel(
        sigma_x=scale_val(noise.sigma_x),
        sigma_y=scale_val(noise.sigma_y),
        sigma_z=scale_val(noise.sigma_z),
        mean_field=noise.mean_field,
        zz_coupling={e: j * factor() for e, j in sorted(noise.zz_coupling.items())},
        flip_angle_error=noise.flip_angle_error * factor(),
        markovian_dephasing_rate=scale_val(noise.markovian_dephasing_rate),
        readout_error=None if noise.readout_error is None else scale_val(noise.readout_error),
        identity_as_2pi_pulse=noise.identity_as_2pi_pulse,
    )


def cmd_replay(config: ExperimentConfig) -> dict:
    """Re-evaluate a saved population and the baselines under perturbed noise.

    Reports mean and max utility per saved strategy over the configured
    repeats and whether the saved best strategy still outranks every
    baseline; a regression is flagged, not fatal.
    """
    sec = config.replay
    if "checkpoint" not in sec:
        raise CheckpointCorrupt("replay requires [replay].checkpoint")
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    pop, mutation_prob, saved_seed = load_checkpoint(Path(sec["checkpoint"]))
    fraction = float(sec.get("perturbation", 0.1))
    pert_seed = int(sec.get("perturbation_seed", 0))
    repeats = int(sec.get("repeats", 10))

    bundle = build_workload(config)
    noise = build_noise(config, bundle.coupling_edges)
    perturbed = perturb_noise(noise, fraction, np.random.SeedSequence([config.seed, 23, pert_seed]))
    backend = _make_backend(config, perturbed)
    seeds = [np.random.SeedSequence([config.seed, 29, pert_seed, r]) for r in range(repeats)]

    saved_best_idx = int(np.argmax(pop.utilities))
    strategy_rows = []
    for i, strat in enumerate(pop.strategies):
        values = evaluate_option(bundle, strat, backend, config.shots, seeds, config.timing)
        strategy_rows.append(
            {
                "index": i,
                "strategy": strat.to_json_dict(),
                "stored_utility": pop.utilities[i],
                "mean": float(np.mean(values)),
                "max": float(np.max(values)),
                "values": values,
            }
        )

    baseline_rows = _comparison_rows(bundle, backend, config, {}, seed_tag=31)
    best_row = strategy_rows[saved_best_idx]
    supported = [r for r in baseline_rows if r["status"] == "ok" and r["name"] != "no_dd"]
    ranking_preserved = all(best_row["mean"] > r["mean"] for r in supported)

    report = _report_header(config, "replay")
    report.update(
        {
            "workload": bundle.metadata,
            "checkpoint": str(sec["checkpoint"]),
            "checkpoint_seed": saved_seed,
            "perturbation": fraction,
            "perturbation_seed": pert_seed,
            "population_generation": pop.generation,
            "mutation_prob": mutation_prob,
            "strategies": strategy_rows,
            "baselines": baseline_rows,
            "saved_best_index": saved_best_idx,
            "ranking_preserved": ranking_preserved,
        }
    )
    write_json(out / "report.json", report)
    write_csv(
        out / "report.csv",
        ["name", "mean", "max"],
        [[f"strategy_{r['index']}", r["mean"], r["max"]] for r in strategy_rows]
        + [[r["name"], r["mean"], None] for r in baseline_rows],
    )
    return report


def cmd_workload(config: ExperimentConfig) -> dict:
    """Emit the generated training circuit(s) in the scheduler JSON schema."""
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    bundle = build_workload(config)
    payload = {
        "metadata": dict(bundle.metadata, seed=config.seed),
        "circuits": [c.to_json_dict() for c in bundle.circuits],
    }
    write_json(out / "workload.json", payload)
    return payload
