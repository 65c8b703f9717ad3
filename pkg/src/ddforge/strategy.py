"""DD sequences, multi-color strategies, coloring, baselines, and populations.

A *sequence* is an ordered list of pulse labels whose frames multiply to the
identity.  A *strategy* assigns one sequence and one timing mode to each
qubit color; colors come from greedy coloring of the circuit's interaction
graph so that entangled neighbors never share a sequence and can therefore be
staggered against each other.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .pauli import (
    GROUP_SIZE,
    PauliFrame,
    PulseLabel,
    frame_product,
)

__all__ = [
    "TimingMode",
    "DDSequence",
    "ColorAssignment",
    "DDStrategy",
    "Population",
    "UnsupportedBaseline",
    "ColoringOverflow",
    "InvalidPopulationSize",
    "color_graph",
    "uniform_initial_population",
    "canonical_strategies",
    "strategy_space_size",
    "equivalence_class_count",
    "default_timing_modes",
]


class ColoringOverflow(ValueError):
    """Greedy coloring needed more colors than allowed."""


class InvalidPopulationSize(ValueError):
    """Population size incompatible with the balanced construction."""


class TimingMode(str, enum.Enum):
    SYMMETRIC = "symmetric"
    ASYM_EARLY = "asym_early"
    ASYM_LATE = "asym_late"


def default_timing_modes(num_colors: int) -> tuple[TimingMode, ...]:
    """Per-color timing fixed by color index: symmetric, early, late, cycling."""
    cycle = (TimingMode.SYMMETRIC, TimingMode.ASYM_EARLY, TimingMode.ASYM_LATE)
    return tuple(cycle[c % 3] for c in range(num_colors))


@dataclass(frozen=True)
class DDSequence:
    """Length-L pulse sequence with identity frame product."""

    pulses: tuple[PulseLabel, ...]

    def __post_init__(self):
        if len(self.pulses) < 2:
            raise ValueError("DD sequences need at least 2 pulses")
        if frame_product(self.pulses) is not PauliFrame.I:
            raise ValueError(
                f"sequence {self.serialize()} does not frame-multiply to identity"
            )

    def __len__(self) -> int:
        return len(self.pulses)

    def serialize(self) -> str:
        return "".join(p.token for p in self.pulses)

    @classmethod
    def from_string(cls, text: str) -> "DDSequence":
        if len(text) % 2:
            raise ValueError(f"malformed sequence string {text!r}")
        pulses = tuple(
            PulseLabel.from_token(text[i : i + 2]) for i in range(0, len(text), 2)
        )
        return cls(pulses)

    @classmethod
    def from_codes(cls, codes: Iterable[int]) -> "DDSequence":
        return cls(tuple(PulseLabel(int(c)) for c in codes))

    def codes(self) -> np.ndarray:
        return np.array([int(p) for p in self.pulses], dtype=np.uint8)


@dataclass(frozen=True)
class ColorAssignment:
    """Map qubit index -> color index in 1..C."""

    colors: tuple[int, ...]

    def __post_init__(self):
        if any(c < 1 for c in self.colors):
            raise ValueError("colors are 1-based")

    @property
    def num_colors(self) -> int:
        return max(self.colors) if self.colors else 0

    def color_of(self, qubit: int) -> int:
        return self.colors[qubit]

    def validate_against(self, edges: Iterable[tuple[int, int]]) -> None:
        for a, b in edges:
            if self.colors[a] == self.colors[b]:
                raise ValueError(f"edge ({a},{b}) joins two qubits of color {self.colors[a]}")


@dataclass(frozen=True)
class DDStrategy:
    """One DD sequence plus timing mode per color; all sequences share L."""

    sequences: tuple[DDSequence, ...]
    timing_modes: tuple[TimingMode, ...] = ()

    def __post_init__(self):
        if not self.sequences:
            raise ValueError("strategy needs at least one color")
        lengths = {len(s) for s in self.sequences}
        if len(lengths) != 1:
            raise ValueError("all per-color sequences must share one length")
        if not self.timing_modes:
            object.__setattr__(
                self, "timing_modes", default_timing_modes(len(self.sequences))
            )
        if len(self.timing_modes) != len(self.sequences):
            raise ValueError("one timing mode per color required")

    @property
    def num_colors(self) -> int:
        return len(self.sequences)

    @property
    def length(self) -> int:
        return len(self.sequences[0])

    def sequence_for_color(self, color: int) -> DDSequence:
        return self.sequences[color - 1]

    def mode_for_color(self, color: int) -> TimingMode:
        return self.timing_modes[color - 1]

    def to_json_dict(self) -> dict:
        return {
            "colors": [
                {"pulses": seq.serialize(), "timing": mode.value}
                for seq, mode in zip(self.sequences, self.timing_modes)
            ]
        }

    def serialize(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "DDStrategy":
        seqs = tuple(DDSequence.from_string(c["pulses"]) for c in data["colors"])
        modes = tuple(TimingMode(c["timing"]) for c in data["colors"])
        return cls(seqs, modes)

    @classmethod
    def uniform(cls, sequence: DDSequence, num_colors: int) -> "DDStrategy":
        """Replicate one sequence across all colors with the default modes."""
        return cls(tuple(sequence for _ in range(num_colors)))


@dataclass
class Population:
    """A GA generation: K strategies, optional utilities, generation index."""

    strategies: list[DDStrategy]
    utilities: list[float] | None = None
    generation: int = 0

    def __post_init__(self):
        if len(self.strategies) % 4:
            raise ValueError("population size must be divisible by 4")
        if self.utilities is not None and len(self.utilities) != len(self.strategies):
            raise ValueError("one utility per strategy required")

    @property
    def size(self) -> int:
        return len(self.strategies)

    def best(self) -> tuple[DDStrategy, float]:
        if self.utilities is None:
            raise ValueError("population not yet evaluated")
        i = int(np.argmax(self.utilities))
        return self.strategies[i], self.utilities[i]


def color_graph(
    interaction_edges: Iterable[tuple[int, int]],
    num_qubits: int,
    max_colors: int = 3,
) -> ColorAssignment:
    """Greedy coloring in qubit-index order, lowest available color first.

    Raises ColoringOverflow when the graph needs more than `max_colors`
    colors, signalling a denser interaction graph than the target
    architecture (planar heavy-hex style graphs never exceed 3).
    """
    if max_colors < 1:
        raise ValueError("max_colors must be >= 1")
    adj: list[set[int]] = [set() for _ in range(num_qubits)]
    for a, b in interaction_edges:
        if a == b:
            raise ValueError(f"self-loop on qubit {a}")
        adj[a].add(b)
        adj[b].add(a)
    colors = [0] * num_qubits
    for q in range(num_qubits):
        taken = {colors[nb] for nb in adj[q] if nb < q}
        c = 1
        while c in taken:
            c += 1
        if c > max_colors:
            raise ColoringOverflow(
                f"qubit {q} needs color {c} > max_colors={max_colors}"
            )
        colors[q] = c
    return ColorAssignment(tuple(colors))


def _balanced_l8_codes(k: int, rng: np.random.Generator) -> np.ndarray:
    """K sequences of length 8: K/8 random label permutations, each cycled
    through all 8 offsets.  Every label lands on every site exactly K/8
    times and each row is a permutation of the full group, hence
    frame-neutral."""
    rows = []
    for _ in range(k // 8):
        perm = rng.permutation(8).astype(np.uint8)
        for shift in range(8):
            rows.append(np.roll(perm, -shift))
    return np.stack(rows)


def _balanced_general_codes(k: int, length: int, rng: np.random.Generator) -> np.ndarray:
    """Site-balanced columns with a bounded swap-repair for identity products.

    Each column is a shuffled balanced multiset (each label K/8 times).  Rows
    whose frames don't cancel are repaired by swapping same-site entries
    between two violating rows whenever the swap strictly reduces the number
    of violating rows; swaps preserve per-site balance.  Falls back to fresh
    columns if a repair pass stalls.
    """
    base_column = np.repeat(np.arange(8, dtype=np.uint8), k // 8)
    for _attempt in range(64):
        cols = [rng.permutation(base_column) for _ in range(length)]
        codes = np.stack(cols, axis=1)
        residual = np.bitwise_xor.reduce(codes >> 1, axis=1)
        budget = 10 * k
        while residual.any() and budget > 0:
            budget -= 1
            bad = np.flatnonzero(residual)
            if len(bad) < 2:
                break
            i1, i2 = rng.choice(bad, size=2, replace=False)
            sites = rng.permutation(length)
            for j in sites:
                delta = (codes[i1, j] >> 1) ^ (codes[i2, j] >> 1)
                r1 = residual[i1] ^ delta
                r2 = residual[i2] ^ delta
                before = (residual[i1] != 0) + (residual[i2] != 0)
                after = (r1 != 0) + (r2 != 0)
                if after < before:
                    codes[i1, j], codes[i2, j] = codes[i2, j], codes[i1, j]
                    residual[i1], residual[i2] = r1, r2
                    break
        if not residual.any():
            return codes
    raise RuntimeError("balanced population repair did not converge")


def uniform_initial_population(
    k: int, length: int, seed, num_colors: int = 1
) -> Population:
    """Site-balanced initial population: each label appears at each site
    exactly K/8 times across the population, and every sequence
    frame-multiplies to identity.  Each strategy applies one sequence to all
    colors; per-color diversity emerges later through reproduction.
    """
    if k % GROUP_SIZE:
        raise InvalidPopulationSize(f"population size {k} not divisible by {GROUP_SIZE}")
    if length < 2:
        raise ValueError("sequence length must be >= 2")
    rng = np.random.default_rng(seed)
    if length == 8:
        codes = _balanced_l8_codes(k, rng)
    else:
        codes = _balanced_general_codes(k, length, rng)
    strategies = [
        DDStrategy.uniform(DDSequence.from_codes(row), num_colors) for row in codes
    ]
    return Population(strategies=strategies, generation=0)


@dataclass(frozen=True)
class UnsupportedBaseline:
    """Placeholder for baselines this pulse alphabet cannot express."""

    name: str
    reason: str


_BASE_SEQUENCES: dict[str, str] = {
    "cpmg": "XpXp",
    "cpmg_pm": "XpXm",
    "xy4": "XpYpXpYp",
    "edd": "XpYpXpYpYpXpYpXp",
}


def canonical_strategies(
    num_colors: int, max_length: int | None = None
) -> dict[str, DDStrategy | UnsupportedBaseline]:
    """Canonical baseline suite in aligned and staggered variants.

    Aligned applies symmetric timing to every color; staggered uses the
    default per-color modes.  UR16 needs phase pulses outside the group and
    is reported as unsupported, as is any sequence longer than `max_length`.
    """
    out: dict[str, DDStrategy | UnsupportedBaseline] = {}
    for name, text in _BASE_SEQUENCES.items():
        seq = DDSequence.from_string(text)
        if max_length is not None and len(seq) > max_length:
            for variant in ("aligned", "staggered"):
                out[f"{name}_{variant}"] = UnsupportedBaseline(
                    f"{name}_{variant}",
                    f"sequence length {len(seq)} exceeds available gap capacity {max_length}",
                )
            continue
        seqs = tuple(seq for _ in range(num_colors))
        out[f"{name}_aligned"] = DDStrategy(
            seqs, tuple(TimingMode.SYMMETRIC for _ in range(num_colors))
        )
        out[f"{name}_staggered"] = DDStrategy(seqs, default_timing_modes(num_colors))
    out["ur16"] = UnsupportedBaseline(
        "ur16", "requires arbitrary-phase pulses outside the Pauli pulse alphabet"
    )
    return out


def strategy_space_size(group_size: int, length: int, num_colors: int) -> int:
    """|G|^((L-1)*C): independent group elements per interval per color."""
    if group_size < 1 or length < 2 or num_colors < 1:
        raise ValueError("need group_size >= 1, length >= 2, colors >= 1")
    return group_size ** ((length - 1) * num_colors)


def equivalence_class_count(group_size: int, length: int) -> int:
    """Number of first-order-equivalent sequence classes: C(|G|+L-2, |G|-1)."""
    if group_size < 1 or length < 2:
        raise ValueError("need group_size >= 1 and length >= 2")
    return math.comb(group_size + length - 2, group_size - 1)
