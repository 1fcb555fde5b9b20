"""MNK-landscape problem instances: generation, evaluation, persistence.

An instance is M independent NK components over one length-N bitstring.
Component m gives variable n a random neighborhood of K other variables and
a lookup table of 2^(K+1) values drawn uniformly from [0, 1]; the m-th
objective of a solution is the mean of the N table lookups, so every
objective lies in [0, 1] and all objectives are maximized.

Conventions used throughout the package:

* a solution is a 1-D ``uint8`` array of length N; its text form is the
  string ``bits[0] bits[1] ... bits[N-1]`` (variable 0 first), so
  lexicographic order of bitstrings equals numeric order with variable 0
  as the most significant bit;
* table lookup index: the variable's own bit is the most significant bit,
  the neighbor bits follow in stored neighbor-list order;
* neighborhoods are drawn independently per objective;
* randomness: PCG64 streams, one per (instance seed, component, variable),
  derived with ``SeedSequence([seed, component, variable])``.

Instances serialize to a versioned JSON document.  Table values are written
as plain JSON numbers; Python emits shortest round-trip decimal reprs for
doubles, so save/load is bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "NKComponent",
    "MNKInstance",
    "MalformedInstanceError",
    "generate_instance",
    "evaluate",
    "evaluate_batch",
    "save_instance",
    "load_instance",
    "bits_to_string",
    "string_to_bits",
    "FORMAT_VERSION",
]

FORMAT_VERSION = 1


class MalformedInstanceError(ValueError):
    """Raised when an instance file violates the documented schema."""


def bits_to_string(bits: np.ndarray) -> str:
    return "".join("1" if b else "0" for b in bits)


def string_to_bits(text: str) -> np.ndarray:
    if any(c not in "01" for c in text):
        raise ValueError(f"bitstring may contain only 0/1, got {text!r}")
    return np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class NKComponent:
    """One NK landscape: neighborhoods and lookup tables for N variables.

    neighbors has shape (N, K); row n lists the K interaction partners of
    variable n, in the order that defines the table index.  tables has shape
    (N, 2^(K+1)) with entries in [0, 1].
    """

    neighbors: np.ndarray
    tables: np.ndarray

    def __post_init__(self) -> None:
        neighbors = np.ascontiguousarray(self.neighbors, dtype=np.int32)
        tables = np.ascontiguousarray(self.tables, dtype=np.float64)
        if neighbors.ndim != 2:
            raise MalformedInstanceError("neighbors must be a 2-D array")
        n, k = neighbors.shape
        if tables.shape != (n, 2 ** (k + 1)):
            raise MalformedInstanceError(
                f"tables must have shape ({n}, {2 ** (k + 1)}) for K={k}, "
                f"got {tables.shape}"
            )
        for var in range(n):
            row = neighbors[var]
            if len(set(row.tolist())) != k:
                raise MalformedInstanceError(
                    f"variable {var}: neighbor list has repeated entries"
                )
            if np.any(row == var):
                raise MalformedInstanceError(
                    f"variable {var}: variable listed as its own neighbor"
                )
            if np.any((row < 0) | (row >= n)):
                raise MalformedInstanceError(
                    f"variable {var}: neighbor index out of range [0, {n})"
                )
        if np.any(tables < 0.0) or np.any(tables > 1.0):
            raise MalformedInstanceError("table entries must lie in [0, 1]")
        object.__setattr__(self, "neighbors", _freeze(neighbors))
        object.__setattr__(self, "tables", _freeze(tables))

    @property
    def n_vars(self) -> int:
        return self.neighbors.shape[0]

    @property
    def k(self) -> int:
        return self.neighbors.shape[1]

    @cached_property
    def _lookup_indices(self) -> np.ndarray:
        # column 0 is the variable itself (most significant table bit)
        idx = np.empty((self.n_vars, self.k + 1), dtype=np.int32)
        idx[:, 0] = np.arange(self.n_vars)
        idx[:, 1:] = self.neighbors
        return _freeze(idx)

    def contributions(self, solutions: np.ndarray) -> np.ndarray:
        """Per-variable table lookups for a (B, N) batch; shape (B, N)."""
        acc = np.zeros(solutions.shape, dtype=np.int32)
        for col in range(self.k + 1):
            acc <<= 1
            acc |= solutions[:, self._lookup_indices[:, col]]
        return self.tables[np.arange(self.n_vars), acc]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NKComponent):
            return NotImplemented
        return np.array_equal(self.neighbors, other.neighbors) and np.array_equal(
            self.tables, other.tables
        )


@dataclass(frozen=True, eq=False)
class MNKInstance:
    """M NK components sharing one set of N binary variables and one K."""

    id: str
    seed: int
    components: tuple[NKComponent, ...] = field(repr=False)

    def __post_init__(self) -> None:
        if not self.components:
            raise MalformedInstanceError("an instance needs at least one component")
        n = self.components[0].n_vars
        k = self.components[0].k
        for i, comp in enumerate(self.components):
            if comp.n_vars != n:
                raise MalformedInstanceError(f"component {i}: N differs ({comp.n_vars} != {n})")
            if comp.k != k:
                raise MalformedInstanceError(f"component {i}: K differs ({comp.k} != {k})")
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def n_vars(self) -> int:
        return self.components[0].n_vars

    @property
    def m_objectives(self) -> int:
        return len(self.components)

    @property
    def k(self) -> int:
        return self.components[0].k

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MNKInstance):
            return NotImplemented
        return (
            self.id == other.id
            and self.seed == other.seed
            and len(self.components) == len(other.components)
            and all(a == b for a, b in zip(self.components, other.components))
        )


def generate_instance(
    seed: int,
    n_vars: int,
    m_objectives: int,
    k: int,
    instance_id: str | None = None,
) -> MNKInstance:
    """Draw a random MNK instance; a pure function of its arguments.

    Each variable of each component gets its own PCG64 stream seeded with
    ``SeedSequence([seed, component, variable])``; the stream draws the
    K-subset of neighbors (uniform, excluding the variable itself) and then
    the 2^(K+1) table values.
    """
    if n_vars < 1:
        raise ValueError(f"n_vars must be positive, got {n_vars}")
    if m_objectives < 1:
        raise ValueError(f"m_objectives must be positive, got {m_objectives}")
    if not 0 <= k < n_vars:
        raise ValueError(f"k must satisfy 0 <= k < n_vars, got k={k}, n_vars={n_vars}")
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")

    components = []
    for comp_index in range(m_objectives):
        neighbors = np.empty((n_vars, k), dtype=np.int32)
        tables = np.empty((n_vars, 2 ** (k + 1)), dtype=np.float64)
        for var in range(n_vars):
            rng = np.random.default_rng(np.random.SeedSequence([seed, comp_index, var]))
            candidates = np.delete(np.arange(n_vars, dtype=np.int32), var)
            neighbors[var] = rng.choice(candidates, size=k, replace=False)
            tables[var] = rng.random(2 ** (k + 1))
        components.append(NKComponent(neighbors=neighbors, tables=tables))

    if instance_id is None:
        instance_id = f"mnk-n{n_vars}-m{m_objectives}-k{k}-s{seed}"
    return MNKInstance(id=instance_id, seed=seed, components=tuple(components))


def evaluate_batch(instance: MNKInstance, solutions: np.ndarray) -> np.ndarray:
    """Objective vectors for a (B, N) batch of solutions; shape (B, M)."""
    solutions = np.asarray(solutions)
    if solutions.ndim != 2 or solutions.shape[1] != instance.n_vars:
        raise ValueError(
            f"expected shape (batch, {instance.n_vars}), got {solutions.shape}"
        )
    solutions = solutions.astype(np.int32, copy=False)
    out = np.empty((solutions.shape[0], instance.m_objectives), dtype=np.float64)
    for m, comp in enumerate(instance.components):
        out[:, m] = comp.contributions(solutions).mean(axis=1)
    return out


def evaluate(instance: MNKInstance, solution: np.ndarray) -> np.ndarray:
    """Objective vector of one solution (length-M float array)."""
    solution = np.asarray(solution)
    if solution.ndim != 1 or solution.shape[0] != instance.n_vars:
        raise ValueError(
            f"solution length {solution.shape} does not match N={instance.n_vars}"
        )
    return evaluate_batch(instance, solution[np.newaxis, :])[0]


def _instance_to_dict(instance: MNKInstance) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "id": instance.id,
        "seed": instance.seed,
        "n": instance.n_vars,
        "m": instance.m_objectives,
        "k": instance.k,
        "components": [
            {
                "neighbors": comp.neighbors.tolist(),
                "tables": comp.tables.tolist(),
            }
            for comp in instance.components
        ],
    }


def save_instance(instance: MNKInstance, path: str | Path) -> None:
    """Write the instance as versioned JSON (lossless float round-trip)."""
    path = Path(path)
    text = json.dumps(_instance_to_dict(instance), indent=1)
    path.write_text(text + "\n", encoding="utf-8")


def _require(doc: dict, key: str, kind: type, path: Path):
    if key not in doc:
        raise MalformedInstanceError(f"{path}: missing field {key!r}")
    value = doc[key]
    if kind is int and (not isinstance(value, int) or isinstance(value, bool)):
        raise MalformedInstanceError(f"{path}: field {key!r} must be an integer")
    if kind is str and not isinstance(value, str):
        raise MalformedInstanceError(f"{path}: field {key!r} must be a string")
    if kind is list and not isinstance(value, list):
        raise MalformedInstanceError(f"{path}: field {key!r} must be a list")
    return value


def load_instance(path: str | Path) -> MNKInstance:
    """Read an instance file, validating every documented invariant."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedInstanceError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise MalformedInstanceError(f"{path}: top-level value must be an object")
    version = _require(doc, "format_version", int, path)
    if version != FORMAT_VERSION:
        raise MalformedInstanceError(
            f"{path}: unsupported format_version {version} (expected {FORMAT_VERSION})"
        )
    instance_id = _require(doc, "id", str, path)
    seed = _require(doc, "seed", int, path)
    n = _require(doc, "n", int, path)
    m = _require(doc, "m", int, path)
    k = _require(doc, "k", int, path)
    raw_components = _require(doc, "components", list, path)
    if len(raw_components) != m:
        raise MalformedInstanceError(
            f"{path}: expected {m} components, found {len(raw_components)}"
        )
    components = []
    for ci, raw in enumerate(raw_components):
        if not isinstance(raw, dict):
            raise MalformedInstanceError(f"{path}: components[{ci}] must be an object")
        neighbors = _require(raw, "neighbors", list, path)
        tables = _require(raw, "tables", list, path)
        try:
            neighbors_arr = np.array(neighbors, dtype=np.int32)
            tables_arr = np.array(tables, dtype=np.float64)
        except ValueError as exc:
            raise MalformedInstanceError(
                f"{path}: components[{ci}] is ragged or non-numeric ({exc})"
            ) from exc
        if neighbors_arr.ndim != 2 or neighbors_arr.shape != (n, k):
            raise MalformedInstanceError(
                f"{path}: components[{ci}].neighbors must have shape ({n}, {k}), "
                f"got {neighbors_arr.shape}"
            )
        if tables_arr.ndim != 2 or tables_arr.shape[0] != n:
            raise MalformedInstanceError(
                f"{path}: components[{ci}].tables must have {n} rows"
            )
        if tables_arr.shape[1] != 2 ** (k + 1):
            raise MalformedInstanceError(
                f"{path}: components[{ci}].tables rows must have length "
                f"{2 ** (k + 1)}, got {tables_arr.shape[1]}"
            )
        try:
            components.append(NKComponent(neighbors=neighbors_arr, tables=tables_arr))
        except MalformedInstanceError as exc:
            raise MalformedInstanceError(f"{path}: components[{ci}]: {exc}") from exc
    try:
        return MNKInstance(id=instance_id, seed=seed, components=tuple(components))
    except MalformedInstanceError as exc:
        raise MalformedInstanceError(f"{path}: {exc}") from exc
