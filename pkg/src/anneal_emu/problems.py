"""Max-Cut / Ising problem instances.

A problem instance is a weighted undirected graph; the classical cost of a
spin assignment z in {+1,-1}^n is sum_{edges (i,j)} w_ij * z_i * z_j, so the
Max-Cut optimum is the *minimum* of the cost. Basis-state energies use the
least-significant-bit convention: bit k of the basis index is qubit k and
z_k = 1 - 2*bit_k.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import GraphParseError, ResourceLimitError

DEFAULT_QUBIT_LIMIT = 16

_qubit_limit = DEFAULT_QUBIT_LIMIT


def qubit_limit() -> int:
    """Current cap on qubit counts used to guard 2**n allocations."""
    return _qubit_limit


def set_qubit_limit(n: int) -> int:
    """Set the qubit cap, returning the previous value."""
    global _qubit_limit
    if n < 1:
        raise ValueError(f"qubit limit must be >= 1, got {n}")
    previous = _qubit_limit
    _qubit_limit = int(n)
    return previous


def _check_qubit_count(n: int) -> None:
    if n > _qubit_limit:
        raise ResourceLimitError(
            f"{n} qubits exceeds the configured limit of {_qubit_limit}; "
            "raise it with set_qubit_limit() if you really want 2**n amplitudes"
        )


@dataclass(frozen=True)
class Graph:
    """Weighted undirected graph with edges stored as (i, j, w), i < j, no duplicates."""

    n_nodes: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError(f"n_nodes must be positive, got {self.n_nodes}")
        seen = set()
        for i, j, w in self.edges:
            if not (0 <= i < j < self.n_nodes):
                raise ValueError(f"edge ({i}, {j}) violates 0 <= i < j < {self.n_nodes}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            if not np.isfinite(w):
                raise ValueError(f"edge ({i}, {j}) has non-finite weight {w}")
            seen.add((i, j))

    @classmethod
    def from_edges(cls, n_nodes: int, edges) -> "Graph":
        """Build a graph from (i, j) or (i, j, w) items, normalizing endpoint order."""
        normalized = []
        for edge in edges:
            if len(edge) == 2:
                i, j = edge
                w = 1.0
            else:
                i, j, w = edge
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if i > j:
                i, j = j, i
            normalized.append((i, j, float(w)))
        normalized.sort(key=lambda e: (e[0], e[1]))
        return cls(n_nodes=int(n_nodes), edges=tuple(normalized))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def graph_id(self) -> str:
        """Stable short hash of the canonical edge list, for report rows."""
        payload = f"n={self.n_nodes};" + ";".join(
            f"{i},{j},{w!r}" for i, j, w in self.edges
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


def complete_graph(n: int) -> Graph:
    """K_n with unit weights."""
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def maxcut_cost(g: Graph, z) -> float:
    """Classical Ising cost sum w_ij * z_i * z_j; lower is better."""
    z = np.asarray(z)
    if z.shape != (g.n_nodes,):
        raise ValueError(f"assignment length {z.shape} does not match {g.n_nodes} nodes")
    if not np.all(np.abs(z) == 1):
        raise ValueError("assignment entries must be +1 or -1")
    return float(sum(w * z[i] * z[j] for i, j, w in g.edges))


def diagonal_energies(g: Graph) -> np.ndarray:
    """Energies of all 2**n basis states, index bit k = qubit k, z = 1 - 2*bit."""
    _check_qubit_count(g.n_nodes)
    b = np.arange(2 ** g.n_nodes, dtype=np.int64)
    energies = np.zeros(b.shape, dtype=float)
    for i, j, w in g.edges:
        zi = 1 - 2 * ((b >> i) & 1)
        zj = 1 - 2 * ((b >> j) & 1)
        energies += w * zi * zj
    return energies


def erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """G(n, p) with unit weights; deterministic for a fixed seed, may be disconnected."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must be in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    draws = rng.random(len(pairs))
    edges = [pair for pair, d in zip(pairs, draws) if d < p]
    return Graph.from_edges(n, edges)


def is_connected(g: Graph) -> bool:
    """True iff the edges connect every node; a single node is connected."""
    if g.n_nodes == 1:
        return True
    adjacency = [[] for _ in range(g.n_nodes)]
    for i, j, _ in g.edges:
        adjacency[i].append(j)
        adjacency[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        node = stack.pop()
        for other in adjacency[node]:
            if other not in seen:
                seen.add(other)
                stack.append(other)
    return len(seen) == g.n_nodes


_ENUMERATION_LIMIT = 6


def _edge_slots(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _permuted_slot_maps(n: int) -> list[list[int]]:
    """For each node permutation, slot index -> image slot index."""
    slots = _edge_slots(n)
    slot_index = {pair: k for k, pair in enumerate(slots)}
    maps = []
    for perm in itertools.permutations(range(n)):
        maps.append([slot_index[tuple(sorted((perm[i], perm[j])))] for i, j in slots])
    return maps


def _mask_connected(n: int, mask: int, slots) -> bool:
    adjacency = [[] for _ in range(n)]
    for k, (i, j) in enumerate(slots):
        if mask >> k & 1:
            adjacency[i].append(j)
            adjacency[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        node = stack.pop()
        for other in adjacency[node]:
            if other not in seen:
                seen.add(other)
                stack.append(other)
    return len(seen) == n


def enumerate_connected_graphs(n: int) -> list[Graph]:
    """One canonical representative per isomorphism class of connected graphs on n nodes.

    Brute force over edge subsets with a permutation-orbit sweep; the
    representative is the minimum adjacency bitmask, so output order is
    deterministic. Unit weights.
    """
    if n < 1:
        raise ValueError(f"need at least one node, got {n}")
    if n > _ENUMERATION_LIMIT:
        raise ResourceLimitError(
            f"enumeration is brute force and capped at {_ENUMERATION_LIMIT} nodes, got {n}"
        )
    slots = _edge_slots(n)
    slot_maps = _permuted_slot_maps(n)
    seen = set()
    representatives = []
    for mask in range(1 << len(slots)):
        if mask in seen:
            continue
        # ascending scan: the first unseen member of an orbit is its minimum
        orbit = set()
        for smap in slot_maps:
            image = 0
            rest = mask
            while rest:
                k = (rest & -rest).bit_length() - 1
                image |= 1 << smap[k]
                rest &= rest - 1
            orbit.add(image)
        seen.update(orbit)
        if _mask_connected(n, mask, slots):
            representatives.append(mask)
    graphs = []
    for mask in representatives:
        edges = [slots[k] for k in range(len(slots)) if mask >> k & 1]
        graphs.append(Graph.from_edges(n, edges))
    return graphs


# ---------------------------------------------------------------------------
# file formats: edge-list text and a JSON mirror


def format_edge_list(g: Graph) -> str:
    lines = [f"n {g.n_nodes}"]
    for i, j, w in g.edges:
        if w == 1.0:
            lines.append(f"{i} {j}")
        else:
            lines.append(f"{i} {j} {w!r}")
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    """Parse the `n <count>` / `i j [w]` text format; `#` starts a comment."""
    n_nodes = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if n_nodes is None:
            if fields[0] != "n" or len(fields) != 2:
                raise GraphParseError(
                    f"expected header 'n <n_nodes>', got {line!r}", line=lineno
                )
            try:
                n_nodes = int(fields[1])
            except ValueError:
                raise GraphParseError(f"bad node count {fields[1]!r}", line=lineno) from None
            continue
        if len(fields) not in (2, 3):
            raise GraphParseError(f"expected 'i j [w]', got {line!r}", line=lineno)
        try:
            i, j = int(fields[0]), int(fields[1])
            w = float(fields[2]) if len(fields) == 3 else 1.0
        except ValueError:
            raise GraphParseError(f"bad edge fields {line!r}", line=lineno) from None
        edges.append((i, j, w, lineno))
    if n_nodes is None:
        raise GraphParseError("missing 'n <n_nodes>' header", line=1)
    try:
        return Graph.from_edges(n_nodes, [(i, j, w) for i, j, w, _ in edges])
    except ValueError as exc:
        raise GraphParseError(str(exc)) from exc


def graph_to_json(g: Graph) -> dict:
    return {"n_nodes": g.n_nodes, "edges": [[i, j, w] for i, j, w in g.edges]}


def graph_from_json(obj: dict) -> Graph:
    return Graph.from_edges(obj["n_nodes"], obj["edges"])


def save_graph(path, g: Graph) -> None:
    path = str(path)
    if path.endswith(".json"):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(graph_to_json(g), f, indent=2, sort_keys=True)
            f.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(format_edge_list(g))


def load_graph(path) -> Graph:
    path = str(path)
    with open(path, encoding="utf-8") as f:
        text = f.read()
    if path.endswith(".json"):
        try:
            return graph_from_json(json.loads(text))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise GraphParseError(f"bad JSON graph file: {exc}") from exc
    return parse_edge_list(text)
