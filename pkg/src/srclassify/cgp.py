"""Grid-program genomes: fixed two-dimensional layout, integer connection genes,
active-subgraph decoding, and single-gene point mutation.

Node addresses are laid out column-major after the feature inputs: features
occupy addresses ``0 .. n_features-1`` and the node in row r, column c has
address ``n_features + c*n_rows + r``. A node in column c may read from any
feature and from nodes in columns ``[max(0, c - levels_back), c)``, which makes
every genome acyclic by construction. Unary functions ignore their second
input gene; a node reachable only through ignored genes is inactive.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass
from functools import cached_property

import numpy as np

from .functions import FUNCTION_NAMES, FUNCTIONS

GENES_PER_NODE = 3  # function gene + two input genes


@dataclass(frozen=True)
class CgpConfig:
    n_rows: int
    n_columns: int
    n_features: int
    levels_back: int | None = None
    function_set: tuple[str, ...] = FUNCTION_NAMES

    def __post_init__(self):
        if self.n_rows < 1 or self.n_columns < 1 or self.n_features < 1:
            raise ValueError("n_rows, n_columns, and n_features must all be >= 1")
        if self.levels_back is None:
            object.__setattr__(self, "levels_back", self.n_columns)
        if not (1 <= self.levels_back <= self.n_columns):
            raise ValueError("require 1 <= levels_back <= n_columns")
        object.__setattr__(self, "function_set", tuple(self.function_set))
        unknown = [f for f in self.function_set if f not in FUNCTIONS]
        if unknown:
            raise ValueError(f"unknown functions in function_set: {unknown}")

    @property
    def n_nodes(self) -> int:
        return self.n_rows * self.n_columns

    def column_of(self, node_index: int) -> int:
        return node_index // self.n_rows

    def input_choices(self, column: int) -> int:
        """Number of valid addresses an input gene in this column can take."""
        lo = max(0, column - self.levels_back)
        return self.n_features + (column - lo) * self.n_rows

    def input_address(self, column: int, choice: int) -> int:
        """Map a choice ordinal onto a concrete address for this column."""
        if choice < self.n_features:
            return choice
        lo = max(0, column - self.levels_back)
        return self.n_features + lo * self.n_rows + (choice - self.n_features)

    def input_choice_of(self, column: int, address: int) -> int:
        """Inverse of input_address."""
        if address < self.n_features:
            return address
        lo = max(0, column - self.levels_back)
        return self.n_features + (address - self.n_features - lo * self.n_rows)

    @cached_property
    def arities(self) -> tuple[int, ...]:
        return tuple(FUNCTIONS[name].arity for name in self.function_set)

    @cached_property
    def gene_sizes(self) -> tuple[int, ...]:
        """Number of valid values for each flat-gene position."""
        sizes = []
        for k in range(self.n_nodes):
            col = self.column_of(k)
            sizes.append(len(self.function_set))
            sizes.append(self.input_choices(col))
            sizes.append(self.input_choices(col))
        sizes.append(self.n_features + self.n_nodes)
        return tuple(sizes)

    @cached_property
    def mutable_positions(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.gene_sizes) if s > 1)


@dataclass(frozen=True)
class CgpGenome:
    """One grid program: per-node gene triples plus a single output gene."""

    config: CgpConfig
    nodes: tuple  # of (function_gene, input_gene_1, input_gene_2) address triples
    output_gene: int
    check: InitVar[bool] = True

    def __post_init__(self, check: bool):
        if check:
            self.validate()

    def validate(self) -> None:
        """Raise ValueError unless every gene lies in its valid range."""
        cfg = self.config
        if len(self.nodes) != cfg.n_nodes:
            raise ValueError(f"expected {cfg.n_nodes} nodes, got {len(self.nodes)}")
        for k, (f, a, b) in enumerate(self.nodes):
            if not (0 <= f < len(cfg.function_set)):
                raise ValueError(f"node {k}: function gene {f} out of range")
            col = cfg.column_of(k)
            for gene in (a, b):
                if not _address_valid(cfg, col, gene):
                    raise ValueError(f"node {k}: input address {gene} invalid for column {col}")
        if not (0 <= self.output_gene < cfg.n_features + cfg.n_nodes):
            raise ValueError(f"output gene {self.output_gene} out of range")

    def to_flat(self) -> list[int]:
        """Flat integer encoding: node triples in address order, then the output gene."""
        flat: list[int] = []
        for f, a, b in self.nodes:
            flat.extend((f, a, b))
        flat.append(self.output_gene)
        return flat

    @classmethod
    def from_flat(cls, config: CgpConfig, flat) -> "CgpGenome":
        flat = [int(v) for v in flat]
        expected = GENES_PER_NODE * config.n_nodes + 1
        if len(flat) != expected:
            raise ValueError(f"expected {expected} genes, got {len(flat)}")
        nodes = tuple(
            (flat[3 * k], flat[3 * k + 1], flat[3 * k + 2]) for k in range(config.n_nodes)
        )
        return cls(config, nodes, flat[-1])


def _address_valid(cfg: CgpConfig, column: int, address: int) -> bool:
    if 0 <= address < cfg.n_features:
        return True
    node = address - cfg.n_features
    if not (0 <= node < cfg.n_nodes):
        return False
    lo = max(0, column - cfg.levels_back)
    return lo <= cfg.column_of(node) < column


def random_genome(config: CgpConfig, rng: np.random.Generator) -> CgpGenome:
    """Draw every gene uniformly from its valid range."""
    nodes = []
    for k in range(config.n_nodes):
        col = config.column_of(k)
        f = int(rng.integers(len(config.function_set)))
        a = config.input_address(col, int(rng.integers(config.input_choices(col))))
        b = config.input_address(col, int(rng.integers(config.input_choices(col))))
        nodes.append((f, a, b))
    output = int(rng.integers(config.n_features + config.n_nodes))
    return CgpGenome(config, tuple(nodes), output, check=False)


def decode_active(genome: CgpGenome) -> list[int]:
    """Addresses of the nodes reachable from the output gene, in evaluable order.

    Input genes always point at strictly lower addresses, so ascending address
    order is a topological order.
    """
    cfg = genome.config
    arities = cfg.arities
    nf = cfg.n_features
    active: set[int] = set()
    stack = [genome.output_gene]
    while stack:
        addr = stack.pop()
        if addr < nf or addr in active:
            continue
        active.add(addr)
        f, a, b = genome.nodes[addr - nf]
        stack.append(a)
        if arities[f] == 2:
            stack.append(b)
    return sorted(active)


def eval_genome(genome: CgpGenome, X) -> np.ndarray:
    """Evaluate the active subgraph on every row of a sample matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d sample matrix, got ndim={X.ndim}")
    cfg = genome.config
    nf = cfg.n_features
    if X.shape[1] < nf:
        raise IndexError(f"genome expects {nf} features, sample matrix has {X.shape[1]}")

    values: dict[int, np.ndarray] = {}
    functions = [FUNCTIONS[name] for name in cfg.function_set]

    for addr in decode_active(genome):
        f, a, b = genome.nodes[addr - nf]
        spec = functions[f]
        va = X[:, a] if a < nf else values[a]
        if spec.arity == 1:
            values[addr] = spec.fn(va)
        else:
            vb = X[:, b] if b < nf else values[b]
            values[addr] = spec.fn(va, vb)

    out = genome.output_gene
    result = X[:, out] if out < nf else values[out]
    return np.array(result, dtype=np.float64, copy=True)


def point_mutate_traced(genome: CgpGenome, rng: np.random.Generator) -> tuple[CgpGenome, int]:
    """point_mutate that also reports the flat position of the mutated gene
    (-1 when every gene is pinned and the parent is returned unchanged)."""
    cfg = genome.config
    positions = cfg.mutable_positions
    if not positions:
        return genome, -1
    pos = positions[int(rng.integers(len(positions)))]
    sizes = cfg.gene_sizes
    n_genes = GENES_PER_NODE * cfg.n_nodes + 1

    if pos == n_genes - 1:
        current = genome.output_gene
    else:
        node_idx, within = divmod(pos, GENES_PER_NODE)
        triple = genome.nodes[node_idx]
        if within == 0:
            current = triple[0]
        else:
            current = cfg.input_choice_of(cfg.column_of(node_idx), triple[within])

    # Uniform draw over the range minus the current value: shift draws at or
    # above the current ordinal up by one.
    draw = int(rng.integers(sizes[pos] - 1))
    new = draw + 1 if draw >= current else draw

    if pos == n_genes - 1:
        return CgpGenome(cfg, genome.nodes, new, check=False), pos
    if within != 0:
        new = cfg.input_address(cfg.column_of(node_idx), new)
    mutated = list(triple)
    mutated[within] = new
    nodes = genome.nodes[:node_idx] + (tuple(mutated),) + genome.nodes[node_idx + 1 :]
    return CgpGenome(cfg, nodes, genome.output_gene, check=False), pos


def point_mutate(genome: CgpGenome, rng: np.random.Generator) -> CgpGenome:
    """Return a copy differing from the parent in exactly one gene.

    The gene position is drawn uniformly among genes with more than one valid
    value; its new value is drawn uniformly among the valid values other than
    the current one. Genomes in which every gene is pinned (all ranges of
    size 1) are returned unchanged.
    """
    return point_mutate_traced(genome, rng)[0]


def mutation_is_neutral(parent: CgpGenome, pos: int, parent_active: set[int]) -> bool:
    """True when mutating flat gene `pos` provably cannot change the output:
    the gene belongs to an inactive node, or is the ignored second input of an
    active unary node."""
    cfg = parent.config
    if pos < 0 or pos == GENES_PER_NODE * cfg.n_nodes:
        return False
    node_idx, within = divmod(pos, GENES_PER_NODE)
    if cfg.n_features + node_idx not in parent_active:
        return True
    if within == 2:
        f = parent.nodes[node_idx][0]
        return cfg.arities[f] == 1
    return False
