"""Expression trees over feature terminals: construction, evaluation, variation.

Trees are immutable values: nodes are never modified after construction, and
variation operators return new trees that share untouched subtrees with their
parents, so replacing a node rebuilds only the path from the root down to the
replacement point. Every node carries its subtree size and depth, making node
addressing O(depth). Depth is counted in edges: a lone terminal has depth 0
and a function applied to terminals has depth 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .functions import FUNCTION_SET, FUNCTIONS

# Hard depth cap applied by every variation operator.
DEFAULT_MAX_DEPTH = 6

INIT_METHODS = ("full", "grow", "ramped_half_and_half")

# Probability that grow-style construction places a terminal once the
# minimum depth has been reached.
_GROW_TERMINAL_P = 0.5


class Feature:
    """Terminal node referencing one input feature."""

    __slots__ = ("index",)

    size = 1
    depth = 0

    def __init__(self, index: int):
        self.index = index

    def __eq__(self, other):
        return type(other) is Feature and other.index == self.index

    def __hash__(self):
        return hash(("x", self.index))

    def __repr__(self):
        return f"Feature({self.index})"


class Call:
    """Function node applying a named operator to child subtrees."""

    __slots__ = ("symbol", "args", "size", "depth")

    def __init__(self, symbol: str, args: tuple):
        self.symbol = symbol
        self.args = args
        size = 1
        depth = 0
        for a in args:
            size += a.size
            if a.depth > depth:
                depth = a.depth
        self.size = size
        self.depth = depth + 1

    def __eq__(self, other):
        return type(other) is Call and other.symbol == self.symbol and other.args == self.args

    def __hash__(self):
        return hash((self.symbol, self.args))

    def __repr__(self):
        return f"Call({self.symbol!r}, {self.args!r})"


TreeNode = Feature | Call


@dataclass(frozen=True)
class ExprTree:
    """An immutable expression tree; the individual evolved by the tree engines."""

    root: TreeNode

    @property
    def size(self) -> int:
        return self.root.size

    @property
    def depth(self) -> int:
        return self.root.depth

    def nodes(self) -> Iterator[TreeNode]:
        """Yield all nodes in preorder."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if type(node) is Call:
                stack.extend(reversed(node.args))

    def node_at(self, index: int) -> TreeNode:
        return node_at(self.root, index)

    def render(self) -> str:
        return render_node(self.root)

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class TreeInitConfig:
    """Random-tree construction settings."""

    min_depth: int = 2
    max_depth: int = DEFAULT_MAX_DEPTH
    method: str = "ramped_half_and_half"

    def __post_init__(self):
        if not (1 <= self.min_depth <= self.max_depth):
            raise ValueError(
                f"require 1 <= min_depth <= max_depth, got [{self.min_depth}, {self.max_depth}]"
            )
        if self.method not in INIT_METHODS:
            raise ValueError(f"unknown init method {self.method!r}")


def _uniform_index(n: int, rng: np.random.Generator) -> int:
    # Cheaper than rng.integers for scalar draws; the min() guards the
    # half-ulp case where u*n could round up to n.
    return min(int(rng.random() * n), n - 1)


def node_at(node: TreeNode, index: int) -> TreeNode:
    """Return the node at the given preorder index, descending by subtree size."""
    return _node_and_depth_at(node, index)[0]


def _node_and_depth_at(node: TreeNode, index: int) -> tuple[TreeNode, int]:
    """The node at a preorder index plus how deep below the root it sits."""
    if not (0 <= index < node.size):
        raise IndexError(f"node index {index} out of range for tree of size {node.size}")
    level = 0
    while index:
        index -= 1
        level += 1
        for child in node.args:
            if index < child.size:
                node = child
                break
            index -= child.size
    return node, level


def _replace_at(node: TreeNode, index: int, donor: TreeNode) -> TreeNode:
    """Rebuild the path to preorder index `index`, swapping that node for `donor`;
    all subtrees off the path are shared with the original."""
    if index == 0:
        return donor
    index -= 1
    args = node.args
    for k, child in enumerate(args):
        if index < child.size:
            new_args = list(args)
            new_args[k] = _replace_at(child, index, donor)
            return Call(node.symbol, tuple(new_args))
        index -= child.size
    raise IndexError("replacement index out of range")


def eval_tree(tree: ExprTree, X) -> np.ndarray:
    """Evaluate a tree on every row of a sample matrix.

    Returns one value per row; the guarded function set keeps outputs finite
    for finite inputs. Raises IndexError when a terminal references a feature
    the matrix does not have.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d sample matrix, got ndim={X.ndim}")
    out = _eval_node(tree.root, X, None)
    if out.ndim == 0:
        out = np.full(X.shape[0], float(out))
    return out


def eval_tree_cached(tree: ExprTree, X: np.ndarray, cache: dict) -> np.ndarray:
    """eval_tree with an id-keyed subtree-output cache.

    Because variation shares subtrees between parents and offspring, caching
    by node identity makes evaluating an offspring cost only its newly built
    path. The cache maps id(node) -> (node, output); holding the node keeps
    its id valid. Entries are only correct for a fixed X: callers own one
    cache per (population, sample matrix) and should clear it when it grows
    past their memory budget.
    """
    return _eval_node(tree.root, X, cache)


def _eval_node(node: TreeNode, X: np.ndarray, cache: dict | None) -> np.ndarray:
    if cache is not None:
        hit = cache.get(id(node))
        if hit is not None:
            return hit[1]
    if type(node) is Feature:
        if node.index >= X.shape[1]:
            raise IndexError(
                f"terminal feature index {node.index} out of range for {X.shape[1]} features"
            )
        out = X[:, node.index]
    else:
        spec = FUNCTIONS[node.symbol]
        if spec.arity == 1:
            out = spec.fn(_eval_node(node.args[0], X, cache))
        else:
            out = spec.fn(
                _eval_node(node.args[0], X, cache), _eval_node(node.args[1], X, cache)
            )
    if cache is not None:
        cache[id(node)] = (node, out)
    return out


def random_tree(config: TreeInitConfig, n_features: int, rng: np.random.Generator) -> ExprTree:
    """Build a random tree within the configured depth bounds.

    The depth target is drawn uniformly from [min_depth, max_depth]. With the
    ramped method, full and grow construction each apply with probability 1/2.
    """
    if n_features < 1:
        raise ValueError("n_features must be >= 1")
    target = config.min_depth + _uniform_index(config.max_depth - config.min_depth + 1, rng)
    if config.method == "ramped_half_and_half":
        method = "full" if rng.random() < 0.5 else "grow"
    else:
        method = config.method
    grow = method == "grow"
    n_funcs = len(FUNCTION_SET)

    def build(depth: int) -> TreeNode:
        if depth >= target:
            return Feature(_uniform_index(n_features, rng))
        if grow and depth >= config.min_depth and rng.random() < _GROW_TERMINAL_P:
            return Feature(_uniform_index(n_features, rng))
        spec = FUNCTION_SET[_uniform_index(n_funcs, rng)]
        return Call(spec.name, tuple(build(depth + 1) for _ in range(spec.arity)))

    return ExprTree(build(0))


def subtree_crossover(
    p1: ExprTree,
    p2: ExprTree,
    rng: np.random.Generator,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> ExprTree:
    """Swap a uniformly chosen node of p1 for a uniformly chosen subtree of p2.

    If the offspring would exceed max_depth, p1 is returned unchanged. When p1
    already satisfies the cap, the offspring's depth is exactly
    max(paths avoiding the splice) <= p1.depth and splice_depth + donor.depth
    along the splice, so the fallback can be decided before rebuilding.
    """
    i = _uniform_index(p1.size, rng)
    j = _uniform_index(p2.size, rng)
    donor, _ = _node_and_depth_at(p2.root, j)
    if p1.root.depth <= max_depth:
        _, splice_depth = _node_and_depth_at(p1.root, i)
        if splice_depth + donor.depth > max_depth:
            return p1
        return ExprTree(_replace_at(p1.root, i, donor))
    new_root = _replace_at(p1.root, i, donor)
    if new_root.depth > max_depth:
        return p1
    return ExprTree(new_root)


def subtree_mutation(
    t: ExprTree,
    config: TreeInitConfig,
    n_features: int,
    rng: np.random.Generator,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> ExprTree:
    """Replace a uniformly chosen node with a freshly generated random subtree.

    Falls back to the unchanged parent when the result would exceed max_depth.
    """
    i = _uniform_index(t.size, rng)
    donor = random_tree(config, n_features, rng).root
    if t.root.depth <= max_depth:
        _, splice_depth = _node_and_depth_at(t.root, i)
        if splice_depth + donor.depth > max_depth:
            return t
        return ExprTree(_replace_at(t.root, i, donor))
    new_root = _replace_at(t.root, i, donor)
    if new_root.depth > max_depth:
        return t
    return ExprTree(new_root)


def render_node(node: TreeNode) -> str:
    """Canonical prefix rendering, e.g. ``add(x0, mul(x1, x1))``."""
    if type(node) is Feature:
        return f"x{node.index}"
    args = ", ".join(render_node(a) for a in node.args)
    return f"{node.symbol}({args})"


def parse_tree(text: str) -> ExprTree:
    """Parse the prefix rendering back into a tree. Inverse of ExprTree.render."""
    pos = 0
    s = text.strip()

    def error(msg: str):
        return ValueError(f"cannot parse tree at position {pos}: {msg}")

    def parse_node() -> TreeNode:
        nonlocal pos
        start = pos
        while pos < len(s) and (s[pos].isalnum() or s[pos] == "_"):
            pos += 1
        name = s[start:pos]
        if not name:
            raise error("expected a symbol or terminal")
        if pos < len(s) and s[pos] == "(":
            if name not in FUNCTIONS:
                raise error(f"unknown function {name!r}")
            spec = FUNCTIONS[name]
            pos += 1
            args = []
            for k in range(spec.arity):
                if k:
                    if pos >= len(s) or s[pos] != ",":
                        raise error("expected ','")
                    pos += 1
                    while pos < len(s) and s[pos] == " ":
                        pos += 1
                args.append(parse_node())
            if pos >= len(s) or s[pos] != ")":
                raise error("expected ')'")
            pos += 1
            return Call(name, tuple(args))
        if name.startswith("x") and name[1:].isdigit():
            return Feature(int(name[1:]))
        raise error(f"invalid terminal {name!r}")

    root = parse_node()
    if pos != len(s):
        raise ValueError(f"trailing input after position {pos}: {s[pos:]!r}")
    return ExprTree(root)
