"""Expression trees over the seven criteria, as nested tuples.

Leaves are ("x", i) for criterion column i (printed x1..x7) or ("c", value);
internal nodes are (op, left, right) with op in + - * /.
"""
from __future__ import annotations

import math

import numpy as np

OPS = ("+", "-", "*", "/")
N_VARS = 7
MAX_DEPTH = 8
PROTECT_EPS = 1e-9


def is_leaf(t: tuple) -> bool:
    return t[0] in ("x", "c")


def depth(t: tuple) -> int:
    if is_leaf(t):
        return 1
    return 1 + max(depth(t[1]), depth(t[2]))


def size(t: tuple) -> int:
    if is_leaf(t):
        return 1
    return 1 + size(t[1]) + size(t[2])


def validate(t: tuple, max_depth: int = MAX_DEPTH) -> None:
    def check(node):
        if not isinstance(node, tuple) or not node:
            raise ValueError(f"malformed node {node!r}")
        if node[0] == "x":
            if len(node) != 2 or not (isinstance(node[1], int) and 0 <= node[1] < N_VARS):
                raise ValueError(f"invalid variable leaf {node!r}")
        elif node[0] == "c":
            if len(node) != 2 or not math.isfinite(node[1]):
                raise ValueError(f"invalid constant leaf {node!r}")
        elif node[0] in OPS:
            if len(node) != 3:
                raise ValueError(f"operator {node[0]} needs two children")
            check(node[1])
            check(node[2])
        else:
            raise ValueError(f"unknown node {node[0]!r}")

    check(t)
    if depth(t) > max_depth:
        raise ValueError(f"tree depth {depth(t)} exceeds {max_depth}")


def evaluate(t: tuple, X: np.ndarray) -> np.ndarray:
    """Vectorized evaluation over rows of X; division by ~0 yields 1."""
    X = np.asarray(X, dtype=np.float64)
    with np.errstate(all="ignore"):
        return np.broadcast_to(_eval(t, X), X.shape[:-1]).astype(np.float64)


def _eval(t, X):
    op = t[0]
    if op == "x":
        return X[..., t[1]]
    if op == "c":
        return np.float64(t[1])
    a, b = _eval(t[1], X), _eval(t[2], X)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    small = np.abs(b) < PROTECT_EPS
    return np.where(small, 1.0, a / np.where(small, 1.0, b))


# -- text forms -----------------------------------------------------------------

def _leaf_text(t) -> str:
    return f"x{t[1] + 1}" if t[0] == "x" else repr(float(t[1]))


def to_prefix(t: tuple) -> str:
    if is_leaf(t):
        return _leaf_text(t)
    return f"{t[0]} {to_prefix(t[1])} {to_prefix(t[2])}"


def to_infix(t: tuple) -> str:
    if is_leaf(t):
        return _leaf_text(t)
    return f"({to_infix(t[1])} {t[0]} {to_infix(t[2])})"


def from_prefix(text: str) -> tuple:
    tokens = text.split()
    pos = 0

    def parse():
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError("truncated prefix expression")
        tok = tokens[pos]
        pos += 1
        if tok in OPS:
            left = parse()
            return (tok, left, parse())
        if tok.startswith("x"):
            try:
                i = int(tok[1:]) - 1
            except ValueError:
                raise ValueError(f"bad variable token {tok!r}") from None
            if not 0 <= i < N_VARS:
                raise ValueError(f"variable {tok} out of range")
            return ("x", i)
        try:
            return ("c", float(tok))
        except ValueError:
            raise ValueError(f"bad token {tok!r}") from None

    tree = parse()
    if pos != len(tokens):
        raise ValueError("trailing tokens in prefix expression")
    return tree


# -- random construction and variation ----------------------------------------

def random_leaf(rng: np.random.Generator, gene_range) -> tuple:
    if rng.random() < 0.5:
        return ("x", int(rng.integers(N_VARS)))
    return ("c", float(rng.uniform(*gene_range)))


def random_tree(rng: np.random.Generator, max_depth: int, method: str, gene_range,
                _root: bool = True) -> tuple:
    """Grow or full tree of depth at most `max_depth`; the root is always an operator."""
    if max_depth <= 1:
        return random_leaf(rng, gene_range)
    if method == "grow" and not _root and rng.random() < 0.3:
        return random_leaf(rng, gene_range)
    op = OPS[int(rng.integers(len(OPS)))]
    return (op, random_tree(rng, max_depth - 1, method, gene_range, False),
            random_tree(rng, max_depth - 1, method, gene_range, False))


def ramped_half_and_half(rng: np.random.Generator, n: int, gene_range,
                         min_depth: int = 2, max_depth: int = 6) -> list[tuple]:
    depths = range(min_depth, max_depth + 1)
    out = []
    for i in range(n):
        d = depths[i % len(depths)]
        method = "full" if (i // len(depths)) % 2 == 0 else "grow"
        out.append(random_tree(rng, d, method, gene_range))
    return out


def paths(t: tuple, prefix: tuple = ()) -> list[tuple]:
    """Child-index paths to every node, preorder."""
    out = [prefix]
    if not is_leaf(t):
        out += paths(t[1], prefix + (1,))
        out += paths(t[2], prefix + (2,))
    return out


def get(t: tuple, path: tuple) -> tuple:
    for i in path:
        t = t[i]
    return t


def replace(t: tuple, path: tuple, new: tuple) -> tuple:
    if not path:
        return new
    i = path[0]
    children = list(t)
    children[i] = replace(t[i], path[1:], new)
    return tuple(children)


def subtree_crossover(a: tuple, b: tuple, rng: np.random.Generator,
                      max_depth: int) -> tuple[tuple, tuple]:
    pa = paths(a)[int(rng.integers(size(a)))]
    pb = paths(b)[int(rng.integers(size(b)))]
    ca = replace(a, pa, get(b, pb))
    cb = replace(b, pb, get(a, pa))
    # Oversized offspring fall back to the parent.
    return (ca if depth(ca) <= max_depth else a,
            cb if depth(cb) <= max_depth else b)


def point_mutation(t: tuple, rng: np.random.Generator, gene_range) -> tuple:
    p = paths(t)[int(rng.integers(size(t)))]
    node = get(t, p)
    if node[0] in OPS:
        others = [o for o in OPS if o != node[0]]
        new = (others[int(rng.integers(len(others)))], node[1], node[2])
    elif node[0] == "x":
        new = ("x", int((node[1] + 1 + rng.integers(N_VARS - 1)) % N_VARS))
    else:
        new = ("c", float(rng.uniform(*gene_range)))
    return replace(t, p, new)


def subtree_mutation(t: tuple, rng: np.random.Generator, gene_range,
                     max_depth: int, new_depth: int = 4) -> tuple:
    p = paths(t)[int(rng.integers(size(t)))]
    budget = max(1, min(new_depth, max_depth - len(p)))
    return replace(t, p, random_tree(rng, budget, "grow", gene_range))
