"""Combinatorial action families A in {0,1}^d with constant weight m.

Every family exposes its vertex list (in lexicographic order of the sorted
index tuple of its ones, so ``(1, 0)`` precedes ``(0, 1)``), a linear
minimization oracle and a polyhedral description of its convex hull.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

DEFAULT_CAP = 10**6
# below this size the oracle falls back to brute force over the cached vertex
# matrix, which gives exact lexicographic tie-breaking for any kind
BRUTE_FORCE_LIMIT = 10**4


class ActionSetError(ValueError):
    pass


class EnumerationCapError(ActionSetError):
    pass


@dataclass(frozen=True)
class ConstraintSystem:
    """Conv(A) as ``{x : A_eq x = b_eq, A_ub x <= b_ub}``."""

    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray

    @property
    def dim(self) -> int:
        return self.A_eq.shape[1] if self.A_eq.size else self.A_ub.shape[1]

    def eq_residual(self, x):
        return self.A_eq @ x - self.b_eq

    def slack(self, x):
        """Inequality slack ``b_ub - A_ub x``; negative entries are violations."""
        return self.b_ub - self.A_ub @ x

    def max_violation(self, x) -> float:
        x = np.asarray(x, dtype=float)
        viol = 0.0
        if self.A_eq.size:
            viol = max(viol, float(np.max(np.abs(self.eq_residual(x)))))
        if self.A_ub.size:
            viol = max(viol, float(np.max(-self.slack(x), initial=0.0)))
        return viol

    def contains(self, x, tol: float = 1e-9) -> bool:
        return self.max_violation(x) <= tol


class ActionSet:
    """Base class. Subclasses fill in counting, enumeration and the oracle."""

    kind = "abstract"

    def __init__(self, d: int, m: int):
        if d < 1 or m < 1:
            raise ActionSetError(f"d and m must be positive, got d={d}, m={m}")
        if m > d:
            raise ActionSetError(f"m={m} exceeds d={d}")
        self.d = int(d)
        self.m = int(m)
        self._vertices = None
        self._index = None
        self._cs = None
        self._size = None

    # -- overridden per kind -------------------------------------------------
    def size(self) -> int:
        if self._size is None:
            self._size = self._count()
        return self._size

    def _count(self) -> int:
        raise NotImplementedError

    def _generate(self):
        """Yield vertices as sorted tuples of one-indices, in lexicographic order."""
        raise NotImplementedError

    def _oracle(self, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _constraints(self) -> ConstraintSystem:
        raise NotImplementedError(f"no polyhedral description for {self.kind}")

    def constraints(self) -> ConstraintSystem:
        if self._cs is None:
            self._cs = self._constraints()
        return self._cs

    def descriptor(self) -> str:
        raise NotImplementedError

    # -- shared machinery ----------------------------------------------------
    def __repr__(self):
        return f"<{type(self).__name__} {self.descriptor()}>"

    def enumerable(self, cap: int = DEFAULT_CAP) -> bool:
        return self.size() <= cap

    def vertices(self, cap: int = DEFAULT_CAP) -> np.ndarray:
        """Vertex matrix of shape (|A|, d), dtype int8, cached after first use."""
        if self._vertices is None:
            n = self.size()
            if n > cap:
                raise EnumerationCapError(f"{self.descriptor()} has {n} vertices > cap {cap}")
            V = np.zeros((n, self.d), dtype=np.int8)
            for row, ones in enumerate(self._generate()):
                V[row, list(ones)] = 1
            V.setflags(write=False)
            self._vertices = V
        return self._vertices

    def index_of(self, a) -> int:
        """Position of vertex ``a`` in the enumeration, or -1 if not enumerable."""
        if not self.enumerable():
            return -1
        if self._index is None:
            self._index = {row.tobytes(): i for i, row in enumerate(self.vertices())}
        return self._index[np.asarray(a, dtype=np.int8).tobytes()]

    def linear_minimize(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.d,):
            raise ActionSetError(f"weight vector has shape {w.shape}, expected ({self.d},)")
        if not np.all(np.isfinite(w)):
            raise ActionSetError("weight vector must be finite")
        return self._oracle(w)

    def _brute_force(self, w):
        V = self.vertices()
        return V[int(np.argmin(V @ w))].copy()

    def is_vertex(self, a) -> bool:
        a = np.asarray(a)
        if a.shape != (self.d,) or not np.all((a == 0) | (a == 1)) or a.sum() != self.m:
            return False
        return self.constraints().contains(a.astype(float), tol=0.0)


def _box(d, upper=True):
    """Rows for ``-x <= 0`` and optionally ``x <= 1``."""
    eye = np.eye(d)
    if upper:
        return np.vstack([-eye, eye]), np.concatenate([np.zeros(d), np.ones(d)])
    return -eye, np.zeros(d)


class MSet(ActionSet):
    """All binary vectors with exactly m ones."""

    kind = "mset"

    def _count(self):
        return math.comb(self.d, self.m)

    def _generate(self):
        return itertools.combinations(range(self.d), self.m)

    def _oracle(self, w):
        # stable sort keeps the smaller index on ties -> lexicographic minimum
        idx = np.argsort(w, kind="stable")[: self.m]
        a = np.zeros(self.d, dtype=np.int8)
        a[idx] = 1
        return a

    def _constraints(self):
        A_ub, b_ub = _box(self.d)
        return ConstraintSystem(np.ones((1, self.d)), np.array([float(self.m)]), A_ub, b_ub)

    def descriptor(self):
        return f"mset:d={self.d},m={self.m}"


class ParallelGames(ActionSet):
    """m parallel games with d/m actions each; coordinate (i, j) is ``i*(d/m) + j``."""

    kind = "pgames"

    def __init__(self, d, m):
        super().__init__(d, m)
        if d % m:
            raise ActionSetError(f"pgames needs d a multiple of m, got d={d}, m={m}")
        self.k = d // m

    def _count(self):
        return self.k**self.m

    def _generate(self):
        for cols in itertools.product(range(self.k), repeat=self.m):
            yield tuple(i * self.k + j for i, j in enumerate(cols))

    def _oracle(self, w):
        cols = np.argmin(w.reshape(self.m, self.k), axis=1)
        a = np.zeros(self.d, dtype=np.int8)
        a[np.arange(self.m) * self.k + cols] = 1
        return a

    def _constraints(self):
        A_eq = np.kron(np.eye(self.m), np.ones((1, self.k)))
        A_ub, b_ub = _box(self.d)
        return ConstraintSystem(A_eq, np.ones(self.m), A_ub, b_ub)

    def descriptor(self):
        return f"pgames:d={self.d},m={self.m}"


class Exp2LowerBound(ActionSet):
    """d/4 coordinates out of the first half, plus one of two intervals of length d/4.

    This is the family on which exponential weights is provably suboptimal.
    """

    kind = "exp2lb"

    def __init__(self, d):
        if d < 4 or d % 4:
            raise ActionSetError(f"exp2lb needs d a positive multiple of 4, got d={d}")
        super().__init__(d, d // 2)
        self.q = d // 4
        self.half = d // 2
        self.first_interval = np.arange(self.half, self.half + self.q)
        self.second_interval = np.arange(self.half + self.q, d)

    def _count(self):
        return math.comb(self.half, self.q) * 2

    def _generate(self):
        tails = (tuple(self.first_interval.tolist()), tuple(self.second_interval.tolist()))
        for head in itertools.combinations(range(self.half), self.q):
            for tail in tails:
                yield head + tail

    def _oracle(self, w):
        a = np.zeros(self.d, dtype=np.int8)
        a[np.argsort(w[: self.half], kind="stable")[: self.q]] = 1
        first = w[self.first_interval].sum()
        second = w[self.second_interval].sum()
        a[self.first_interval if first <= second else self.second_interval] = 1
        return a

    def _constraints(self):
        d, h = self.d, self.half
        rows, rhs = [], []
        top = np.zeros(d)
        top[:h] = 1.0
        rows.append(top)
        rhs.append(float(self.q))
        for block in (self.first_interval, self.second_interval):
            for j in block[1:]:
                r = np.zeros(d)
                r[block[0]], r[j] = -1.0, 1.0
                rows.append(r)
                rhs.append(0.0)
        r = np.zeros(d)
        r[self.first_interval[0]] = r[self.second_interval[0]] = 1.0
        rows.append(r)
        rhs.append(1.0)
        upper = np.eye(d)[:h]
        A_ub = np.vstack([-np.eye(d), upper])
        b_ub = np.concatenate([np.zeros(d), np.ones(h)])
        return ConstraintSystem(np.array(rows), np.array(rhs), A_ub, b_ub)

    def descriptor(self):
        return f"exp2lb:d={self.d}"


class Ranking(ActionSet):
    """Ranked lists of m distinct items out of M: size-m matchings in K_{m,M}.

    Coordinate (position i, item j) is ``i*M + j``.
    """

    kind = "ranking"

    def __init__(self, m, M):
        if M < m:
            raise ActionSetError(f"ranking needs M >= m, got m={m}, M={M}")
        super().__init__(m * M, m)
        self.M = M

    def _count(self):
        return math.perm(self.M, self.m)

    def _generate(self):
        for items in itertools.permutations(range(self.M), self.m):
            yield tuple(i * self.M + j for i, j in enumerate(items))

    def _oracle(self, w):
        if self.size() <= BRUTE_FORCE_LIMIT:
            return self._brute_force(w)
        rows, cols = linear_sum_assignment(w.reshape(self.m, self.M))
        a = np.zeros(self.d, dtype=np.int8)
        a[rows * self.M + cols] = 1
        return a

    def _constraints(self):
        m, M = self.m, self.M
        A_eq = np.kron(np.eye(m), np.ones((1, M)))
        col = np.kron(np.ones((1, m)), np.eye(M))
        A_ub = np.vstack([-np.eye(self.d), col])
        b_ub = np.concatenate([np.zeros(self.d), np.ones(M)])
        return ConstraintSystem(A_eq, np.ones(m), A_ub, b_ub)

    def descriptor(self):
        return f"ranking:m={self.m},M={self.M}"


class DagPaths(ActionSet):
    """Source-to-sink paths of a DAG, one coordinate per edge (in input order).

    Every edge must lie on some source-sink path and all such paths must have
    the same number of edges.
    """

    kind = "dag"

    def __init__(self, edges, source=None, sink=None, path=None):
        edges = [tuple(e) for e in edges]
        if not edges:
            raise ActionSetError("empty edge list")
        nodes = sorted({u for e in edges for u in e}, key=str)
        outs = {v: [] for v in nodes}
        ins = {v: [] for v in nodes}
        for k, (u, v) in enumerate(edges):
            outs[u].append(k)
            ins[v].append(k)
        if source is None:
            cands = [v for v in nodes if not ins[v]]
            if len(cands) != 1:
                raise ActionSetError(f"cannot infer a unique source, candidates {cands}")
            source = cands[0]
        if sink is None:
            cands = [v for v in nodes if not outs[v]]
            if len(cands) != 1:
                raise ActionSetError(f"cannot infer a unique sink, candidates {cands}")
            sink = cands[0]
        if source not in outs or sink not in outs:
            raise ActionSetError("source/sink not present in the edge list")

        order = _topological_order(nodes, edges, outs, ins)
        # depth from source must be path-independent (equal path lengths)
        depth = {source: 0}
        for v in order:
            if v not in depth:
                continue
            for k in outs[v]:
                w = edges[k][1]
                if w in depth and depth[w] != depth[v] + 1:
                    raise ActionSetError("source-sink paths have unequal lengths")
                depth[w] = depth[v] + 1
        reach_sink = {sink}
        for v in reversed(order):
            if any(edges[k][1] in reach_sink for k in outs[v]):
                reach_sink.add(v)
        for u, v in edges:
            if u not in depth or v not in reach_sink:
                raise ActionSetError(f"edge {(u, v)} lies on no source-sink path")
        if sink not in depth:
            raise ActionSetError("no source-sink path")

        super().__init__(len(edges), depth[sink])
        self.edges = edges
        self.nodes = nodes
        self.source, self.sink = source, sink
        self._outs, self._ins, self._order = outs, ins, order
        self.path = path

    def _count(self):
        count = {self.source: 1}
        for v in self._order:
            for k in self._outs[v]:
                w = self.edges[k][1]
                count[w] = count.get(w, 0) + count.get(v, 0)
        return count[self.sink]

    def _generate(self):
        paths = []

        def walk(v, acc):
            if v == self.sink:
                paths.append(tuple(sorted(acc)))
                return
            for k in self._outs[v]:
                walk(self.edges[k][1], acc + [k])

        walk(self.source, [])
        return iter(sorted(paths))

    def _oracle(self, w):
        if self.size() <= BRUTE_FORCE_LIMIT:
            return self._brute_force(w)
        best = {self.source: (0.0, None)}
        for v in self._order:
            if v not in best:
                continue
            for k in self._outs[v]:
                u = self.edges[k][1]
                c = best[v][0] + w[k]
                if u not in best or c < best[u][0]:
                    best[u] = (c, k)
        a = np.zeros(self.d, dtype=np.int8)
        v = self.sink
        while v != self.source:
            k = best[v][1]
            a[k] = 1
            v = self.edges[k][0]
        return a

    def _constraints(self):
        A_eq = np.zeros((len(self.nodes), self.d))
        b_eq = np.zeros(len(self.nodes))
        for r, v in enumerate(self.nodes):
            A_eq[r, self._outs[v]] += 1.0
            A_eq[r, self._ins[v]] -= 1.0
            b_eq[r] = 1.0 if v == self.source else -1.0 if v == self.sink else 0.0
        A_ub, b_ub = _box(self.d, upper=False)
        return ConstraintSystem(A_eq, b_eq, A_ub, b_ub)

    def descriptor(self):
        if self.path is not None:
            return f"dag:file={self.path}"
        return f"dag:edges={len(self.edges)}"


def _topological_order(nodes, edges, outs, ins):
    indeg = {v: len(ins[v]) for v in nodes}
    ready = [v for v in nodes if indeg[v] == 0]
    order = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for k in outs[v]:
            w = edges[k][1]
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    if len(order) != len(nodes):
        raise ActionSetError("graph has a cycle")
    return order


def read_edges(path) -> list[tuple[str, str]]:
    """Read a two-column ``u,v`` CSV; a header row naming the columns is skipped."""
    edges = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            row = [c.strip() for c in row if c.strip()]
            if not row or row[0].startswith("#"):
                continue
            if len(row) != 2:
                raise ActionSetError(f"bad edge row {row!r} in {path}")
            edges.append((row[0], row[1]))
    if edges and edges[0] in {("u", "v"), ("src", "dst"), ("source", "target")}:
        edges = edges[1:]
    return edges


def _parse_params(text: str) -> dict[str, str]:
    params = {}
    for item in filter(None, text.split(",")):
        if "=" not in item:
            raise ActionSetError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    return params


def _int(params, key):
    try:
        return int(params[key])
    except KeyError:
        raise ActionSetError(f"missing parameter {key!r}") from None
    except ValueError:
        raise ActionSetError(f"parameter {key!r} must be an integer") from None


def build_action_set(spec) -> ActionSet:
    """Build a set from a descriptor like ``mset:d=8,m=2`` or a dict with ``kind``."""
    if isinstance(spec, ActionSet):
        return spec
    if isinstance(spec, str):
        kind, _, rest = spec.partition(":")
        params = _parse_params(rest)
    else:
        params = {k: v for k, v in spec.items() if k != "kind"}
        kind = spec["kind"]
    kind = kind.strip().lower()
    if kind == "mset":
        return MSet(_int(params, "d"), _int(params, "m"))
    if kind == "pgames":
        return ParallelGames(_int(params, "d"), _int(params, "m"))
    if kind == "exp2lb":
        return Exp2LowerBound(_int(params, "d"))
    if kind == "ranking":
        return Ranking(_int(params, "m"), _int(params, "M"))
    if kind == "dag":
        if "edges" in params and not isinstance(params["edges"], str):
            edges = params["edges"]
            path = None
        else:
            path = params.get("file")
            if path is None:
                raise ActionSetError("dag descriptor needs file=<csv>")
            edges = read_edges(Path(path))
        return DagPaths(edges, params.get("source"), params.get("sink"), path=path)
    raise ActionSetError(f"unknown action set kind {kind!r}")


def enumerate_vertices(aset: ActionSet, cap: int = DEFAULT_CAP) -> np.ndarray:
    return aset.vertices(cap)


def linear_minimize(aset: ActionSet, w) -> np.ndarray:
    """argmin over A of ``a @ w``; ties go to the lexicographically smallest vertex."""
    return aset.linear_minimize(w)


def conv_constraints(aset: ActionSet) -> ConstraintSystem:
    return aset.constraints()
