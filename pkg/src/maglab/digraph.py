"""Finite digraphs and the graph algorithms the enrichment constructions rely on.

Vertices are opaque hashable identifiers (strings in every serialized form);
their position in ``Digraph.vertices`` is the canonical index used for all
orderings and matrix layouts.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable

import numpy as np

Vertex = Hashable
Arc = tuple[Vertex, Vertex]


class DigraphError(ValueError):
    pass


class PathNotFoundError(DigraphError):
    pass


@dataclass(frozen=True)
class Digraph:
    vertices: tuple
    arcs: frozenset

    def __init__(self, vertices: Iterable[Vertex], arcs: Iterable[Arc]):
        vs = tuple(vertices)
        if len(set(vs)) != len(vs):
            raise DigraphError("duplicate vertex identifiers")
        arc_list = [tuple(a) for a in arcs]
        arcset = frozenset(arc_list)
        if len(arcset) != len(arc_list):
            raise DigraphError("duplicate arcs")
        known = set(vs)
        for j, k in arcset:
            if j not in known or k not in known:
                raise DigraphError(f"arc {(j, k)!r} has an endpoint outside the vertex list")
        object.__setattr__(self, "vertices", vs)
        object.__setattr__(self, "arcs", arcset)

    def __len__(self) -> int:
        return len(self.vertices)

    @cached_property
    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}

    def arc_key(self, arc: Arc) -> tuple[int, int]:
        return self.index[arc[0]], self.index[arc[1]]

    def sorted_arcs(self) -> list[Arc]:
        return sorted(self.arcs, key=self.arc_key)

    @cached_property
    def successors(self) -> dict:
        out = {v: [] for v in self.vertices}
        for j, k in self.sorted_arcs():
            out[j].append(k)
        return out

    @cached_property
    def predecessors(self) -> dict:
        out = {v: [] for v in self.vertices}
        for j, k in self.sorted_arcs():
            out[k].append(j)
        return out

    def neighbors(self, v: Vertex) -> list:
        """Neighbors in the underlying undirected graph U(D), loops dropped."""
        seen = dict.fromkeys(self.successors[v] + self.predecessors[v])
        seen.pop(v, None)
        return sorted(seen, key=self.index.__getitem__)

    def out_degree(self, v: Vertex) -> int:
        return sum(1 for k in self.successors[v] if k != v)

    def in_degree(self, v: Vertex) -> int:
        return sum(1 for j in self.predecessors[v] if j != v)

    def adjacency(self) -> np.ndarray:
        n = len(self.vertices)
        A = np.zeros((n, n), dtype=bool)
        for j, k in self.arcs:
            A[self.index[j], self.index[k]] = True
        return A

    def subgraph(self, keep: Iterable[Vertex]) -> "Digraph":
        keep = set(keep)
        vs = [v for v in self.vertices if v in keep]
        return Digraph(vs, [(j, k) for j, k in self.arcs if j in keep and k in keep])

    def weak_components(self) -> list[tuple]:
        """Weakly connected components, each listed in vertex order, ordered by first vertex."""
        seen: set = set()
        comps = []
        for v in self.vertices:
            if v in seen:
                continue
            comp = [v]
            seen.add(v)
            queue = deque([v])
            while queue:
                u = queue.popleft()
                for w in self.neighbors(u):
                    if w not in seen:
                        seen.add(w)
                        comp.append(w)
                        queue.append(w)
            comps.append(tuple(sorted(comp, key=self.index.__getitem__)))
        return comps

    def is_weak(self) -> bool:
        return len(self.weak_components()) <= 1

    def reachable_from(self, v: Vertex) -> list:
        """Vertices reachable from ``v`` by a directed path of length >= 1."""
        seen: dict = {}
        queue = deque(self.successors[v])
        while queue:
            u = queue.popleft()
            if u in seen:
                continue
            seen[u] = None
            queue.extend(self.successors[u])
        return sorted(seen, key=self.index.__getitem__)

    def shortest_path(self, src: Vertex, dst: Vertex) -> list:
        """Directed BFS path from src to a different vertex dst, as a vertex list."""
        parent = {src: None}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            if u == dst:
                path = [u]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return path[::-1]
            for w in self.successors[u]:
                if w not in parent:
                    parent[w] = u
                    queue.append(w)
        raise PathNotFoundError(f"no directed path {src!r} -> {dst!r}")

    def to_dict(self) -> dict:
        return {
            "vertices": [str(v) for v in self.vertices],
            "arcs": [[str(j), str(k)] for j, k in self.sorted_arcs()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Digraph":
        try:
            return cls(data["vertices"], [tuple(a) for a in data["arcs"]])
        except (KeyError, TypeError) as exc:
            raise DigraphError(f"malformed digraph document: {exc}") from exc

    def to_dot(self, name: str = "D", labels: dict | None = None) -> str:
        lines = [f"digraph {name} {{"]
        for v in self.vertices:
            extra = f' [label="{labels[v]}"]' if labels and v in labels else ""
            lines.append(f'  "{v}"{extra};')
        for j, k in self.sorted_arcs():
            lines.append(f'  "{j}" -> "{k}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ClosureCategory:
    """The category determined by a digraph: loops everywhere plus the transitive closure."""

    base: Digraph
    closure_arcs: frozenset
    nonloop_arcs: tuple = field(repr=False)

    @property
    def vertices(self) -> tuple:
        return self.base.vertices

    def __contains__(self, arc) -> bool:
        return tuple(arc) in self.closure_arcs

    @cached_property
    def reach(self) -> dict:
        out = {v: set() for v in self.base.vertices}
        for j, k in self.nonloop_arcs:
            out[j].add(k)
        return out

    def support(self) -> np.ndarray:
        n = len(self.base.vertices)
        S = np.eye(n, dtype=bool)
        idx = self.base.index
        for j, k in self.nonloop_arcs:
            S[idx[j], idx[k]] = True
        return S


def transitive_closure(D: Digraph) -> ClosureCategory:
    arcs = {(v, v) for v in D.vertices}
    for v in D.vertices:
        for w in D.reachable_from(v):
            arcs.add((v, w))
    nonloop = tuple(sorted(((j, k) for j, k in arcs if j != k), key=D.arc_key))
    return ClosureCategory(D, frozenset(arcs), nonloop)


def nondegenerate_paths(C: ClosureCategory) -> list[tuple]:
    """All (j, k, l) with (j,k), (k,l) non-loop closure arcs and j != l, in lexicographic order."""
    D = C.base
    idx = D.index
    succ: dict = {v: [] for v in D.vertices}
    for j, k in C.nonloop_arcs:
        succ[j].append(k)
    out = []
    for j in D.vertices:
        for k in succ[j]:
            for l in succ[k]:
                if l != j:
                    out.append((j, k, l))
    out.sort(key=lambda t: (idx[t[0]], idx[t[1]], idx[t[2]]))
    return out


def return_paths(C: ClosureCategory) -> list[tuple]:
    """Composable pairs (j, k, j) with both (j,k) and (k,j) non-loop closure arcs."""
    out = []
    for j, k in C.nonloop_arcs:
        if (k, j) in C.closure_arcs:
            out.append((j, k, j))
    return out


def topological_order(D: Digraph) -> list:
    indeg = {v: D.in_degree(v) for v in D.vertices}
    ready = [v for v in D.vertices if indeg[v] == 0]
    order = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for w in D.successors[v]:
            if w == v:
                continue
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    if len(order) != len(D.vertices):
        raise ValueError("digraph has a cycle")
    return order


@dataclass(frozen=True)
class StrongComponents:
    components: tuple
    is_dag: bool
    reach_arcs: frozenset

    def component_of(self, v) -> tuple:
        for comp in self.components:
            if v in comp:
                return comp
        raise KeyError(v)


def _tarjan(D: Digraph) -> list[list]:
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    comps: list[list] = []
    counter = 0
    for root in D.vertices:
        if root in index:
            continue
        # iterative DFS: (vertex, iterator over successors)
        work = [(root, iter(D.successors[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(D.successors[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


def strong_components(D: Digraph) -> StrongComponents:
    """Strong components, acyclicity flag, and the arcs that can reach a nontrivial component.

    A component is nontrivial if it has more than one vertex or carries a
    loop. An arc (j, k) is in the reach set when k lies in, or can reach, a
    nontrivial component.
    """
    idx = D.index
    comps = [tuple(sorted(c, key=idx.__getitem__)) for c in _tarjan(D)]
    comps.sort(key=lambda c: idx[c[0]])
    nontrivial = set()
    for comp in comps:
        if len(comp) > 1 or (comp[0], comp[0]) in D.arcs:
            nontrivial.update(comp)
    # reverse BFS from the nontrivial components
    hits = set(nontrivial)
    queue = deque(nontrivial)
    while queue:
        u = queue.popleft()
        for p in D.predecessors[u]:
            if p not in hits:
                hits.add(p)
                queue.append(p)
    reach = frozenset((j, k) for j, k in D.arcs if k in hits)
    return StrongComponents(tuple(comps), not nontrivial, reach)


@dataclass(frozen=True)
class SpanningStructure:
    """A spanning forest of U(D) with a stored orientation for every tree edge.

    ``tree_edges`` holds each edge once as the ordered pair it is stored
    under: the orientation of the arc of D it comes from, or the
    lexicographically smaller pair when D has both arcs.
    """

    base: Digraph
    tree_edges: tuple

    @cached_property
    def _stored(self) -> dict:
        return {frozenset(e): e for e in self.tree_edges}

    @cached_property
    def adjacency(self) -> dict:
        adj = {v: [] for v in self.base.vertices}
        for a, b in self.tree_edges:
            adj[a].append(b)
            adj[b].append(a)
        return adj

    def stored(self, a, b) -> tuple:
        """The stored orientation of tree edge {a, b}."""
        try:
            return self._stored[frozenset((a, b))]
        except KeyError:
            raise DigraphError(f"{(a, b)!r} is not a tree edge") from None

    def epsilon(self, a, b) -> int:
        """Orientation sign of the ordered pair (a, b) read off the arcs of D."""
        arcs = self.base.arcs
        if (a, b) in arcs:
            return 1
        if (b, a) in arcs:
            return -1
        return 0

    def sign(self, a, b) -> int:
        """Traversal sign of tree edge (a, b): +1 along the stored orientation, -1 against it."""
        return 1 if self.stored(a, b) == (a, b) else -1

    @cached_property
    def _rooted(self) -> tuple[dict, dict, dict]:
        parent: dict = {}
        depth: dict = {}
        root: dict = {}
        for comp in self.base.weak_components():
            r = comp[0]
            parent[r] = None
            depth[r] = 0
            root[r] = r
            queue = deque([r])
            while queue:
                u = queue.popleft()
                for w in self.adjacency[u]:
                    if w not in depth:
                        parent[w] = u
                        depth[w] = depth[u] + 1
                        root[w] = r
                        queue.append(w)
        return parent, depth, root

    def root_of(self, v):
        return self._rooted[2][v]

    def bfs_order(self) -> list:
        depth = self._rooted[1]
        idx = self.base.index
        return sorted(self.base.vertices, key=lambda v: (idx[self.root_of(v)], depth[v], idx[v]))

    def parent(self, v):
        return self._rooted[0][v]


def tree_path(S: SpanningStructure, j, k) -> list[tuple[tuple, int]]:
    """The unique simple path from j to k in the forest, as ((a, b), sign) steps."""
    parent, depth, root = S._rooted
    if root[j] != root[k]:
        raise PathNotFoundError(f"{j!r} and {k!r} lie in different weak components")
    up, down = [j], [k]
    a, b = j, k
    while depth[a] > depth[b]:
        a = parent[a]
        up.append(a)
    while depth[b] > depth[a]:
        b = parent[b]
        down.append(b)
    while a != b:
        a = parent[a]
        b = parent[b]
        up.append(a)
        down.append(b)
    walk = up + down[-2::-1]
    return [((u, v), S.sign(u, v)) for u, v in zip(walk, walk[1:])]


def _store_orientation(D: Digraph, a, b) -> tuple:
    fwd, bwd = (a, b) in D.arcs, (b, a) in D.arcs
    if fwd and not bwd:
        return (a, b)
    if bwd and not fwd:
        return (b, a)
    return (a, b) if D.arc_key((a, b)) <= D.arc_key((b, a)) else (b, a)


def undirected_edges(D: Digraph) -> list[tuple]:
    """Edges of U(D) as index-ordered pairs (loops dropped), lexicographically sorted."""
    idx = D.index
    edges = {}
    for j, k in D.arcs:
        if j == k:
            continue
        key = (j, k) if idx[j] < idx[k] else (k, j)
        edges[key] = None
    return sorted(edges, key=D.arc_key)


def spanning_structure(D: Digraph, seed: int) -> SpanningStructure:
    """Minimum spanning forest of U(D) under i.i.d. uniform(0,1) temporary edge weights.

    Weights are drawn from ``numpy.random.default_rng(seed)`` in lexicographic
    edge order; ties fall back to that same order.
    """
    edges = undirected_edges(D)
    rng = np.random.default_rng(seed)
    weights = rng.random(len(edges))
    order = sorted(range(len(edges)), key=lambda i: (weights[i], i))
    parent = {v: v for v in D.vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen = []
    for i in order:
        a, b = edges[i]
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        parent[ra] = rb
        chosen.append(_store_orientation(D, a, b))
    chosen.sort(key=D.arc_key)
    return SpanningStructure(D, tuple(chosen))


def structure_from_edges(D: Digraph, edges: Iterable[tuple]) -> SpanningStructure:
    """Wrap a caller-chosen spanning forest (given as vertex pairs) of U(D)."""
    stored = []
    for a, b in edges:
        if (a, b) not in D.arcs and (b, a) not in D.arcs:
            raise DigraphError(f"{(a, b)!r} is not an edge of U(D)")
        stored.append(_store_orientation(D, a, b))
    stored.sort(key=D.arc_key)
    S = SpanningStructure(D, tuple(stored))
    n_expected = len(D.vertices) - len(D.weak_components())
    if len(set(map(frozenset, stored))) != n_expected or len(S._rooted[1]) != len(D.vertices):
        raise DigraphError("edges do not form a spanning forest of U(D)")
    return S
