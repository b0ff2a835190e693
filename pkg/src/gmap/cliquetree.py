"""Clique tree construction and the two degree-controlling transforms."""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .model import ADD, Model, flat_index


@dataclass(frozen=True)
class CliqueNode:
    """A cluster of variables plus the model factors assigned to it.

    ``energy`` and ``statistics`` hold indices into the model's factor lists.
    A clone created by :func:`reduce_neighbors` carries neither, i.e. zero
    potentials.
    """

    id: int
    variables: tuple
    energy: tuple = ()
    statistics: tuple = ()
    clone_of: int | None = None


@dataclass(frozen=True, eq=False)
class CliqueTree:
    model: Model
    nodes: tuple
    edges: frozenset
    root: int = 0

    @cached_property
    def adjacency(self) -> dict:
        adj = {n.id: set() for n in self.nodes}
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return {k: tuple(sorted(v)) for k, v in adj.items()}

    def neighbors(self, i) -> tuple:
        return self.adjacency[i]

    def sepset(self, i, j) -> tuple:
        return tuple(sorted(set(self.nodes[i].variables) & set(self.nodes[j].variables)))

    @property
    def width(self) -> int:
        return max(len(n.variables) for n in self.nodes) - 1

    @property
    def max_degree(self) -> int:
        return max((len(v) for v in self.adjacency.values()), default=0)

    def with_root(self, root: int) -> "CliqueTree":
        if not 0 <= root < len(self.nodes):
            raise ValueError(f"root {root} is not a node id")
        return CliqueTree(self.model, self.nodes, self.edges, root)

    def with_model(self, model: Model, keep_statistics=True) -> "CliqueTree":
        """Rebind to a model sharing the same variables and energy factors."""
        nodes = self.nodes if keep_statistics else tuple(replace(n, statistics=()) for n in self.nodes)
        return CliqueTree(model, nodes, self.edges, self.root)

    def describe(self) -> str:
        lines = []
        for n in self.nodes:
            tag = f" clone-of {n.clone_of}" if n.clone_of is not None else ""
            lines.append(
                f"clique {n.id}: vars {list(n.variables)} f{list(n.energy)} g{list(n.statistics)}{tag}"
            )
        for i, j in sorted(self.edges):
            lines.append(f"edge {i}-{j}: sepset {list(self.sepset(i, j))}")
        lines.append(f"width {self.width}  nu {self.max_degree}  nodes {len(self.nodes)}  root {self.root}")
        return "\n".join(lines)


def interaction_graph(model: Model) -> dict:
    adj = {v: set() for v in range(model.M)}
    for fac in itertools.chain(model.energy_factors, model.statistic_factors):
        for a, b in itertools.combinations(fac.scope, 2):
            adj[a].add(b)
            adj[b].add(a)
    return adj


def _fill_count(adj, v):
    nb = sorted(adj[v])
    return sum(1 for a, b in itertools.combinations(nb, 2) if b not in adj[a])


def min_fill_order(model: Model) -> tuple:
    """Greedy min-fill elimination order; ties go to the smallest id."""
    adj = {v: set(n) for v, n in interaction_graph(model).items()}
    fill = {v: _fill_count(adj, v) for v in adj}
    heap = [(f, v) for v, f in fill.items()]
    heapq.heapify(heap)
    order = []
    while heap:
        f, v = heapq.heappop(heap)
        if v not in adj or fill[v] != f:
            continue
        nb = adj.pop(v)
        for a, b in itertools.combinations(nb, 2):
            adj[a].add(b)
            adj[b].add(a)
        for u in nb:
            adj[u].discard(v)
        order.append(v)
        # only vertices within two hops of v can see their fill count change
        touched = set(nb)
        for u in nb:
            touched |= adj[u]
        for u in touched:
            new = _fill_count(adj, u)
            if new != fill[u]:
                fill[u] = new
                heapq.heappush(heap, (new, u))
    return tuple(order)


def elimination_cliques(model: Model, order) -> list:
    adj = {v: set(n) for v, n in interaction_graph(model).items()}
    if sorted(order) != list(range(model.M)):
        raise ValueError("order must be a permutation of the variable ids")
    cliques = []
    for v in order:
        nb = adj.pop(v)
        cliques.append(frozenset(nb | {v}))
        for a, b in itertools.combinations(nb, 2):
            adj[a].add(b)
            adj[b].add(a)
        for u in nb:
            adj[u].discard(v)
    return cliques


def build_clique_tree(model: Model, order=None, root: int = 0, rng=None) -> CliqueTree:
    """Triangulate along ``order`` and join the maximal cliques into a tree.

    Cliques are connected by a maximum-weight spanning tree on sepset size
    (Kruskal). Ties prefer edges between cliques that are close in
    elimination order, which turns star-like MRFs into chains. Disconnected
    components end up bridged by empty-sepset edges.

    With ``rng`` given, ties are broken at random instead; any such tree is
    still a valid clique tree, typically with much larger degree.
    """
    if order is None:
        order = min_fill_order(model)
    raw = elimination_cliques(model, order)
    raw_holders = _holders(raw)
    cliques = []
    for k, c in enumerate(raw):
        # drop c if a strict superset exists, or an equal clique comes later
        rare = min(c, key=lambda v: len(raw_holders[v]))
        if any(c < raw[d] or (d > k and c == raw[d]) for d in raw_holders[rare]):
            continue
        cliques.append(c)

    n = len(cliques)
    holders = _holders(cliques)
    pairs = {(i, j) for ks in holders.values() for i, j in itertools.combinations(ks, 2)}
    if rng is None:
        candidates = sorted((-len(cliques[i] & cliques[j]), j - i, i, j) for i, j in pairs)
    else:
        candidates = sorted((-len(cliques[i] & cliques[j]), float(rng.random()), i, j) for i, j in sorted(pairs))
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = set()
    for _, _, i, j in candidates:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            edges.add((i, j))
            if len(edges) == n - 1:
                break
    # bridge disconnected components with empty-sepset edges, in id order
    firsts = {}
    for k in range(n):
        firsts.setdefault(find(k), k)
    firsts = sorted(firsts.values())
    for a, b in zip(firsts, firsts[1:]):
        edges.add((a, b))

    energy = [[] for _ in range(n)]
    stats = [[] for _ in range(n)]
    for t, fac in enumerate(model.energy_factors):
        energy[_home(cliques, holders, fac.scope)].append(t)
    for t, fac in enumerate(model.statistic_factors):
        stats[_home(cliques, holders, fac.scope)].append(t)
    nodes = tuple(
        CliqueNode(k, tuple(sorted(c)), tuple(energy[k]), tuple(stats[k])) for k, c in enumerate(cliques)
    )
    return CliqueTree(model, nodes, frozenset(edges), root)


def _holders(cliques):
    out = {}
    for k, c in enumerate(cliques):
        for v in c:
            out.setdefault(v, []).append(k)
    return out


def _home(cliques, holders, scope):
    """Lowest-id clique containing ``scope``."""
    if not scope:
        return 0
    s = set(scope)
    rare = min(s, key=lambda v: len(holders[v]))
    for k in holders[rare]:
        if s <= cliques[k]:
            return k
    raise AssertionError(f"no clique covers scope {scope}")  # triangulation guarantees one


def check_running_intersection(tree: CliqueTree):
    """Return ``(True, None)`` or ``(False, v)`` for the first violating variable."""
    holders = {}
    for node in tree.nodes:
        for v in node.variables:
            holders.setdefault(v, set()).add(node.id)
    for v in sorted(holders):
        ids = holders[v]
        start = min(ids)
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in tree.neighbors(u):
                if w in ids and w not in seen:
                    seen.add(w)
                    queue.append(w)
        if seen != ids:
            return False, v
    return True, None


def is_tree(tree: CliqueTree) -> bool:
    n = len(tree.nodes)
    if len(tree.edges) != n - 1:
        return False
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for w in tree.neighbors(u):
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == n


def check_family_preservation(tree: CliqueTree) -> bool:
    model = tree.model
    seen_f = sorted(t for n in tree.nodes for t in n.energy)
    seen_g = sorted(t for n in tree.nodes for t in n.statistics)
    if seen_f != list(range(len(model.energy_factors))):
        return False
    if seen_g != list(range(len(model.statistic_factors))):
        return False
    for n in tree.nodes:
        vs = set(n.variables)
        if any(not set(model.energy_factors[t].scope) <= vs for t in n.energy):
            return False
        if any(not set(model.statistic_factors[t].scope) <= vs for t in n.statistics):
            return False
    return True


def reduce_neighbors(tree: CliqueTree) -> CliqueTree:
    """Replace every node of degree d > 3 by a chain of d clones.

    Clone k keeps the k-th neighbour (ascending id). The first clone reuses
    the original id and keeps the factors; the others carry zero potentials.
    """
    nodes = list(tree.nodes)
    adj = {n.id: set(tree.neighbors(n.id)) for n in nodes}
    for u in range(len(tree.nodes)):
        nbrs = sorted(adj[u])
        if len(nbrs) <= 3:
            continue
        chain = [u]
        for _ in nbrs[1:]:
            new_id = len(nodes)
            nodes.append(CliqueNode(new_id, nodes[u].variables, clone_of=u))
            adj[new_id] = set()
            chain.append(new_id)
        for clone, nb in zip(chain, nbrs):
            adj[u].discard(nb)
            adj[nb].discard(u)
            adj[clone].add(nb)
            adj[nb].add(clone)
        for a, b in zip(chain, chain[1:]):
            adj[a].add(b)
            adj[b].add(a)
    if len(nodes) == len(tree.nodes):
        return tree
    edges = frozenset((min(a, b), max(a, b)) for a in adj for b in adj[a])
    return CliqueTree(tree.model, tuple(nodes), edges, tree.root)


def degree_bound(width: int) -> int:
    return 2 ** (width + 2) - 4


def reshape_dedup_sepsets(tree: CliqueTree, root: int | None = None) -> CliqueTree:
    """Re-hang neighbours so no node sees the same sepset more than twice.

    Starting from a root (default: lowest-id node above ``2**(tau+2) - 4``
    neighbours), nodes are visited top-down. Surplus children sharing a
    sepset ``a`` are detached and re-attached below a kept sibling with the
    same sepset; the new edge again has sepset ``a``, so running
    intersection holds. Surplus only ever moves deeper, so this terminates.
    """
    bound = degree_bound(tree.width)
    if tree.max_degree <= bound:
        return tree
    if root is None:
        root = min(i for i in range(len(tree.nodes)) if len(tree.neighbors(i)) > bound)
    var = {n.id: frozenset(n.variables) for n in tree.nodes}
    adj = {n.id: set(tree.neighbors(n.id)) for n in tree.nodes}
    parent = {root: None}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        p = parent[u]
        groups = {}
        for c in sorted(adj[u] - {p}):
            groups.setdefault(var[u] & var[c], []).append(c)
        for sep, kids in sorted(groups.items(), key=lambda kv: kv[1][0]):
            keep = 1 if (p is not None and var[u] & var[p] == sep) else 2
            if len(kids) > keep:
                anchor = kids[0]
                for c in kids[keep:]:
                    adj[u].discard(c)
                    adj[c].discard(u)
                    adj[anchor].add(c)
                    adj[c].add(anchor)
        for c in sorted(adj[u] - {p}):
            parent[c] = u
            queue.append(c)
    edges = frozenset((min(a, b), max(a, b)) for a in adj for b in adj[a])
    return CliqueTree(tree.model, tree.nodes, edges, tree.root)


def clique_energy(tree: CliqueTree, i: int) -> np.ndarray:
    """Dense table of the summed assigned energy factors, row-major over the clique."""
    node = tree.nodes[i]
    model = tree.model
    cards = model.cardinalities
    shape = [cards[v] for v in node.variables]
    out = np.zeros(int(np.prod(shape, dtype=np.int64)), dtype=np.float64)
    if not node.energy:
        return out
    for k, ys in enumerate(itertools.product(*(range(c) for c in shape))):
        y = dict(zip(node.variables, ys))
        total = 0.0
        for t in node.energy:
            fac = model.energy_factors[t]
            total += float(fac.values[flat_index(fac.scope, cards, y)])
        out[k] = total
    return out


def clique_statistics(tree: CliqueTree, i: int):
    """``(n_assignments, P)`` int table of folded statistics, or None if unassigned."""
    node = tree.nodes[i]
    if not node.statistics:
        return None
    model = tree.model
    cards = model.cardinalities
    shape = [cards[v] for v in node.variables]
    out = np.zeros((int(np.prod(shape, dtype=np.int64)), model.P), dtype=np.int64)
    for k, ys in enumerate(itertools.product(*(range(c) for c in shape))):
        y = dict(zip(node.variables, ys))
        for t in node.statistics:
            fac = model.statistic_factors[t]
            row = fac.values[flat_index(fac.scope, cards, y)]
            for d, a in enumerate(model.accumulation):
                out[k, d] = out[k, d] + row[d] if a is ADD else max(out[k, d], row[d])
    return out

