"""Forward search tree over sample ids."""

from __future__ import annotations

import math


def edge_key(a: int, b: int) -> tuple:
    return (a, b) if a < b else (b, a)


class ForwardTree:
    """Rooted tree with cost-to-come and a blacklist of known-invalid edges.

    Vertices are sample ids; states live in the owning sample store.
    """

    def __init__(self, root: int):
        self.root = root
        self.g = {root: 0.0}
        self.parent = {root: None}
        self.children = {root: set()}
        self.invalid_edges: set = set()

    def __contains__(self, v: int) -> bool:
        return v in self.g

    def __len__(self) -> int:
        return len(self.g)

    def cost(self, v: int) -> float:
        return self.g.get(v, math.inf)

    def parent_of(self, v: int):
        return self.parent.get(v)

    def children_of(self, v: int) -> set:
        return self.children.get(v, set())

    def is_blacklisted(self, a: int, b: int) -> bool:
        return edge_key(a, b) in self.invalid_edges

    def blacklist(self, a: int, b: int) -> None:
        self.invalid_edges.add(edge_key(a, b))

    def attach(self, v: int, parent: int, g: float) -> None:
        """Add ``v`` under ``parent`` or move it there if already present."""
        old = self.parent.get(v)
        if old is not None:
            self.children[old].discard(v)
        self.parent[v] = parent
        self.children[parent].add(v)
        self.children.setdefault(v, set())
        self.g[v] = g

    def subtree(self, v: int) -> list:
        out, stack = [], [v]
        while stack:
            w = stack.pop()
            out.append(w)
            stack.extend(self.children.get(w, ()))
        return out

    def remove_subtree(self, v: int) -> list:
        if v == self.root:
            raise ValueError("cannot remove the root")
        removed = self.subtree(v)
        p = self.parent.get(v)
        if p is not None:
            self.children[p].discard(v)
        for w in removed:
            self.g.pop(w, None)
            self.parent.pop(w, None)
            self.children.pop(w, None)
        return removed

    def edges(self) -> list:
        return [(p, v) for v, p in self.parent.items() if p is not None]

    def path_to(self, v: int) -> list:
        if v not in self.g:
            raise KeyError(f"vertex {v} is not connected to the root")
        chain = [v]
        while self.parent[chain[-1]] is not None:
            chain.append(self.parent[chain[-1]])
        chain.reverse()
        return chain
