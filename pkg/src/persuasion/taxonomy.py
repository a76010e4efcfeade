"""Persuasion-technique taxonomy: a rooted DAG of labels plus its tree expansion.

The taxonomy ships as a JSON document (see ``data/``) and is treated as
ground truth by every consumer; fixing a wrong edge is a data change, not a
code change.  Multi-parent labels are legal in the DAG; for embedding
training the DAG is expanded into a tree by duplicating every node once per
distinct root-path.
"""
from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import (
    CycleDetected,
    DuplicateEdge,
    DuplicateLabel,
    InvalidLeafIndex,
    MultipleRoots,
    UnknownLabel,
    UnknownNodeInEdge,
)

PATH_SEP = "/"


@dataclass(frozen=True)
class Taxonomy:
    """Validated rooted DAG of technique labels.

    Immutable after construction; safe to share between threads.
    """

    root: str
    nodes: tuple[str, ...]                      # document order
    edges: tuple[tuple[str, str], ...]          # (parent, child), document order
    definitions: dict[str, str]
    leaf_index: dict[str, int]                  # leaf label -> 0..L-1
    parents: dict[str, tuple[str, ...]] = field(repr=False, default_factory=dict)
    children: dict[str, tuple[str, ...]] = field(repr=False, default_factory=dict)

    def is_leaf(self, label: str) -> bool:
        return label in self.leaf_index

    def has_node(self, label: str) -> bool:
        return label in self.parents

    def definition(self, label: str) -> str:
        return self.definitions.get(label, "")


@dataclass(frozen=True)
class TreeNode:
    node_id: str        # full root-path joined by "/"
    label: str          # source DAG label
    parent_id: str | None


@dataclass(frozen=True)
class LabelTree:
    """Root-path expansion of a Taxonomy: one node per distinct root-path."""

    tree_nodes: tuple[TreeNode, ...]
    label_to_nodes: dict[str, tuple[str, ...]]

    def __len__(self) -> int:
        return len(self.tree_nodes)

    def edges(self) -> list[tuple[str, str]]:
        """(parent_id, child_id) pairs, one per non-root tree node."""
        return [(n.parent_id, n.node_id) for n in self.tree_nodes
                if n.parent_id is not None]

    def node_ids(self) -> list[str]:
        return [n.node_id for n in self.tree_nodes]

    def children_map(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {n.node_id: [] for n in self.tree_nodes}
        for parent, child in self.edges():
            out[parent].append(child)
        return out


def _nfc(s: str) -> str:
    return unicodedata.normalize("NFC", s)


def parse_taxonomy(doc: dict) -> Taxonomy:
    """Validate a taxonomy JSON document and build the Taxonomy.

    Leaves without an explicit ``leaf_index`` entry are assigned the free
    indices in document order.  All label strings are NFC-normalized before
    comparison.
    """
    raw_nodes = [_nfc(n) for n in doc.get("nodes", [])]
    seen: set[str] = set()
    for n in raw_nodes:
        if not n:
            raise DuplicateLabel("empty label name is not allowed")
        if n in seen:
            raise DuplicateLabel(f"duplicate node label: {n!r}")
        seen.add(n)
    node_set = seen

    root = _nfc(doc.get("root", ""))
    if root not in node_set:
        raise UnknownNodeInEdge(f"declared root {root!r} is not a node")

    edges: list[tuple[str, str]] = []
    edge_seen: set[tuple[str, str]] = set()
    for pair in doc.get("edges", []):
        parent, child = _nfc(pair[0]), _nfc(pair[1])
        for endpoint in (parent, child):
            if endpoint not in node_set:
                raise UnknownNodeInEdge(f"edge endpoint {endpoint!r} is not a node")
        if (parent, child) in edge_seen:
            raise DuplicateEdge(f"duplicate edge {parent!r} -> {child!r}")
        edge_seen.add((parent, child))
        edges.append((parent, child))

    parents: dict[str, list[str]] = {n: [] for n in raw_nodes}
    children: dict[str, list[str]] = {n: [] for n in raw_nodes}
    for parent, child in edges:
        parents[child].append(parent)
        children[parent].append(child)

    orphans = [n for n in raw_nodes if not parents[n]]
    if orphans != [root]:
        extra = sorted(set(orphans) - {root})
        if extra:
            raise MultipleRoots(f"nodes without parents besides root: {extra}")
        # root itself acquired a parent: it sits on a cycle through the root
        raise CycleDetected(f"cycle through declared root {root!r} (it has incoming edges)")

    # Kahn's algorithm: any leftover node sits on (or behind) a directed cycle.
    indeg = {n: len(parents[n]) for n in raw_nodes}
    queue = [root]
    visited = 0
    while queue:
        n = queue.pop()
        visited += 1
        for c in children[n]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    if visited != len(raw_nodes):
        stuck = sorted(n for n in raw_nodes if indeg[n] > 0)
        raise CycleDetected(f"cycle detected through: {stuck}")

    leaves = [n for n in raw_nodes if not children[n]]
    leaf_set_ = set(leaves)
    leaf_index: dict[str, int] = {}
    for label, idx in doc.get("leaf_index", {}).items():
        label = _nfc(label)
        if label not in leaf_set_:
            raise InvalidLeafIndex(f"leaf_index key {label!r} is not a leaf")
        if not isinstance(idx, int) or idx < 0 or idx >= len(leaves):
            raise InvalidLeafIndex(f"leaf_index for {label!r} out of range: {idx}")
        leaf_index[label] = idx
    if len(set(leaf_index.values())) != len(leaf_index):
        raise InvalidLeafIndex("duplicate leaf_index values")
    free = sorted(set(range(len(leaves))) - set(leaf_index.values()))
    unassigned = [n for n in leaves if n not in leaf_index]
    for label, idx in zip(unassigned, free):
        leaf_index[label] = idx

    definitions = {_nfc(k): v for k, v in doc.get("definitions", {}).items()}
    for k in definitions:
        if k not in node_set:
            raise UnknownLabel(f"definition for unknown label {k!r}")

    return Taxonomy(
        root=root,
        nodes=tuple(raw_nodes),
        edges=tuple(edges),
        definitions=definitions,
        leaf_index=leaf_index,
        parents={n: tuple(v) for n, v in parents.items()},
        children={n: tuple(v) for n, v in children.items()},
    )


def load_taxonomy(path: str | Path) -> Taxonomy:
    with open(path, encoding="utf-8") as fh:
        return parse_taxonomy(json.load(fh))


def bundled_taxonomy(name: str = "subtask1") -> Taxonomy:
    """Load a taxonomy shipped with the package ("subtask1" or "subtask2")."""
    ref = resources.files("persuasion.data").joinpath(f"{name}.json")
    return parse_taxonomy(json.loads(ref.read_text(encoding="utf-8")))


def ancestors(t: Taxonomy, label: str) -> list[str]:
    """All DAG ancestors of ``label`` strictly between it and the root.

    The label itself and the root are excluded; order is breadth-first
    discovery order, deduplicated.
    """
    label = _nfc(label)
    if not t.has_node(label):
        raise UnknownLabel(f"unknown label {label!r}")
    out: list[str] = []
    seen: set[str] = set()
    frontier = [label]
    while frontier:
        nxt: list[str] = []
        for n in frontier:
            for p in t.parents[n]:
                if p not in seen:
                    seen.add(p)
                    nxt.append(p)
                    if p != t.root:
                        out.append(p)
        frontier = nxt
    return out


def leaf_set(t: Taxonomy) -> list[str]:
    """Leaf labels sorted by leaf_index."""
    return sorted(t.leaf_index, key=t.leaf_index.__getitem__)


def dag_to_tree(t: Taxonomy) -> LabelTree:
    """Expand the DAG into a tree by duplicating multi-parent nodes.

    One tree node per distinct root-path; node identity is the full path
    joined by "/".  Deterministic given document edge order.
    """
    nodes: list[TreeNode] = []
    label_to_nodes: dict[str, list[str]] = {}

    def visit(label: str, path_id: str, parent_id: str | None) -> None:
        nodes.append(TreeNode(node_id=path_id, label=label, parent_id=parent_id))
        label_to_nodes.setdefault(label, []).append(path_id)
        for child in t.children[label]:
            visit(child, path_id + PATH_SEP + child, path_id)

    visit(t.root, t.root, None)
    return LabelTree(
        tree_nodes=tuple(nodes),
        label_to_nodes={k: tuple(v) for k, v in label_to_nodes.items()},
    )
