"""Prompt state space as a rooted tree.

Nodes are prompt texts, edges are the rewrite operator that produced the
child, and scores are dev-set accuracies attached after evaluation. The
tree is append-only: nodes are never removed or re-parented, and ids are
monotonically increasing integers so creation order doubles as the
tie-break key everywhere a tie can occur.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

from .errors import NoScoredNodeError, TreeError


class OperatorId(Enum):
    """The closed set of prompt transformation moves."""

    MAKE_VERBOSE = "make_verbose"
    MAKE_CONCISE = "make_concise"
    REORDER = "reorder"
    ADD_EXAMPLES = "add_examples"
    ADD_COT = "add_cot"
    ADD_CONSTRAINTS = "add_constraints"
    ADD_ROLE = "add_role"
    ADD_DEFINITIONS = "add_definitions"
    ONE_SHOT_IMPROVE = "one_shot_improve"


# The four moves enabled by default for search runs.
CORE_OPERATORS: tuple[OperatorId, ...] = (
    OperatorId.MAKE_VERBOSE,
    OperatorId.MAKE_CONCISE,
    OperatorId.REORDER,
    OperatorId.ADD_EXAMPLES,
)


@dataclass
class PromptNode:
    """One prompt state: text, lineage, and an optional cached score."""

    id: int
    prompt_text: str
    parent: int | None = None
    operator: OperatorId | None = None
    score: float | None = None
    children: list[int] = field(default_factory=list)

    @property
    def is_root(self) -> bool:
        return self.parent is None


class SearchTree:
    """Append-only tree of PromptNodes with id-indexed lookup."""

    def __init__(self, root_prompt: str):
        if not root_prompt:
            raise ValueError("root prompt text must be non-empty")
        root = PromptNode(id=0, prompt_text=root_prompt)
        self.nodes: dict[int, PromptNode] = {0: root}
        self.root: int = 0
        self._next_id = 1

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self) -> Iterator[PromptNode]:
        return iter(self.nodes.values())

    def node(self, node_id: int) -> PromptNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise TreeError(f"unknown node id {node_id}") from None

    def add_child(self, parent: int, prompt_text: str, operator: OperatorId) -> int:
        """Append a new node under ``parent`` and return its id."""
        parent_node = self.node(parent)
        if not prompt_text:
            raise ValueError("prompt_text must be non-empty")
        if not isinstance(operator, OperatorId):
            raise ValueError(f"operator must be an OperatorId, got {operator!r}")
        node_id = self._next_id
        self._next_id += 1
        self.nodes[node_id] = PromptNode(
            id=node_id, prompt_text=prompt_text, parent=parent, operator=operator
        )
        parent_node.children.append(node_id)
        return node_id

    def set_score(self, node_id: int, score: float) -> None:
        if not 0.0 <= score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {score}")
        self.node(node_id).score = score

    def get_path(self, node_id: int) -> list[OperatorId]:
        """Operators along the root-to-node path, in application order."""
        path: list[OperatorId] = []
        node = self.node(node_id)
        while node.parent is not None:
            assert node.operator is not None  # non-root nodes always carry one
            path.append(node.operator)
            node = self.node(node.parent)
        path.reverse()
        return path

    def depth(self, node_id: int) -> int:
        return len(self.get_path(node_id))

    def best_node(self) -> int:
        """Scored node with the highest score; ties go to the lowest id."""
        best: PromptNode | None = None
        for node_id in sorted(self.nodes):
            node = self.nodes[node_id]
            if node.score is None:
                continue
            if best is None or node.score > best.score:  # strict: earliest id wins ties
                best = node
        if best is None:
            raise NoScoredNodeError("no node in the tree has a score")
        return best.id

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "nodes": [
                {
                    "id": n.id,
                    "parent": n.parent,
                    "operator": n.operator.value if n.operator else None,
                    "score": n.score,
                    "prompt_text": n.prompt_text,
                    "children": list(n.children),
                }
                for n in sorted(self.nodes.values(), key=lambda n: n.id)
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, payload: dict) -> "SearchTree":
        try:
            records = {int(rec["id"]): rec for rec in payload["nodes"]}
            root_id = int(payload["root"])
        except (KeyError, TypeError, ValueError) as exc:
            raise TreeError(f"malformed tree document: {exc}") from exc
        if root_id not in records:
            raise TreeError(f"root id {root_id} missing from node list")
        root_rec = records[root_id]
        if root_rec["parent"] is not None or root_rec["operator"] is not None:
            raise TreeError("root node must have no parent and no operator")

        tree = cls.__new__(cls)
        tree.nodes = {}
        tree.root = root_id
        for node_id in sorted(records):
            rec = records[node_id]
            operator = OperatorId(rec["operator"]) if rec["operator"] else None
            parent = rec["parent"]
            if (parent is None) != (operator is None):
                raise TreeError(f"node {node_id} mixes root and non-root fields")
            if parent is not None and parent not in records:
                raise TreeError(f"node {node_id} references unknown parent {parent}")
            tree.nodes[node_id] = PromptNode(
                id=node_id,
                prompt_text=rec["prompt_text"],
                parent=parent,
                operator=operator,
                score=rec["score"],
                children=[int(c) for c in rec["children"]],
            )
        tree._next_id = max(records) + 1
        return tree

    @classmethod
    def loads(cls, text: str) -> "SearchTree":
        return cls.from_dict(json.loads(text))
