"""Threshold rule sets over the WS/NZ/WF criteria, the published rule sets,
and a small CART-style decision tree whose leaves convert to rules.

Rule-set semantics are first-match-wins down an ordered list, mirroring an
IF/ELSE-IF chain: a word is selected iff the first rule it matches is a
Select rule. Words matching nothing are not selected.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .criteria import CriteriaTable

CRITERIA = ("ws", "wf", "nz")  # also the tie-break precedence for tree splits
_OPS = (">", ">=", "<", "<=", "range")


@dataclass(frozen=True)
class Condition:
    criterion: str
    op: str
    threshold: float
    high: float | None = None

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.op not in _OPS:
            raise ValueError(f"unknown comparator {self.op!r}")
        if self.op == "range":
            if self.high is None or self.high < self.threshold:
                raise ValueError("range needs low <= high")
        elif self.high is not None:
            raise ValueError("high is only valid for range conditions")

    def matches(self, value: float) -> bool:
        if self.op == ">":
            return value > self.threshold
        if self.op == ">=":
            return value >= self.threshold
        if self.op == "<":
            return value < self.threshold
        if self.op == "<=":
            return value <= self.threshold
        return self.threshold <= value <= self.high

    def render(self) -> str:
        name = self.criterion.upper()
        if self.op == "range":
            return f"{_fmt(self.threshold)}<={name}<={_fmt(self.high)}"
        return f"{name}{self.op}{_fmt(self.threshold)}"


def _fmt(x: float) -> str:
    return f"{x:.9g}"


@dataclass(frozen=True)
class Rule:
    conditions: tuple[Condition, ...]
    action: str  # "select" | "unselect"

    def __post_init__(self):
        if self.action not in ("select", "unselect"):
            raise ValueError(f"action must be select or unselect, got {self.action!r}")

    def matches(self, values: dict[str, float]) -> bool:
        return all(c.matches(values[c.criterion]) for c in self.conditions)

    def render(self) -> str:
        body = " & ".join(c.render() for c in self.conditions) if self.conditions else "always"
        return f"{self.action.upper()}: {body}"


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    normalized: Optional[bool] = None  # which criteria space the thresholds live in

    def __post_init__(self):
        if not self.rules:
            raise ValueError("rule set must contain at least one rule")

    def decide(self, values: dict[str, float]) -> str | None:
        for rule in self.rules:
            if rule.matches(values):
                return rule.action
        return None

    def selects(self, values: dict[str, float]) -> bool:
        return self.decide(values) == "select"


def evaluate_rule_set(rs: RuleSet, table: CriteriaTable,
                      normalized: bool | None = None) -> set[str]:
    """Words of the table selected by the rule set.

    `normalized` picks which criteria columns the thresholds compare against;
    None defers to the rule set's own declaration (default raw).
    """
    if normalized is None:
        normalized = bool(rs.normalized)
    selected = set()
    for word, row in table.rows.items():
        values = {c: row.value(c, normalized) for c in CRITERIA}
        if rs.selects(values):
            selected.add(word)
    return selected


def _conj(*conds: Condition) -> tuple[Condition, ...]:
    return tuple(conds)


def _c(criterion: str, op: str, threshold: float, high: float | None = None) -> Condition:
    return Condition(criterion, op, threshold, high)


def builtin_rule_sets() -> dict[str, RuleSet]:
    """The published rule sets, verbatim.

    initial_raw is the nested IF/ELSE block flattened in order; the rule
    bases and final_raw come from the per-feature-pair study; the
    final_normalized rule is the production filter on normalized criteria.
    """
    initial_raw = RuleSet(rules=(
        Rule(_conj(_c("wf", "<", 5900)), "unselect"),
        Rule(_conj(_c("wf", ">=", 11063), _c("nz", ">", 30)), "select"),
        Rule(_conj(_c("wf", ">=", 8000), _c("ws", ">", 700)), "select"),
        Rule(_conj(_c("wf", "range", 6600, 11063), _c("ws", ">", 763),
                   _c("nz", ">", 39.5)), "select"),
        Rule(_conj(_c("wf", "range", 6600, 11063), _c("ws", ">", 643),
                   _c("nz", ">", 54.5)), "select"),
        Rule(_conj(_c("wf", "range", 6600, 11063), _c("ws", ">", 746),
                   _c("nz", "range", 39.5, 54.5)), "select"),
        Rule(_conj(_c("wf", "range", 5900, 6600), _c("ws", ">", 763),
                   _c("nz", ">=", 54.5)), "select"),
        Rule(_conj(_c("wf", ">", 7000), _c("nz", ">=", 54.5)), "select"),
    ), normalized=False)

    final_normalized = RuleSet(rules=(
        Rule(_conj(_c("ws", ">", 0.6), _c("nz", ">", 0.24), _c("wf", ">", 0.0015)),
             "select"),
    ), normalized=True)

    rule_base_1 = RuleSet(rules=(
        Rule(_conj(_c("ws", ">", 700), _c("wf", ">", 6000)), "select"),
        Rule(_conj(_c("ws", "range", 600, 700), _c("wf", ">", 8000)), "select"),
    ), normalized=False)

    rule_base_2 = RuleSet(rules=(
        Rule(_conj(_c("ws", ">", 700), _c("nz", ">", 40)), "select"),
        Rule(_conj(_c("ws", "range", 600, 700), _c("nz", ">", 50)), "select"),
    ), normalized=False)

    rule_base_3 = RuleSet(rules=(
        Rule(_conj(_c("wf", ">", 8000), _c("nz", ">", 30)), "select"),
        Rule(_conj(_c("wf", "range", 6000, 8000), _c("nz", ">", 50)), "select"),
    ), normalized=False)

    final_raw = RuleSet(rules=(
        Rule(_conj(_c("ws", ">", 700), _c("nz", ">", 40), _c("wf", ">", 8000)),
             "select"),
    ), normalized=False)

    return {
        "initial_raw": initial_raw,
        "final_normalized": final_normalized,
        "rule_base_1": rule_base_1,
        "rule_base_2": rule_base_2,
        "rule_base_3": rule_base_3,
        "final_raw": final_raw,
    }


# --- decision tree -----------------------------------------------------


@dataclass
class TreeNode:
    # internal nodes carry criterion/threshold/left/right; leaves carry
    # label and per-label sample counts
    criterion: str | None = None
    threshold: float | None = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    label: int | None = None
    counts: dict[int, int] = field(default_factory=dict)

    @property
    def is_leaf(self) -> bool:
        return self.criterion is None

    def classify(self, values: dict[str, float]) -> int:
        node = self
        while not node.is_leaf:
            if values[node.criterion] <= node.threshold:
                node = node.left
            else:
                node = node.right
        return node.label


def _gini(counts: dict[int, int]) -> float:
    n = sum(counts.values())
    if n == 0:
        return 0.0
    return 1.0 - sum((c / n) ** 2 for c in counts.values())


def _label_counts(labels: list[int]) -> dict[int, int]:
    out: dict[int, int] = {}
    for lab in labels:
        out[lab] = out.get(lab, 0) + 1
    return out


def _majority(counts: dict[int, int]) -> int:
    # ties break toward the smaller label
    return max(sorted(counts), key=lambda lab: counts[lab])


def train_tree(table: CriteriaTable, words: Iterable[str] | None = None,
               pos_filter: str | None = None, max_depth: int = 6,
               min_leaf: int = 1, normalized: bool = False) -> TreeNode:
    """Greedy binary CART on the WS/WF/NZ criteria with Gini impurity.

    Split thresholds are midpoints between adjacent sorted feature values;
    ties prefer the earlier criterion (WS, then WF, then NZ) and the lower
    threshold. A split must strictly reduce weighted Gini and leave at
    least min_leaf samples per side, else the node becomes a leaf.
    Rows must carry labels (1/2/3).
    """
    pool = list(words) if words is not None else [w for w, r in table.rows.items()
                                                  if r.label is not None]
    if pos_filter is not None:
        letter = {"noun": "N", "verb": "V", "adjective": "J", "adverb": "R",
                  "other": "O"}.get(pos_filter.lower(), pos_filter.upper())
        pool = [w for w in pool if w.rsplit("/", 1)[-1] == letter]
    if not pool:
        raise ValueError("no labeled words to train on")
    samples = []
    for w in pool:
        row = table[w]
        if row.label is None:
            raise ValueError(f"word {w!r} has no label")
        samples.append(({c: row.value(c, normalized) for c in CRITERIA}, row.label))
    return _grow(samples, depth=0, max_depth=max_depth, min_leaf=min_leaf)


def _grow(samples: list[tuple[dict[str, float], int]], depth: int,
          max_depth: int, min_leaf: int) -> TreeNode:
    labels = [lab for _, lab in samples]
    counts = _label_counts(labels)
    leaf = TreeNode(label=_majority(counts), counts=counts)
    if len(counts) == 1 or depth >= max_depth:
        return leaf

    n = len(samples)
    parent_gini = _gini(counts)
    best = None  # (weighted gini, criterion idx, threshold)
    for ci, criterion in enumerate(CRITERIA):
        values = sorted({v[criterion] for v, _ in samples})
        for lo, hi in zip(values[:-1], values[1:]):
            thr = (lo + hi) / 2
            left = [lab for v, lab in samples if v[criterion] <= thr]
            right_n = n - len(left)
            if len(left) < min_leaf or right_n < min_leaf:
                continue
            right = [lab for v, lab in samples if v[criterion] > thr]
            w = (len(left) * _gini(_label_counts(left))
                 + right_n * _gini(_label_counts(right))) / n
            cand = (w, ci, thr)
            if best is None or cand < best:
                best = cand
    if best is None or best[0] >= parent_gini:
        return leaf

    _, ci, thr = best
    criterion = CRITERIA[ci]
    left_s = [(v, lab) for v, lab in samples if v[criterion] <= thr]
    right_s = [(v, lab) for v, lab in samples if v[criterion] > thr]
    return TreeNode(criterion=criterion, threshold=thr,
                    left=_grow(left_s, depth + 1, max_depth, min_leaf),
                    right=_grow(right_s, depth + 1, max_depth, min_leaf),
                    counts=counts)


def tree_to_rules(tree: TreeNode) -> RuleSet:
    """One rule per leaf: the conjunction of root-to-leaf conditions.

    Leaves with majority label 1 or 2 (the context-word classes) become
    Select rules, label 3 becomes Unselect. Leaf order is left-to-right.
    """
    rules: list[Rule] = []

    def walk(node: TreeNode, conds: tuple[Condition, ...]):
        if node.is_leaf:
            action = "select" if node.label in (1, 2) else "unselect"
            rules.append(Rule(conds, action))
            return
        walk(node.left, conds + (Condition(node.criterion, "<=", node.threshold),))
        walk(node.right, conds + (Condition(node.criterion, ">", node.threshold),))

    walk(tree, ())
    return RuleSet(tuple(rules))


def save_tree(tree: TreeNode, path: str | Path) -> None:
    def encode(node: TreeNode) -> dict:
        if node.is_leaf:
            return {"leaf": node.label,
                    "counts": {str(k): v for k, v in sorted(node.counts.items())}}
        return {"criterion": node.criterion, "threshold": node.threshold,
                "counts": {str(k): v for k, v in sorted(node.counts.items())},
                "left": encode(node.left), "right": encode(node.right)}

    with open(path, "w", encoding="utf-8") as fh:
        json.dump(encode(tree), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_tree(path: str | Path) -> TreeNode:
    def decode(obj: dict) -> TreeNode:
        counts = {int(k): v for k, v in obj.get("counts", {}).items()}
        if "leaf" in obj:
            return TreeNode(label=obj["leaf"], counts=counts)
        return TreeNode(criterion=obj["criterion"], threshold=obj["threshold"],
                        left=decode(obj["left"]), right=decode(obj["right"]),
                        counts=counts)

    with open(path, encoding="utf-8") as fh:
        return decode(json.load(fh))


# --- rule files ---------------------------------------------------------

_RANGE_RE = re.compile(r"^(?P<lo>[-\d.eE+]+)<=(?P<name>WS|WF|NZ)<=(?P<hi>[-\d.eE+]+)$")
_SIMPLE_RE = re.compile(r"^(?P<name>WS|WF|NZ)(?P<op>>=|<=|>|<)(?P<thr>[-\d.eE+]+)$")


def write_rule_file(rs: RuleSet, path: str | Path) -> None:
    """One rule per line, e.g. `SELECT: WS>0.6 & NZ>0.24 & WF>0.0015`.

    An unconditional rule renders its body as `always`.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for rule in rs.rules:
            fh.write(rule.render() + "\n")


def parse_rule_file(path: str | Path, normalized: bool | None = None) -> RuleSet:
    rules: list[Rule] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            action_part, _, body = line.partition(":")
            action = action_part.strip().lower()
            if action not in ("select", "unselect") or not body:
                raise ValueError(f"{path}:{line_no}: expected 'SELECT: ...' or 'UNSELECT: ...'")
            body = body.strip()
            conds: list[Condition] = []
            if body.lower() != "always":
                for part in body.split("&"):
                    conds.append(_parse_condition(part.strip(), path, line_no))
            rules.append(Rule(tuple(conds), action))
    if not rules:
        raise ValueError(f"{path}: no rules found")
    return RuleSet(tuple(rules), normalized=normalized)


def _parse_condition(text: str, path, line_no: int) -> Condition:
    m = _RANGE_RE.match(text)
    if m:
        return Condition(m.group("name").lower(), "range",
                         float(m.group("lo")), float(m.group("hi")))
    m = _SIMPLE_RE.match(text)
    if m:
        return Condition(m.group("name").lower(), m.group("op"), float(m.group("thr")))
    raise ValueError(f"{path}:{line_no}: cannot parse condition {text!r}")
