# isometry_systems/core/iet.py
"""Interval exchanges, classical Rauzy-Veech induction, and the comparison
against the generalized splitting pipeline."""
import logging
from dataclasses import dataclass, field
from typing import Literal

from isometry_systems.core.errors import InvalidIET, KeaneViolation
from isometry_systems.core.forest import ForestComponent, build_forest, subtree_diameter
from isometry_systems.core.induction import Policy, run_induction
from isometry_systems.core.scalar import ZERO, Scalar, golden_ratio
from isometry_systems.core.sysiso import SystemOfIsometries, make_isometry

logger = logging.getLogger(__name__)

# --- Configuration ---
TREE_NAME = "I"
LEFT_END, RIGHT_END = "l", "r"
DEFAULT_LABELS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class IntervalExchange:
    """Two-row presentation: intervals in ``top`` order are sent to ``bottom`` order."""

    top: tuple[str, ...]
    bottom: tuple[str, ...]
    lengths: dict[str, Scalar]

    def __post_init__(self):
        object.__setattr__(self, "top", tuple(self.top))
        object.__setattr__(self, "bottom", tuple(self.bottom))
        object.__setattr__(self, "lengths", {k: Scalar.coerce(v) for k, v in self.lengths.items()})
        if not self.top:
            raise InvalidIET("an interval exchange needs at least one interval")
        if len(set(self.top)) != len(self.top) or sorted(self.top) != sorted(self.bottom):
            raise InvalidIET(f"rows {self.top} and {self.bottom} are not a permutation of each other")
        if set(self.lengths) != set(self.top):
            raise InvalidIET(f"lengths given for {sorted(self.lengths)} but intervals are {sorted(self.top)}")
        for label, length in self.lengths.items():
            if length <= 0:
                raise InvalidIET(f"interval '{label}' has non-positive length {length}")

    @classmethod
    def from_permutation(cls, lengths: list, permutation: list[int], labels: list[str] | None = None):
        """``permutation[i]`` is the 1-based position of interval ``i`` after the exchange."""
        r = len(lengths)
        labels = list(labels) if labels else list(DEFAULT_LABELS[:r])
        if len(labels) != r or len(permutation) != r:
            raise InvalidIET(f"{r} lengths, {len(permutation)} permutation entries and {len(labels)} labels")
        if sorted(permutation) != list(range(1, r + 1)):
            raise InvalidIET(f"{permutation} is not a permutation of 1..{r}")
        bottom = [""] * r
        for label, position in zip(labels, permutation):
            bottom[position - 1] = label
        return cls(tuple(labels), tuple(bottom), dict(zip(labels, lengths)))

    @property
    def permutation(self) -> list[int]:
        return [self.bottom.index(label) + 1 for label in self.top]

    @property
    def total(self) -> Scalar:
        return sum(self.lengths.values(), ZERO)

    @property
    def radicand(self) -> int:
        return max((v.radicand for v in self.lengths.values()), default=0)

    @property
    def irreducible(self) -> bool:
        return all(set(self.top[:k]) != set(self.bottom[:k]) for k in range(1, len(self.top)))

    def _starts(self, row: tuple[str, ...]) -> dict[str, Scalar]:
        starts, position = {}, ZERO
        for label in row:
            starts[label] = position
            position = position + self.lengths[label]
        return starts

    def top_starts(self) -> dict[str, Scalar]:
        return self._starts(self.top)

    def bottom_starts(self) -> dict[str, Scalar]:
        return self._starts(self.bottom)

    def discontinuities(self) -> list[Scalar]:
        starts = self.top_starts()
        return [starts[label] for label in self.top[1:]]

    def apply(self, x: Scalar) -> Scalar:
        """The exchange map on [0, total); intervals are left-closed."""
        x = Scalar.coerce(x)
        top, bottom = self.top_starts(), self.bottom_starts()
        for label in self.top:
            if top[label] <= x < top[label] + self.lengths[label]:
                return x - top[label] + bottom[label]
        raise InvalidIET(f"{x} is outside [0, {self.total})")

    def to_dict(self) -> dict:
        return {
            "top": list(self.top),
            "bottom": list(self.bottom),
            "lengths": {k: str(v) for k, v in sorted(self.lengths.items())},
            "permutation": self.permutation,
        }


def golden_iet(labels: tuple[str, str] = ("a", "b")) -> IntervalExchange:
    """The two-interval swap with lengths 1 and the golden ratio."""
    return IntervalExchange.from_permutation([Scalar.coerce(1), golden_ratio()], [2, 1], list(labels))


def iet_to_system(e: IntervalExchange) -> SystemOfIsometries:
    """One segment; one translation letter per interval."""
    forest = build_forest({TREE_NAME: ([LEFT_END, RIGHT_END], [(LEFT_END, RIGHT_END, e.total)])})
    component: ForestComponent = forest.component(TREE_NAME)
    tree = component.tree
    top, bottom = e.top_starts(), e.bottom_starts()
    letters = []
    for label in e.top:
        length = e.lengths[label]
        pairs = [
            (tree.point(LEFT_END, RIGHT_END, top[label]), tree.point(LEFT_END, RIGHT_END, bottom[label])),
            (
                tree.point(LEFT_END, RIGHT_END, top[label] + length),
                tree.point(LEFT_END, RIGHT_END, bottom[label] + length),
            ),
        ]
        letters.append(make_isometry(label, component, component, pairs))
    return SystemOfIsometries(forest, tuple(letters), rank_hint=len(e.top), field_radicand=e.radicand)


# --- Classical induction ---


@dataclass(frozen=True)
class RauzyStep:
    kind: Literal["Top", "Bottom"]
    input: IntervalExchange
    output: IntervalExchange

    @property
    def winner(self) -> str:
        return self.input.top[-1] if self.kind == "Top" else self.input.bottom[-1]

    @property
    def loser(self) -> str:
        return self.input.bottom[-1] if self.kind == "Top" else self.input.top[-1]

    def fold(self) -> dict[str, str]:
        """Letter images of the induced graph map: the loser's path now crosses the winner too."""
        t, s = self.input.top[-1], self.input.bottom[-1]
        images = {label: label for label in self.input.top}
        if self.kind == "Top":
            images[s] = f"{s} {t}"
        else:
            images[t] = f"{s} {t}"
        return images


def rauzy_step(e: IntervalExchange) -> RauzyStep:
    """Top wins when the top rightmost interval is strictly longer."""
    t, s = e.top[-1], e.bottom[-1]
    if t == s:
        raise InvalidIET(f"rightmost intervals coincide ('{t}'); the exchange is reducible")
    lt, ls = e.lengths[t], e.lengths[s]
    if lt == ls:
        raise KeaneViolation(f"rightmost intervals '{t}' and '{s}' have equal length {lt}", position=0)
    lengths = dict(e.lengths)
    top, bottom = list(e.top), list(e.bottom)
    if lt > ls:
        lengths[t] = lt - ls
        bottom.remove(s)
        bottom.insert(bottom.index(t) + 1, s)
        kind = "Top"
    else:
        lengths[s] = ls - lt
        top.remove(t)
        top.insert(top.index(s) + 1, t)
        kind = "Bottom"
    return RauzyStep(kind, e, IntervalExchange(tuple(top), tuple(bottom), lengths))


def rauzy_sequence(e: IntervalExchange, k: int) -> list[RauzyStep]:
    if k < 0:
        raise ValueError(f"step count must be non-negative, got {k}")
    steps: list[RauzyStep] = []
    current = e
    for position in range(k):
        try:
            step = rauzy_step(current)
        except KeaneViolation as err:
            raise KeaneViolation(str(err), position=position, steps=steps) from err
        steps.append(step)
        current = step.output
    return steps


@dataclass
class KeaneEvidence:
    depth: int
    passed: bool
    witness: tuple[str, int, str] | None = None  # (start discontinuity, iterate, hit discontinuity)

    def to_dict(self) -> dict:
        return {"depth": self.depth, "passed": self.passed, "witness": list(self.witness) if self.witness else None}


def keane_check(e: IntervalExchange, depth: int) -> KeaneEvidence:
    """Forward orbits of the discontinuities, ``depth`` iterates each, must avoid every discontinuity."""
    if depth < 1:
        raise ValueError(f"depth must be at least 1, got {depth}")
    betas = e.discontinuities()
    targets = set(betas)
    for beta in betas:
        y = beta
        for m in range(1, depth + 1):
            y = e.apply(y)
            if y in targets:
                logger.info(f"Keane condition fails: f^{m}({beta}) = {y}")
                return KeaneEvidence(depth, False, (str(beta), m, str(y)))
    return KeaneEvidence(depth, True)


# --- Comparison ---


@dataclass
class StepComparison:
    index: int
    classical_kind: str | None
    classical_lengths: list[str]
    split_widths: list[str]
    classical_fold: dict[str, str]
    split_fold: dict[str, str]

    @property
    def matched(self) -> bool:
        return (
            self.classical_kind is not None
            and self.classical_lengths == self.split_widths
            and self.classical_fold == self.split_fold
        )

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "classical_kind": self.classical_kind,
            "classical_lengths": self.classical_lengths,
            "split_widths": self.split_widths,
            "classical_fold": self.classical_fold,
            "split_fold": self.split_fold,
            "matched": self.matched,
        }


@dataclass
class ComparisonReport:
    k: int
    policy: str = "all"
    rows: list[StepComparison] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def first_divergence(self) -> int | None:
        for row in self.rows:
            if not row.matched:
                return row.index
        if len(self.rows) < self.k:
            return len(self.rows) + 1
        return None

    @property
    def verdict(self) -> str:
        return "MATCH" if self.first_divergence is None else "MISMATCH"

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "policy": self.policy,
            "verdict": self.verdict,
            "first_divergence": self.first_divergence,
            "top_wins_when": "top rightmost interval strictly longer",
            "rows": [row.to_dict() for row in self.rows],
            "notes": self.notes,
        }


def _sorted_strings(values) -> list[str]:
    return [str(v) for v in sorted(values)]


def compare_inductions(e: IntervalExchange, k: int, policy: Policy = "all") -> ComparisonReport:
    """Runs both inductions for ``k`` steps; compares length multisets and fold images per step."""
    report = ComparisonReport(k, policy)
    try:
        classical = rauzy_sequence(e, k)
    except KeaneViolation as err:
        classical = err.steps
        report.notes.append(f"classical induction stopped at step {err.position + 1}: {err}")

    history = run_induction(iet_to_system(e), max_steps=k + 1, policy=policy)
    splits = [step for step in history.steps if step.kind == "split"]
    if history.halted_at is None:
        report.notes.append(f"Rips machine did not halt (classification {history.classification})")

    for i in range(min(k, len(splits))):
        step = splits[i]
        row = StepComparison(
            index=i + 1,
            classical_kind=classical[i].kind if i < len(classical) else None,
            classical_lengths=_sorted_strings(classical[i].output.lengths.values()) if i < len(classical) else [],
            split_widths=_sorted_strings(subtree_diameter(f.domain) for f in step.output.letters),
            classical_fold=classical[i].fold() if i < len(classical) else {},
            split_fold={name: str(w) for name, w in sorted(step.fold_map.edge_images.items())},
        )
        report.rows.append(row)
    if report.verdict == "MISMATCH":
        logger.warning(f"Inductions diverge at step {report.first_divergence}")
    return report
