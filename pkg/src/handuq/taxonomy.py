"""Test-condition taxonomy and the training-profile ID/OOD classification.

A test frame is described by which operators/gesture/noise conditions it
shows plus two orthogonal scene attributes (background complexity, camera
view). A training-dataset profile lists the conditions that are out of
distribution for models trained on it, split into epistemic triggers
(conditions the training data never showed) and aleatoric triggers
(irreducible noise conditions). Classification is pure set intersection;
background and view never affect the label.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Literal

from .errors import FormatError, RangeError


class ConditionTag(str, Enum):
    """Scene-condition vocabulary for test frames."""

    O1 = "O1"   # one operator
    O2 = "O2"   # two operators
    GH = "GH"   # gloved hands
    RG = "RG"   # rare gestures (e.g. interlocked fingers)
    MBN = "MBN"  # motion-blurred noisy hands

    def __str__(self) -> str:  # plain value in reports and manifests
        return self.value


Background = Literal["simple", "cluttered"]
View = Literal["egocentric", "side"]

# Canonical display order for condition labels: operators, then appearance
# shifts, then noise.
_TAG_ORDER = (ConditionTag.O1, ConditionTag.O2, ConditionTag.GH, ConditionTag.RG, ConditionTag.MBN)


@dataclass(frozen=True)
class ConditionTagSet:
    """Full condition description of one test frame."""

    tags: frozenset[ConditionTag]
    background: Background
    view: View

    def __post_init__(self):
        tags = frozenset(ConditionTag(t) for t in self.tags)
        object.__setattr__(self, "tags", tags)
        operators = tags & {ConditionTag.O1, ConditionTag.O2}
        if len(operators) != 1:
            raise RangeError(f"exactly one of O1/O2 required, got {sorted(t.value for t in tags)}")
        if self.background not in ("simple", "cluttered"):
            raise RangeError(f"background must be simple|cluttered, got {self.background!r}")
        if self.view not in ("egocentric", "side"):
            raise RangeError(f"view must be egocentric|side, got {self.view!r}")

    @property
    def condition(self) -> str:
        """Canonical condition-row label, e.g. 'O2+GH+RG' or 'MBN'.

        Operator tags are elided when a noise/appearance tag alone names
        the row the way the benchmark tables do (MBN rows carry no
        operator count).
        """
        ordered = [t for t in _TAG_ORDER if t in self.tags]
        if ConditionTag.MBN in self.tags and len(ordered) == 2:
            # pure motion-blur row: operator tag is incidental
            return ConditionTag.MBN.value
        return "+".join(t.value for t in ordered)

    @property
    def cell(self) -> str:
        """Sampling-cell identity: condition row plus background."""
        return f"{self.condition}/{self.background}"

    def sort_key(self) -> tuple:
        return (
            ConditionTag.MBN in self.tags,
            ConditionTag.RG in self.tags,
            ConditionTag.GH in self.tags,
            ConditionTag.O2 in self.tags,
            self.background,
            self.view,
        )


def make_tags(
    tags: Iterable[ConditionTag | str],
    background: Background = "cluttered",
    view: View = "side",
) -> ConditionTagSet:
    return ConditionTagSet(frozenset(ConditionTag(t) for t in tags), background, view)


@dataclass(frozen=True)
class ScenarioProfile:
    """A training dataset's OOD trigger sets."""

    name: str
    epistemic_triggers: frozenset[ConditionTag]
    aleatoric_triggers: frozenset[ConditionTag]

    def __post_init__(self):
        epi = frozenset(ConditionTag(t) for t in self.epistemic_triggers)
        ale = frozenset(ConditionTag(t) for t in self.aleatoric_triggers)
        if epi & ale:
            raise RangeError(f"profile {self.name!r}: trigger sets overlap: {sorted(t.value for t in epi & ale)}")
        object.__setattr__(self, "epistemic_triggers", epi)
        object.__setattr__(self, "aleatoric_triggers", ale)


UncertaintyKind = Literal["none", "epistemic", "aleatoric", "both"]


@dataclass(frozen=True)
class DistributionLabel:
    kind: Literal["ID", "OOD"]
    uncertainty: UncertaintyKind

    def __post_init__(self):
        if self.kind == "ID" and self.uncertainty != "none":
            raise RangeError("ID labels carry no uncertainty attribution")
        if self.kind == "OOD" and self.uncertainty == "none":
            raise RangeError("OOD labels need an uncertainty attribution")


def builtin_profiles() -> list[ScenarioProfile]:
    """The four benchmark training-dataset profiles.

    One operator appears in every training set, so O1 is never a trigger.
    Motion blur is an aleatoric trigger for all of them.
    """
    mbn = frozenset({ConditionTag.MBN})
    return [
        ScenarioProfile("EgoHands", frozenset({ConditionTag.GH, ConditionTag.RG}), mbn),
        ScenarioProfile(
            "Ego2Hands",
            frozenset({ConditionTag.O2, ConditionTag.GH, ConditionTag.RG}),
            mbn,
        ),
        ScenarioProfile(
            "HADR",
            frozenset({ConditionTag.O2, ConditionTag.GH, ConditionTag.RG}),
            mbn,
        ),
        ScenarioProfile("HAGS", frozenset({ConditionTag.O2, ConditionTag.RG}), mbn),
    ]


def profile_by_name(name: str, extra: Iterable[ScenarioProfile] = ()) -> ScenarioProfile:
    """Look up a profile among user-supplied ones first, then the builtins."""
    candidates = list(extra) + builtin_profiles()
    for profile in candidates:
        if profile.name == name:
            return profile
    raise FormatError(
        f"unknown profile {name!r}; known: {', '.join(p.name for p in candidates)}"
    )


def classify(tags: ConditionTagSet, profile: ScenarioProfile) -> DistributionLabel:
    """Label a condition set ID or OOD for one training profile.

    OOD iff any tag hits a trigger set; epistemic and aleatoric hits
    combine to 'both'. Background and view are classification-neutral
    (background complexity is reported as its own grouping axis, not as a
    distribution shift).
    """
    epistemic = bool(tags.tags & profile.epistemic_triggers)
    aleatoric = bool(tags.tags & profile.aleatoric_triggers)
    if not (epistemic or aleatoric):
        return DistributionLabel("ID", "none")
    if epistemic and aleatoric:
        return DistributionLabel("OOD", "both")
    return DistributionLabel("OOD", "epistemic" if epistemic else "aleatoric")
