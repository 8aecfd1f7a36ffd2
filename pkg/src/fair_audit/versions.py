"""Version values and the seven-operator constraint grammar.

Supported version forms are dotted non-negative integers with an optional
``a``/``b``/``rc`` pre-release tag (``1.2.0rc1``, ``2.0b3``) and an optional
leading ``v``. Epochs (``1!2.0``), local labels (``1.0+abc``), post/dev
releases and wildcards are rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

_VERSION_RE = re.compile(r"^[vV]?(?P<release>\d+(?:\.\d+)*)(?:[.-]?(?P<phase>a|b|rc)(?P<num>\d+))?$")

_PHASE_RANK = {"a": 0, "b": 1, "rc": 2}


class VersionError(ValueError):
    pass


@dataclass(frozen=True)
class Version:
    release: tuple[int, ...]
    pre: tuple[str, int] | None = None
    raw: str = field(default="", compare=False)

    def _padded(self, width: int) -> tuple[int, ...]:
        return self.release + (0,) * (width - len(self.release))

    def sort_key(self, width: int) -> tuple:
        # final releases sort after every pre-release of the same release
        pre = (_PHASE_RANK[self.pre[0]], self.pre[1]) if self.pre else (len(_PHASE_RANK), 0)
        return self._padded(width) + pre

    def compare(self, other: Version) -> int:
        width = max(len(self.release), len(other.release))
        a, b = self.sort_key(width), other.sort_key(width)
        return (a > b) - (a < b)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Version):
            return NotImplemented
        return self.compare(other) == 0

    def __hash__(self) -> int:
        release = list(self.release)
        while len(release) > 1 and release[-1] == 0:
            release.pop()
        return hash((tuple(release), self.pre))

    def __lt__(self, other: Version) -> bool:
        return self.compare(other) < 0

    def __le__(self, other: Version) -> bool:
        return self.compare(other) <= 0

    def __gt__(self, other: Version) -> bool:
        return self.compare(other) > 0

    def __ge__(self, other: Version) -> bool:
        return self.compare(other) >= 0

    def __str__(self) -> str:
        return self.raw or self.canonical()

    def canonical(self) -> str:
        text = ".".join(map(str, self.release))
        if self.pre:
            text += f"{self.pre[0]}{self.pre[1]}"
        return text


def parse_version(text: str) -> Version:
    m = _VERSION_RE.match(text.strip()) if isinstance(text, str) else None
    if m is None:
        raise VersionError(f"invalid version: {text!r}")
    release = tuple(int(p) for p in m.group("release").split("."))
    pre = (m.group("phase"), int(m.group("num"))) if m.group("phase") else None
    return Version(release, pre, text)


class Op(str, Enum):
    EQ = "=="
    NE = "!="
    LE = "<="
    GE = ">="
    LT = "<"
    GT = ">"
    COMPATIBLE = "~="


@dataclass(frozen=True)
class VersionConstraint:
    op: Op
    version: Version

    def __post_init__(self) -> None:
        object.__setattr__(self, "op", Op(self.op))
        if self.op is Op.COMPATIBLE and len(self.version.release) < 2:
            raise VersionError(f"~= needs at least two release segments, got {self.version}")

    def __str__(self) -> str:
        return f"{self.op.value}{self.version}"


# longest operators first so "<=" is not read as "<"
_CONSTRAINT_RE = re.compile(r"^\s*(~=|==|!=|<=|>=|<|>)\s*(\S+?)\s*$")


def parse_constraint(text: str) -> VersionConstraint:
    m = _CONSTRAINT_RE.match(text)
    if m is None:
        raise VersionError(f"invalid constraint: {text!r}")
    return VersionConstraint(Op(m.group(1)), parse_version(m.group(2)))


def parse_constraints(text: str) -> list[VersionConstraint]:
    """Parse a comma-separated conjunction such as ``>=1.2, <2.0``."""
    text = text.strip()
    if not text:
        return []
    return [parse_constraint(part) for part in text.split(",")]


def satisfies(version: Version, constraint: VersionConstraint) -> bool:
    target = constraint.version
    cmp = version.compare(target)
    op = constraint.op
    if op is Op.EQ:
        return cmp == 0
    if op is Op.NE:
        return cmp != 0
    if op is Op.LE:
        return cmp <= 0
    if op is Op.GE:
        return cmp >= 0
    if op is Op.LT:
        return cmp < 0
    if op is Op.GT:
        return cmp > 0
    prefix = target.release[:-1]
    head = version._padded(len(prefix))[: len(prefix)]
    return cmp >= 0 and head == prefix


def satisfies_all(version: Version, constraints: list[VersionConstraint]) -> bool:
    return all(satisfies(version, c) for c in constraints)
