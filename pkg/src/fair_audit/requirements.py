"""requirements.txt parsing.

Handles the subset that matters for resolution against an environment:
``name[extra,...] <op>version, ... ; marker``. Markers are kept verbatim and
never evaluated. Lines starting with ``-`` (``-r``, ``-e``, ``--index-url``)
are skipped with a finding; anything else outside the grammar is reported,
never silently dropped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from fair_audit.core import Finding
from fair_audit.versions import VersionConstraint, VersionError, parse_constraints

_NAME = r"[A-Za-z0-9](?:[A-Za-z0-9._-]*[A-Za-z0-9])?"
_REQ_RE = re.compile(
    rf"""^\s*
    (?P<name>{_NAME})\s*
    (?:\[\s*(?P<extras>{_NAME}(?:\s*,\s*{_NAME})*)?\s*\])?\s*
    (?P<spec>\(?[^;()]*\)?)\s*
    (?:;\s*(?P<marker>.*?))?\s*$""",
    re.VERBOSE,
)
_INLINE_COMMENT = re.compile(r"(^|\s)#.*$")


def normalize_name(name: str) -> str:
    return re.sub(r"[-_.]+", "-", name).lower()


@dataclass(frozen=True)
class Requirement:
    name: str
    extras: frozenset[str] = frozenset()
    constraints: tuple[VersionConstraint, ...] = ()
    marker: str | None = None
    source_line: tuple[str, int] | None = field(default=None, compare=False)

    def render(self) -> str:
        out = self.name
        if self.extras:
            out += "[" + ",".join(sorted(self.extras)) + "]"
        out += ",".join(str(c) for c in self.constraints)
        if self.marker:
            out += "; " + self.marker
        return out


def parse_requirement(line: str, source: tuple[str, int] | None = None) -> Requirement:
    """Parse one logical requirement line; raises ValueError outside the grammar."""
    m = _REQ_RE.match(line)
    if m is None:
        raise ValueError(f"not a requirement: {line.strip()!r}")
    spec = m.group("spec").strip()
    if spec.startswith("(") != spec.endswith(")"):
        raise ValueError(f"unbalanced parentheses: {line.strip()!r}")
    spec = spec.strip("()")
    try:
        constraints = tuple(parse_constraints(spec))
    except VersionError as exc:
        raise ValueError(str(exc)) from None
    extras = m.group("extras")
    marker = m.group("marker")
    if marker is not None and not marker.strip():
        raise ValueError(f"empty marker: {line.strip()!r}")
    return Requirement(
        name=normalize_name(m.group("name")),
        extras=frozenset(normalize_name(e.strip()) for e in extras.split(",")) if extras else frozenset(),
        constraints=constraints,
        marker=marker or None,
        source_line=source,
    )


def _logical_lines(text: str):
    buf: list[str] = []
    start = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not buf:
            start = lineno
        if raw.endswith("\\"):
            buf.append(raw[:-1])
            continue
        buf.append(raw)
        yield start, " ".join(buf)
        buf = []
    if buf:
        yield start, " ".join(buf)


def parse_requirements(
    text: str | bytes, filename: str = "requirements.txt"
) -> tuple[list[Requirement], list[Finding]]:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            return [], [Finding("MANIFEST_ENCODING", f"{filename} is not valid UTF-8 ({exc.reason})", context=filename)]
    reqs: list[Requirement] = []
    findings: list[Finding] = []
    for lineno, line in _logical_lines(text):
        line = _INLINE_COMMENT.sub("", line).strip()
        if not line:
            continue
        where = f"{filename}:{lineno}"
        if line.startswith("-"):
            findings.append(Finding("DIRECTIVE_SKIPPED", f"directive not evaluated: {line}", context=where))
            continue
        try:
            reqs.append(parse_requirement(line, (filename, lineno)))
        except ValueError as exc:
            findings.append(Finding("UNPARSEABLE_REQUIREMENT", str(exc), context=where))
    return reqs, findings
