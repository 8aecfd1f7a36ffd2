"""Reusability: census of the files that make a repository reusable by others.

A README and a license are mandatory. Container specs, conda environments,
notebooks, CI workflows and citation metadata are reported but do not decide
the outcome.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from fair_audit.core import CheckId, Finding, Severity, Status, Verdict, fitness_function
from fair_audit.repo import RepoTree, TreeEntry


class IndicatorKind(str, Enum):
    README = "readme"
    LICENSE = "license"
    CONTAINER_SPEC = "container_spec"
    ENV_SPEC = "env_spec"
    NOTEBOOK = "notebook"
    WORKFLOW = "workflow"
    CITATION_METADATA = "citation_metadata"


@dataclass(frozen=True)
class IndicatorRule:
    kind: IndicatorKind
    patterns: tuple[str, ...]
    mandatory: bool = False
    scope: str = "root"  # "root", "anywhere" (basename glob at any depth) or "path" (directory-anchored glob)
    case_insensitive: bool = False


INDICATOR_RULES = (
    IndicatorRule(IndicatorKind.README, ("README.md",), mandatory=True, case_insensitive=True),
    IndicatorRule(
        IndicatorKind.LICENSE, ("LICENSE", "LICENSE.txt", "LICENSE.md", "COPYING"), mandatory=True, case_insensitive=True
    ),
    IndicatorRule(IndicatorKind.CONTAINER_SPEC, ("Dockerfile",)),
    IndicatorRule(IndicatorKind.ENV_SPEC, ("environment.yml", "environment.yaml")),
    IndicatorRule(IndicatorKind.NOTEBOOK, ("*.ipynb",), scope="anywhere"),
    IndicatorRule(IndicatorKind.WORKFLOW, (".github/workflows/*.yml", ".github/workflows/*.yaml"), scope="path"),
    IndicatorRule(IndicatorKind.CITATION_METADATA, ("CITATION.cff",)),
)

# kind -> (present code, absent code)
_CODES = {
    IndicatorKind.README: ("README_FOUND", "MISSING_README"),
    IndicatorKind.LICENSE: ("LICENSE_FOUND", "MISSING_LICENSE"),
    IndicatorKind.CONTAINER_SPEC: ("CONTAINER_SPEC_FOUND", "NO_CONTAINER_SPEC"),
    IndicatorKind.ENV_SPEC: ("ENV_SPEC_FOUND", "NO_ENV_SPEC"),
    IndicatorKind.NOTEBOOK: ("NOTEBOOK_FOUND", "NO_NOTEBOOK"),
    IndicatorKind.WORKFLOW: ("WORKFLOW_FOUND", "NO_WORKFLOW"),
    IndicatorKind.CITATION_METADATA: ("CITATION_FOUND", "NO_CITATION_METADATA"),
}

_CFF_VERSION = re.compile(r"^\s*cff-version\s*:", re.MULTILINE)


@dataclass(frozen=True)
class ReuseIndicator:
    kind: IndicatorKind
    path: str
    well_formed: bool
    note: str | None = None


def indicator_table() -> list[tuple[IndicatorKind, tuple[str, ...], bool]]:
    return [(r.kind, r.patterns, r.mandatory) for r in INDICATOR_RULES]


def _matches(tree: RepoTree, rule: IndicatorRule) -> list[TreeEntry]:
    if rule.scope == "root":
        return tree.root_files(rule.patterns, case_insensitive=rule.case_insensitive)
    found: dict[str, TreeEntry] = {}
    for pattern in rule.patterns:
        for e in tree.match(pattern, anywhere=rule.scope == "anywhere"):
            found.setdefault(e.relative_path, e)
    return [found[p] for p in sorted(found)]


def _well_formed(kind: IndicatorKind, data: bytes) -> tuple[bool, str | None]:
    text = data.decode("utf-8", errors="replace")
    if kind is IndicatorKind.README:
        return (True, None) if text.strip() else (False, "empty")
    if kind is IndicatorKind.LICENSE:
        return (True, None) if text.strip() else (False, "empty")
    if kind is IndicatorKind.CITATION_METADATA:
        return (True, None) if _CFF_VERSION.search(text) else (False, "no cff-version key")
    return True, None


def detect_indicators(
    tree: RepoTree, contents: dict[str, bytes] | None = None
) -> tuple[list[ReuseIndicator], list[Finding]]:
    indicators: list[ReuseIndicator] = []
    problems: list[Finding] = []
    for rule in INDICATOR_RULES:
        for entry in _matches(tree, rule):
            path = entry.relative_path
            try:
                data = contents[path] if contents and path in contents else tree.read_bytes(path)
            except OSError as exc:
                problems.append(Finding("UNREADABLE_FILE", f"cannot read {path}: {exc.strerror}", context=path))
                indicators.append(ReuseIndicator(rule.kind, path, False, "unreadable"))
                continue
            ok, note = _well_formed(rule.kind, data)
            indicators.append(ReuseIndicator(rule.kind, path, ok, note))
    return indicators, problems


def _precondition(tree, contents=None) -> str | None:
    return None if isinstance(tree, RepoTree) else "artifact is null"


@fitness_function(
    CheckId.REUSABILITY,
    _precondition,
    "Require a non-empty README.md and license file; census Dockerfile, environment.yml, notebooks, "
    "CI workflows and CITATION.cff.",
)
def scan_reusability(tree: RepoTree, contents: dict[str, bytes] | None = None) -> Verdict:
    indicators, findings = detect_indicators(tree, contents)
    findings = list(tree.findings) + findings
    for rule in INDICATOR_RULES:
        present, absent = _CODES[rule.kind]
        mine = [i for i in indicators if i.kind is rule.kind]
        good = [i for i in mine if i.well_formed]
        if good:
            findings += [Finding(present, f"{rule.kind.value}: {i.path}", context=i.path) for i in good]
        elif mine:
            i = mine[0]
            if rule.kind is IndicatorKind.README:
                findings.append(Finding("README_EMPTY", f"{i.path} is empty", context=i.path))
            elif rule.kind is IndicatorKind.LICENSE:
                findings.append(Finding("LICENSE_EMPTY", f"{i.path} is empty", context=i.path))
            elif rule.kind is IndicatorKind.CITATION_METADATA:
                findings.append(Finding("CITATION_MALFORMED", f"{i.path}: {i.note}", context=i.path))
        else:
            pats = ", ".join(rule.patterns)
            findings.append(Finding(absent, f"no {rule.kind.value} indicator ({pats})"))
    failed = any(f.severity is Severity.BLOCKER for f in findings)
    return Verdict(Status.FAIL if failed else Status.PASS, findings)
