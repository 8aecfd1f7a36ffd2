"""Interoperability: can the artifact's declared needs be met by a given environment?

Nothing is installed or executed. The environment is an explicit manifest
(interpreter version plus installed packages) and the artifact's
``requirements.txt`` is resolved against it.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from fair_audit.core import CheckId, Finding, Severity, Status, Verdict, fitness_function
from fair_audit.repo import RepoTree
from fair_audit.requirements import Requirement, normalize_name, parse_requirements
from fair_audit.versions import (
    Op,
    Version,
    VersionConstraint,
    VersionError,
    parse_constraints,
    parse_version,
    satisfies,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEPENDENCY_MANIFEST = "requirements.txt"
BUILD_METADATA_FILES = ("setup.py", "pyproject.toml")
PYTHON_VERSION_FILE = ".python-version"
CI_WORKFLOW_GLOBS = (".github/workflows/*.yml", ".github/workflows/*.yaml")

# A workflow "invokes the interpreter" if any of these match its text.
CI_INTERPRETER_PATTERNS = (
    r"\bpython(?:3(?:\.\d+)?)?\b",
    r"actions/setup-python\b",
)


class ManifestError(ValueError):
    """Malformed environment manifest."""


@dataclass(frozen=True)
class EnvironmentManifest:
    interpreter_version: Version
    packages: dict[str, Version] = field(default_factory=dict)

    def render(self) -> str:
        lines = [f"interpreter {self.interpreter_version}"]
        lines += [f"{name}=={ver}" for name, ver in sorted(self.packages.items())]
        return "\n".join(lines) + "\n"


def parse_environment(text: str) -> EnvironmentManifest:
    """Parse ``interpreter <version>`` followed by ``name==version`` lines."""
    interpreter = None
    packages: dict[str, Version] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if interpreter is None:
                keyword, _, ver = line.partition(" ")
                if keyword != "interpreter":
                    raise ManifestError(f"line {lineno}: expected 'interpreter <version>' first")
                interpreter = parse_version(ver.strip())
                continue
            name, sep, ver = line.partition("==")
            if not sep or not name.strip():
                raise ManifestError(f"line {lineno}: expected name==version, got {line!r}")
            packages[normalize_name(name.strip())] = parse_version(ver.strip())
        except VersionError as exc:
            raise ManifestError(f"line {lineno}: {exc}") from None
    if interpreter is None:
        raise ManifestError("environment manifest has no interpreter line")
    return EnvironmentManifest(interpreter, packages)


def load_environment(path: str | Path) -> EnvironmentManifest:
    return parse_environment(Path(path).read_text(encoding="utf-8"))


def detect_build_metadata(tree: RepoTree) -> list[Finding]:
    present = tree.root_files(BUILD_METADATA_FILES)
    if not present:
        return [Finding("NO_BUILD_METADATA", "no setup.py or pyproject.toml at repository root")]
    return [Finding("BUILD_METADATA_FOUND", f"{e.relative_path} present", context=e.relative_path) for e in present]


def scan_ci_workflows(
    tree: RepoTree, contents: dict[str, bytes] | None = None, patterns=CI_INTERPRETER_PATTERNS
) -> list[Finding]:
    """Classify each hosted-CI workflow by whether it calls the interpreter.

    ``contents`` maps relative paths to file bytes; missing paths are read
    from ``tree.root``.
    """
    workflows = sorted({e.relative_path for g in CI_WORKFLOW_GLOBS for e in tree.match(g)})
    if not workflows:
        return [Finding("NO_CI_WORKFLOW", "no .github/workflows/*.yml or *.yaml files")]
    compiled = [re.compile(p) for p in patterns]
    findings = []
    for path in workflows:
        try:
            data = contents[path] if contents and path in contents else tree.read_bytes(path)
        except OSError as exc:
            findings.append(Finding("UNREADABLE_FILE", f"cannot read workflow: {exc.strerror}", context=path))
            continue
        text = data.decode("utf-8", errors="replace")
        if any(rx.search(text) for rx in compiled):
            findings.append(Finding("CI_INVOKES_INTERPRETER", "workflow invokes the Python interpreter", context=path))
        else:
            findings.append(Finding("CI_PRESENT_NO_INTERPRETER", "workflow never invokes the Python interpreter", context=path))
    return findings


def _series_constraints(text: str) -> list[VersionConstraint]:
    # "3.10" in .python-version means any 3.10.x; "3.10.2" means exactly that series.
    v = parse_version(text)
    upper = v.release[:-1] + (v.release[-1] + 1,)
    return [VersionConstraint(Op.GE, v), VersionConstraint(Op.LT, Version(upper, None, ".".join(map(str, upper))))]


def detect_interpreter_requirement(tree: RepoTree) -> tuple[list[VersionConstraint] | None, list[Finding]]:
    """Interpreter constraints declared by the repository, if any.

    Sources in priority order: ``requires-python`` in pyproject.toml,
    ``python_requires`` in setup.py, then a root ``.python-version`` file.
    """
    findings: list[Finding] = []
    declared: list[tuple[str, str]] = []
    if tree.get("pyproject.toml"):
        try:
            doc = tomllib.loads(tree.read_bytes("pyproject.toml").decode("utf-8"))
            rp = doc.get("project", {}).get("requires-python")
            if isinstance(rp, str):
                declared.append(("pyproject.toml", rp))
        except (OSError, UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
            findings.append(Finding("UNREADABLE_FILE", f"cannot parse pyproject.toml: {exc}", context="pyproject.toml"))
    if tree.get("setup.py"):
        try:
            text = tree.read_bytes("setup.py").decode("utf-8", errors="replace")
            m = re.search(r"python_requires\s*=\s*['\"]([^'\"]+)['\"]", text)
            if m:
                declared.append(("setup.py", m.group(1)))
        except OSError as exc:
            findings.append(Finding("UNREADABLE_FILE", f"cannot read setup.py: {exc.strerror}", context="setup.py"))
    for source, spec in declared:
        try:
            return parse_constraints(spec), findings
        except VersionError:
            findings.append(
                Finding("INTERPRETER_CONSTRAINT_UNPARSEABLE", f"interpreter requirement {spec!r} not understood", context=source)
            )
    if tree.get(PYTHON_VERSION_FILE):
        try:
            first = tree.read_bytes(PYTHON_VERSION_FILE).decode("utf-8").strip().splitlines()
            if first:
                return _series_constraints(first[0].strip()), findings
        except (OSError, UnicodeDecodeError, VersionError) as exc:
            findings.append(
                Finding("INTERPRETER_CONSTRAINT_UNPARSEABLE", f"cannot use .python-version: {exc}", context=PYTHON_VERSION_FILE)
            )
    return None, findings


def check_interpreter_compat(
    required: list[VersionConstraint] | None, env: EnvironmentManifest
) -> tuple[bool, Finding]:
    if not required:
        return True, Finding("NO_INTERPRETER_CONSTRAINT", "repository declares no interpreter version requirement")
    spec = ",".join(str(c) for c in required)
    if all(satisfies(env.interpreter_version, c) for c in required):
        return True, Finding("INTERPRETER_COMPATIBLE", f"interpreter {env.interpreter_version} satisfies {spec}")
    return False, Finding("INTERPRETER_INCOMPATIBLE", f"interpreter {env.interpreter_version} violates {spec}")


def resolve_dependencies(reqs: list[Requirement], env: EnvironmentManifest) -> list[Finding]:
    findings = []
    for req in reqs:
        where = f"{req.source_line[0]}:{req.source_line[1]}" if req.source_line else None
        installed = env.packages.get(req.name)
        if installed is None:
            findings.append(Finding("DEP_MISSING", f"{req.name} is not installed", context=where))
            continue
        broken = [c for c in req.constraints if not satisfies(installed, c)]
        if broken:
            spec = ",".join(str(c) for c in broken)
            findings.append(Finding("DEP_VERSION_CONFLICT", f"{req.name} {installed} violates {spec}", context=where))
        else:
            findings.append(Finding("DEP_OK", f"{req.name} {installed} satisfies {req.render()}", context=where))
    return findings


def _precondition(tree, env) -> str | None:
    if not isinstance(tree, RepoTree):
        return "artifact is null"
    if not isinstance(env, EnvironmentManifest):
        return "environment is null"
    return None


@fitness_function(
    CheckId.INTEROPERABILITY,
    _precondition,
    "Resolve requirements.txt and the declared interpreter version against an environment manifest; "
    "report build metadata and CI workflows.",
)
def interoperability(tree: RepoTree, env: EnvironmentManifest) -> Verdict:
    findings: list[Finding] = list(tree.findings)
    findings += detect_build_metadata(tree)
    findings += scan_ci_workflows(tree)

    required, req_findings = detect_interpreter_requirement(tree)
    findings += req_findings
    _, compat = check_interpreter_compat(required, env)
    findings.append(compat)

    if not tree.root_files([DEPENDENCY_MANIFEST]):
        findings.append(Finding("NO_DEPENDENCY_MANIFEST", "no requirements.txt at repository root"))
    else:
        try:
            data = tree.read_bytes(DEPENDENCY_MANIFEST)
        except OSError as exc:
            findings.append(
                Finding("UNREADABLE_FILE", f"cannot read manifest: {exc.strerror}", Severity.BLOCKER, DEPENDENCY_MANIFEST)
            )
        else:
            reqs, parse_findings = parse_requirements(data, DEPENDENCY_MANIFEST)
            findings += parse_findings
            findings += resolve_dependencies(reqs, env)

    failed = any(f.severity is Severity.BLOCKER for f in findings)
    return Verdict(Status.FAIL if failed else Status.PASS, findings)
