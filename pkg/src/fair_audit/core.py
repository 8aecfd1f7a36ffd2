"""Outcome model shared by the four FAIR checks, plus the guard they run under."""

from __future__ import annotations

import functools
import inspect
import time
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any
from urllib.parse import urlsplit


class CheckId(str, Enum):
    FINDABILITY = "findability"
    ACCESSIBILITY = "accessibility"
    INTEROPERABILITY = "interoperability"
    REUSABILITY = "reusability"

    @property
    def order(self) -> int:
        return _FAIR_ORDER.index(self)


_FAIR_ORDER = list(CheckId)


class Status(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    ERROR = "error"
    # Check deliberately not run (offline / local target); ignored by aggregation.
    SKIPPED = "skipped"


class Severity(str, Enum):
    INFO = "info"
    WARNING = "warning"
    BLOCKER = "blocker"


# code -> (default severity, meaning). Closed: Finding() rejects anything else.
FINDING_CATALOG: dict[str, tuple[Severity, str]] = {
    # guard / pipeline
    "PRECONDITION_VIOLATED": (Severity.BLOCKER, "Check input was null, empty or malformed; the check body did not run."),
    "INTERNAL_FAULT": (Severity.BLOCKER, "Unexpected exception inside the check."),
    "IO_FAULT": (Severity.BLOCKER, "Local filesystem could not be read or written."),
    "UPSTREAM_UNAVAILABLE": (Severity.BLOCKER, "A check this one depends on did not pass, so there was nothing to inspect."),
    "SKIPPED_OFFLINE": (Severity.INFO, "Network check skipped because the run is offline."),
    "SKIPPED_LOCAL_TARGET": (Severity.INFO, "Network check skipped because the target is a local directory."),
    "NO_ENVIRONMENT": (Severity.BLOCKER, "No environment manifest supplied and none could be captured."),
    # findability
    "LOCATION_RESOLVED": (Severity.INFO, "Candidate location answered with a 2xx status."),
    "LINK_ROT": (Severity.BLOCKER, "Candidate location did not resolve (final status, transport error or unsupported scheme recorded). Warning when another candidate resolved."),
    "HEAD_FALLBACK": (Severity.INFO, "Server rejected HEAD (405/501); retried with a body-less GET."),
    "DOI_EXPANDED": (Severity.INFO, "DOI identifier expanded to a resolver URI and probed last."),
    # accessibility
    "ARTIFACT_RETRIEVED": (Severity.INFO, "Artifact downloaded and stored locally."),
    "AUTH_WALL": (Severity.BLOCKER, "Server demanded authentication (401/403)."),
    "GONE": (Severity.BLOCKER, "Server reported the resource missing (404/410)."),
    "CORRUPTED": (Severity.BLOCKER, "Archive could not be opened or extracted, or extracted to nothing."),
    "TIMEOUT": (Severity.BLOCKER, "Request exceeded the probe timeout."),
    "TOO_MANY_REDIRECTS": (Severity.BLOCKER, "Redirect chain exceeded the configured limit."),
    "UNREACHABLE": (Severity.BLOCKER, "Transport failure (DNS, TLS, refused connection)."),
    "HTTP_ERROR": (Severity.BLOCKER, "Server answered with another non-2xx status."),
    "EMPTY_PAYLOAD": (Severity.BLOCKER, "Server answered 2xx with a zero-byte body."),
    "BRANCH_FALLBACK": (Severity.INFO, "Default branch 'main' not found; fell back to 'master'."),
    # tree enumeration
    "UNREADABLE_ENTRY": (Severity.WARNING, "A tree entry could not be inspected."),
    # interoperability
    "DIRECTIVE_SKIPPED": (Severity.WARNING, "Option/include/editable line in the manifest was not evaluated."),
    "UNPARSEABLE_REQUIREMENT": (Severity.WARNING, "Manifest line outside the supported requirement grammar."),
    "MANIFEST_ENCODING": (Severity.BLOCKER, "Dependency manifest is not valid UTF-8."),
    "NO_DEPENDENCY_MANIFEST": (Severity.BLOCKER, "No requirements.txt at the repository root."),
    "BUILD_METADATA_FOUND": (Severity.INFO, "Build metadata file present at the repository root."),
    "NO_BUILD_METADATA": (Severity.WARNING, "Neither setup.py nor pyproject.toml present."),
    "CI_INVOKES_INTERPRETER": (Severity.INFO, "CI workflow invokes the Python interpreter."),
    "CI_PRESENT_NO_INTERPRETER": (Severity.INFO, "CI workflow present but never invokes the interpreter."),
    "NO_CI_WORKFLOW": (Severity.WARNING, "No CI workflow files found."),
    "NO_INTERPRETER_CONSTRAINT": (Severity.INFO, "Repository declares no interpreter version requirement."),
    "INTERPRETER_COMPATIBLE": (Severity.INFO, "Environment interpreter satisfies the declared requirement."),
    "INTERPRETER_INCOMPATIBLE": (Severity.BLOCKER, "Environment interpreter violates the declared requirement."),
    "INTERPRETER_CONSTRAINT_UNPARSEABLE": (Severity.WARNING, "Declared interpreter requirement is outside the supported grammar; ignored."),
    "DEP_OK": (Severity.INFO, "Requirement satisfied by the environment."),
    "DEP_MISSING": (Severity.BLOCKER, "Required package absent from the environment."),
    "DEP_VERSION_CONFLICT": (Severity.BLOCKER, "Installed version violates the requirement's constraints."),
    # reusability
    "README_FOUND": (Severity.INFO, "README.md present and non-empty."),
    "MISSING_README": (Severity.BLOCKER, "No README.md at the repository root."),
    "README_EMPTY": (Severity.BLOCKER, "README.md is empty or whitespace only."),
    "LICENSE_FOUND": (Severity.INFO, "License file present and non-empty."),
    "MISSING_LICENSE": (Severity.BLOCKER, "No license file at the repository root."),
    "LICENSE_EMPTY": (Severity.BLOCKER, "License file is empty."),
    "CONTAINER_SPEC_FOUND": (Severity.INFO, "Dockerfile present."),
    "NO_CONTAINER_SPEC": (Severity.WARNING, "No Dockerfile."),
    "ENV_SPEC_FOUND": (Severity.INFO, "Conda environment file present."),
    "NO_ENV_SPEC": (Severity.WARNING, "No environment.yml / environment.yaml."),
    "NOTEBOOK_FOUND": (Severity.INFO, "Computational notebook present."),
    "NO_NOTEBOOK": (Severity.WARNING, "No .ipynb notebooks."),
    "WORKFLOW_FOUND": (Severity.INFO, "Automated workflow present."),
    "NO_WORKFLOW": (Severity.WARNING, "No .github/workflows/*.yml|*.yaml."),
    "CITATION_FOUND": (Severity.INFO, "CITATION.cff present with a cff-version key."),
    "CITATION_MALFORMED": (Severity.WARNING, "CITATION.cff present but lacks a cff-version key."),
    "NO_CITATION_METADATA": (Severity.WARNING, "No CITATION.cff."),
    "UNREADABLE_FILE": (Severity.WARNING, "File could not be read."),
}


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    """RFC 3339 UTC with microseconds, e.g. ``2026-01-02T03:04:05.000006Z``."""
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def parse_timestamp(text: str) -> datetime:
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%S.%fZ").replace(tzinfo=timezone.utc)


@dataclass(frozen=True)
class Finding:
    code: str
    message: str
    severity: Severity | None = None
    context: str | None = None

    def __post_init__(self) -> None:
        if self.code not in FINDING_CATALOG:
            raise ValueError(f"unknown finding code {self.code!r}")
        if not self.message:
            raise ValueError("finding message must be non-empty")
        if self.severity is None:
            object.__setattr__(self, "severity", FINDING_CATALOG[self.code][0])
        else:
            object.__setattr__(self, "severity", Severity(self.severity))


@dataclass(frozen=True)
class ArtifactMetadata:
    candidate_locations: tuple[str, ...] = ()
    identifier: str | None = None
    display_name: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "candidate_locations", tuple(self.candidate_locations))

    def problems(self) -> list[str]:
        out = []
        if not self.candidate_locations and not (self.identifier and self.identifier.strip()):
            out.append("metadata has neither candidate locations nor an identifier")
        for i, loc in enumerate(self.candidate_locations):
            if not isinstance(loc, str) or not loc.strip():
                out.append(f"candidate location #{i} is empty")
        return out


@dataclass(frozen=True)
class Location:
    uri: str
    resolved_from: str
    provider_hint: str | None = None

    def __post_init__(self) -> None:
        parts = urlsplit(self.uri)
        if parts.scheme not in ("http", "https") or not parts.hostname:
            raise ValueError(f"not an absolute http(s) URI: {self.uri!r}")

    @property
    def scheme(self) -> str:
        return urlsplit(self.uri).scheme


@dataclass(frozen=True)
class Verdict:
    """What a check body hands back to the guard."""

    status: Status
    findings: list[Finding] = field(default_factory=list)
    payload: Any = None


@dataclass(frozen=True)
class CheckOutcome:
    check: CheckId
    status: Status
    findings: tuple[Finding, ...]
    started_at: datetime
    duration_ms: float
    payload: Any = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "findings", tuple(self.findings))
        if self.status is Status.PASS and any(f.severity is Severity.BLOCKER for f in self.findings):
            raise ValueError("a passing outcome cannot carry blocker findings")

    def codes(self) -> list[str]:
        return [f.code for f in self.findings]

    def has(self, code: str) -> bool:
        return code in self.codes()


def skipped(check: CheckId, code: str, message: str) -> CheckOutcome:
    return CheckOutcome(check, Status.SKIPPED, (Finding(code, message),), utcnow(), 0.0)


def upstream_unavailable(check: CheckId, upstream: CheckId) -> CheckOutcome:
    msg = f"{upstream.value} did not pass; nothing to inspect"
    return CheckOutcome(check, Status.FAIL, (Finding("UPSTREAM_UNAVAILABLE", msg),), utcnow(), 0.0)


@dataclass(frozen=True)
class _Registered:
    check: CheckId
    func: Callable[..., CheckOutcome]
    description: str
    inputs: tuple[str, ...]


_REGISTRY: dict[CheckId, _Registered] = {}


def fitness_function(check: CheckId, precondition: Callable[..., str | None], description: str):
    """Wrap a check body: enforce its precondition, time it, map faults to Error.

    The body returns a :class:`Verdict`; callers receive a :class:`CheckOutcome`.
    """

    def decorate(body: Callable[..., Verdict]) -> Callable[..., CheckOutcome]:
        sig = inspect.signature(body)

        @functools.wraps(body)
        def guarded(*args, **kwargs) -> CheckOutcome:
            started = utcnow()
            t0 = time.perf_counter()

            def done(verdict: Verdict) -> CheckOutcome:
                ms = round((time.perf_counter() - t0) * 1000.0, 3)
                return CheckOutcome(check, verdict.status, tuple(verdict.findings), started, ms, verdict.payload)

            try:
                bound = sig.bind(*args, **kwargs)
            except TypeError as exc:
                return done(Verdict(Status.ERROR, [Finding("PRECONDITION_VIOLATED", str(exc))]))
            bound.apply_defaults()
            problem = precondition(**bound.arguments)
            if problem:
                return done(Verdict(Status.ERROR, [Finding("PRECONDITION_VIOLATED", problem)]))
            try:
                verdict = body(*bound.args, **bound.kwargs)
            except OSError as exc:
                return done(Verdict(Status.ERROR, [Finding("IO_FAULT", f"{type(exc).__name__}: {exc}")]))
            except Exception as exc:  # noqa: BLE001 - any escape is a tool fault, not an artifact defect
                return done(Verdict(Status.ERROR, [Finding("INTERNAL_FAULT", f"{type(exc).__name__}: {exc}")]))
            if verdict.status is Status.PASS and any(f.severity is Severity.BLOCKER for f in verdict.findings):
                verdict = Verdict(Status.FAIL, verdict.findings, None)
            return done(verdict)

        required = tuple(
            name for name, p in sig.parameters.items() if p.default is inspect.Parameter.empty
        )
        _REGISTRY[check] = _Registered(check, guarded, description, required)
        return guarded

    return decorate


def _ensure_registered() -> None:
    # Importing the check modules populates the registry.
    from fair_audit import interop, netprobe, reuse  # noqa: F401


def run_check(check: CheckId | str, inputs: Mapping[str, Any] | None) -> CheckOutcome:
    """Run one check by id over a keyword bundle of its inputs."""
    _ensure_registered()
    check = CheckId(check)
    entry = _REGISTRY[check]
    if inputs is None:
        started = utcnow()
        return CheckOutcome(
            check, Status.ERROR, (Finding("PRECONDITION_VIOLATED", "no input bundle supplied"),), started, 0.0
        )
    return entry.func(**dict(inputs))


def check_catalog() -> list[tuple[CheckId, str, tuple[str, ...]]]:
    _ensure_registered()
    return [(c, _REGISTRY[c].description, _REGISTRY[c].inputs) for c in CheckId]
