"""Per-target aggregation, JSON/text rendering and CI exit codes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

from fair_audit import __version__
from fair_audit.core import (
    CheckId,
    CheckOutcome,
    Finding,
    Location,
    Severity,
    Status,
    format_timestamp,
    parse_timestamp,
    utcnow,
)
from fair_audit.netprobe import Form, RetrievedArtifact

SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class TargetRecord:
    target: str
    outcomes: tuple[CheckOutcome, ...]
    overall: Status


@dataclass(frozen=True)
class AuditReport:
    targets: tuple[TargetRecord, ...]
    generated_at: datetime = field(default_factory=utcnow)
    tool_version: str = __version__


def overall_status(outcomes) -> Status:
    statuses = {o.status for o in outcomes}
    if Status.ERROR in statuses:
        return Status.ERROR
    if Status.FAIL in statuses:
        return Status.FAIL
    return Status.PASS


def aggregate(target: str, outcomes) -> TargetRecord:
    outcomes = tuple(sorted(outcomes, key=lambda o: o.check.order))
    if not outcomes:
        raise ValueError(f"no outcomes to aggregate for {target!r}")
    return TargetRecord(target, outcomes, overall_status(outcomes))


def exit_code(report: AuditReport) -> int:
    overall = {t.overall for t in report.targets}
    if Status.ERROR in overall:
        return 2
    if Status.FAIL in overall:
        return 1
    return 0


# -- JSON ------------------------------------------------------------------


def _location_to_dict(loc: Location) -> dict:
    return {"uri": loc.uri, "scheme": loc.scheme, "resolved_from": loc.resolved_from, "provider_hint": loc.provider_hint}


def _location_from_dict(d: dict) -> Location:
    return Location(uri=d["uri"], resolved_from=d["resolved_from"], provider_hint=d.get("provider_hint"))


def _payload_to_dict(payload):
    if isinstance(payload, Location):
        return _location_to_dict(payload)
    if isinstance(payload, RetrievedArtifact):
        return {
            "root_path": str(payload.root_path),
            "byte_size": payload.byte_size,
            "content_hash": payload.content_hash,
            "source": _location_to_dict(payload.source),
            "retrieved_at": format_timestamp(payload.retrieved_at),
            "form": payload.form.value,
            "payload_path": str(payload.payload_path) if payload.payload_path else None,
        }
    raise TypeError(f"cannot serialize payload of type {type(payload).__name__}")


def _payload_from_dict(check: CheckId, d: dict):
    if check is CheckId.FINDABILITY:
        return _location_from_dict(d)
    if check is CheckId.ACCESSIBILITY:
        return RetrievedArtifact(
            root_path=Path(d["root_path"]),
            byte_size=d["byte_size"],
            content_hash=d["content_hash"],
            source=_location_from_dict(d["source"]),
            retrieved_at=parse_timestamp(d["retrieved_at"]),
            form=Form(d["form"]),
            payload_path=Path(d["payload_path"]) if d.get("payload_path") else None,
        )
    raise ValueError(f"{check.value} outcomes carry no payload")


def _finding_to_dict(f: Finding) -> dict:
    d = {"code": f.code, "severity": f.severity.value, "message": f.message}
    if f.context is not None:
        d["context"] = f.context
    return d


def _outcome_to_dict(o: CheckOutcome) -> dict:
    d = {
        "check": o.check.value,
        "status": o.status.value,
        "started_at": format_timestamp(o.started_at),
        "duration_ms": o.duration_ms,
    }
    if o.payload is not None:
        d["payload"] = _payload_to_dict(o.payload)
    d["findings"] = [_finding_to_dict(f) for f in o.findings]
    return d


def to_dict(report: AuditReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": report.tool_version,
        "generated_at": format_timestamp(report.generated_at),
        "targets": [
            {"target": t.target, "overall": t.overall.value, "checks": [_outcome_to_dict(o) for o in t.outcomes]}
            for t in report.targets
        ],
    }


def from_dict(doc: dict) -> AuditReport:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")
    targets = []
    for t in doc["targets"]:
        outcomes = []
        for c in t["checks"]:
            check = CheckId(c["check"])
            findings = tuple(
                Finding(f["code"], f["message"], Severity(f["severity"]), f.get("context")) for f in c["findings"]
            )
            payload = _payload_from_dict(check, c["payload"]) if "payload" in c else None
            outcomes.append(
                CheckOutcome(check, Status(c["status"]), findings, parse_timestamp(c["started_at"]), c["duration_ms"], payload)
            )
        targets.append(TargetRecord(t["target"], tuple(outcomes), Status(t["overall"])))
    return AuditReport(tuple(targets), parse_timestamp(doc["generated_at"]), doc["tool_version"])


def to_json(report: AuditReport) -> str:
    return json.dumps(to_dict(report), indent=2, ensure_ascii=False) + "\n"


def from_json(text: str | bytes) -> AuditReport:
    return from_dict(json.loads(text))


# -- text ------------------------------------------------------------------

_GLYPH = {Status.PASS: "✔", Status.FAIL: "✘", Status.ERROR: "!", Status.SKIPPED: "-"}
_SEVERITY_MARK = {Severity.INFO: "i", Severity.WARNING: "~", Severity.BLOCKER: "x"}


def to_text(report: AuditReport, verbose: bool = False) -> str:
    lines = [f"fair-audit {report.tool_version}  generated {format_timestamp(report.generated_at)}", ""]
    for t in report.targets:
        lines.append(f"{_GLYPH[t.overall]} {t.target}  [{t.overall.value.upper()}]")
        for o in t.outcomes:
            lines.append(f"    {_GLYPH[o.status]} {o.check.value:<17} {o.status.value:<8} {o.duration_ms:>9.1f} ms")
            shown = [f for f in o.findings if verbose or f.severity is not Severity.INFO or o.status is Status.SKIPPED]
            for f in shown:
                where = f"  ({f.context})" if f.context else ""
                lines.append(f"        [{_SEVERITY_MARK[f.severity]}] {f.code}: {f.message}{where}")
            hidden = len(o.findings) - len(shown)
            if hidden:
                lines.append(f"        ... {hidden} info finding(s); use --verbose")
        lines.append("")
    counts = {s: sum(1 for t in report.targets if t.overall is s) for s in (Status.PASS, Status.FAIL, Status.ERROR)}
    lines.append(
        f"{len(report.targets)} target(s): {counts[Status.PASS]} pass, {counts[Status.FAIL]} fail, {counts[Status.ERROR]} error"
    )
    return "\n".join(lines) + "\n"


def render(report: AuditReport, fmt: str = "text", verbose: bool = False) -> bytes:
    if fmt == "json":
        return to_json(report).encode("utf-8")
    if fmt == "text":
        return to_text(report, verbose).encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}")
