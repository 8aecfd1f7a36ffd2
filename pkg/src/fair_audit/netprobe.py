"""Findability (HEAD resolution) and accessibility (GET retrieval) over HTTP(S)."""

from __future__ import annotations

import gzip
import hashlib
import logging
import lzma
import os
import posixpath
import shutil
import tarfile
import tempfile
import zipfile
import zlib
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path
from urllib.parse import unquote, urljoin, urlsplit

import requests
from filelock import FileLock

from fair_audit import __version__
from fair_audit.core import (
    ArtifactMetadata,
    CheckId,
    Finding,
    Location,
    Severity,
    Status,
    Verdict,
    fitness_function,
    utcnow,
)
from fair_audit.repo import DEFAULT_REFS, HostMapping, ProviderKind, archive_url, classify_provider

logger = logging.getLogger(__name__)

DOI_RESOLVER = "https://doi.org/"
_REDIRECT_CODES = {301, 302, 303, 307, 308}
_CHUNK = 64 * 1024


@dataclass(frozen=True)
class ProbePolicy:
    timeout: float = 10.0
    max_redirects: int = 10
    user_agent: str = f"fair-audit/{__version__} (+research-software FAIR checks)"
    head_fallback_to_get: bool = True
    doi_resolver: str = DOI_RESOLVER

    def __post_init__(self) -> None:
        if not self.timeout > 0:
            raise ValueError("timeout must be positive")
        if self.max_redirects < 0:
            raise ValueError("max_redirects must be >= 0")


class ProbeKind(str, Enum):
    RESPONSE = "response"
    TOO_MANY_REDIRECTS = "too_many_redirects"
    TIMEOUT = "timeout"
    TRANSPORT_ERROR = "transport_error"


@dataclass(frozen=True)
class ProbeResult:
    kind: ProbeKind
    final_uri: str
    final_status: int | None = None
    redirect_chain: tuple[str, ...] = ()
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.kind is ProbeKind.RESPONSE and 200 <= (self.final_status or 0) < 300

    def describe(self) -> str:
        if self.kind is ProbeKind.RESPONSE:
            return f"HTTP {self.final_status}"
        if self.kind is ProbeKind.TOO_MANY_REDIRECTS:
            return f"more than {len(self.redirect_chain)} redirects"
        return f"{self.kind.value}: {self.error}"


def _session(policy: ProbePolicy) -> requests.Session:
    s = requests.Session()
    s.headers["User-Agent"] = policy.user_agent
    s.trust_env = False
    return s


def _follow(
    session: requests.Session, method: str, uri: str, policy: ProbePolicy
) -> tuple[ProbeResult, requests.Response | None]:
    """Issue ``method`` and follow redirects by hand so the chain is observable.

    On a final response the caller owns (and must close) the returned response.
    """
    chain: list[str] = []
    current = uri
    while True:
        try:
            resp = session.request(method, current, allow_redirects=False, timeout=policy.timeout, stream=True)
        except requests.Timeout as exc:
            return ProbeResult(ProbeKind.TIMEOUT, current, None, tuple(chain), str(exc)), None
        except (requests.RequestException, ValueError) as exc:
            return ProbeResult(ProbeKind.TRANSPORT_ERROR, current, None, tuple(chain), f"{type(exc).__name__}: {exc}"), None
        if resp.status_code in _REDIRECT_CODES and "Location" in resp.headers:
            resp.close()
            if len(chain) >= policy.max_redirects:
                return ProbeResult(ProbeKind.TOO_MANY_REDIRECTS, current, resp.status_code, tuple(chain)), None
            current = urljoin(current, resp.headers["Location"])
            chain.append(current)
            if resp.status_code == 303 and method != "HEAD":
                method = "GET"
            continue
        return ProbeResult(ProbeKind.RESPONSE, current, resp.status_code, tuple(chain)), resp


def probe_uri(
    uri: str, method: str = "HEAD", policy: ProbePolicy = ProbePolicy(), session: requests.Session | None = None
) -> ProbeResult:
    """Probe one URI without reading any body. Transport failures come back as results."""
    parts = urlsplit(uri)
    if not parts.scheme or not parts.netloc:
        raise ValueError(f"not an absolute URI: {uri!r}")
    method = method.upper()
    if method not in ("HEAD", "GET"):
        raise ValueError(f"unsupported method {method!r}")
    own = session is None
    session = session or _session(policy)
    try:
        result, resp = _follow(session, method, uri, policy)
        if resp is not None:
            resp.close()
        return result
    finally:
        if own:
            session.close()


def expand_doi(identifier: str, resolver: str = DOI_RESOLVER) -> str:
    doi = identifier.strip()
    for prefix in ("https://doi.org/", "http://doi.org/", "https://dx.doi.org/", "doi:"):
        if doi.lower().startswith(prefix):
            doi = doi[len(prefix):]
            break
    return resolver.rstrip("/") + "/" + doi


def _is_absolute_http(uri: str) -> bool:
    try:
        parts = urlsplit(uri)
        return parts.scheme in ("http", "https") and bool(parts.hostname)
    except ValueError:
        return False


def _findability_precondition(metadata, policy=None, hosts=None, session=None) -> str | None:
    if not isinstance(metadata, ArtifactMetadata):
        return "input metadata is null"
    problems = metadata.problems()
    if problems:
        return "; ".join(problems)
    if policy is not None and not isinstance(policy, ProbePolicy):
        return "probe policy is invalid"
    return None


@fitness_function(
    CheckId.FINDABILITY,
    _findability_precondition,
    "Resolve the artifact's candidate URIs (and DOI) with HTTP HEAD; the first 2xx becomes its Location.",
)
def resolve_findability(
    metadata: ArtifactMetadata,
    policy: ProbePolicy | None = None,
    hosts: dict[str, HostMapping] | None = None,
    session: requests.Session | None = None,
) -> Verdict:
    policy = policy or ProbePolicy()
    candidates = [(c.strip(), c) for c in metadata.candidate_locations]
    findings: list[Finding] = []
    if metadata.identifier and metadata.identifier.strip():
        doi_uri = expand_doi(metadata.identifier, policy.doi_resolver)
        if doi_uri not in [c for c, _ in candidates]:
            candidates.append((doi_uri, metadata.identifier))
            findings.append(Finding("DOI_EXPANDED", f"{metadata.identifier} -> {doi_uri}", context=doi_uri))

    dead: list[Finding] = []
    own = session is None
    session = session or _session(policy)
    try:
        for uri, origin in candidates:
            if not _is_absolute_http(uri):
                dead.append(Finding("LINK_ROT", f"{uri}: not an absolute http(s) URI", context=uri))
                continue
            result = probe_uri(uri, "HEAD", policy, session)
            if result.kind is ProbeKind.RESPONSE and result.final_status in (405, 501) and policy.head_fallback_to_get:
                findings.append(Finding("HEAD_FALLBACK", f"HEAD answered {result.final_status}; retried with GET", context=uri))
                result = probe_uri(uri, "GET", policy, session)
            if result.ok:
                kind, _ = classify_provider(uri, hosts)
                location = Location(uri=uri, resolved_from=origin, provider_hint=kind.value)
                findings += [_demote(f) for f in dead]
                findings.append(Finding("LOCATION_RESOLVED", f"{uri} answered HTTP {result.final_status}", context=uri))
                return Verdict(Status.PASS, findings, location)
            dead.append(Finding("LINK_ROT", f"{uri}: {result.describe()}", context=uri))
    finally:
        if own:
            session.close()
    return Verdict(Status.FAIL, findings + dead)


def _demote(f: Finding) -> Finding:
    # A dead candidate is not blocking once another candidate resolved.
    return Finding(f.code, f.message, Severity.WARNING, f.context) if f.severity is Severity.BLOCKER else f


class Form(str, Enum):
    ARCHIVE_EXTRACTED = "archive_extracted"
    SINGLE_FILE = "single_file"


@dataclass(frozen=True)
class RetrievedArtifact:
    root_path: Path
    byte_size: int
    content_hash: str
    source: Location
    retrieved_at: datetime
    form: Form
    payload_path: Path | None = None

    def verify(self) -> bool:
        """Recompute the digest of the stored payload."""
        return _sha256_file(self.payload_path) == self.content_hash


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(_CHUNK), b""):
            h.update(chunk)
    return h.hexdigest()


class _Corrupted(Exception):
    pass


def _safe_name(name: str) -> str:
    name = unquote(name).replace("\\", "/").split("/")[-1]
    if name in ("", ".", ".."):
        raise ValueError(f"cannot derive a local name from {name!r}")
    return name


def _failure(result: ProbeResult, url: str) -> Finding:
    if result.kind is ProbeKind.TIMEOUT:
        return Finding("TIMEOUT", f"{url}: timed out after {result.error}", context=url)
    if result.kind is ProbeKind.TOO_MANY_REDIRECTS:
        return Finding("TOO_MANY_REDIRECTS", f"{url}: {result.describe()}", context=url)
    if result.kind is ProbeKind.TRANSPORT_ERROR:
        return Finding("UNREACHABLE", f"{url}: {result.error}", context=url)
    status = result.final_status
    if status in (401, 403):
        return Finding("AUTH_WALL", f"{url}: HTTP {status} (authentication required)", context=url)
    if status in (404, 410):
        return Finding("GONE", f"{url}: HTTP {status}", context=url)
    return Finding("HTTP_ERROR", f"{url}: HTTP {status}", context=url)


def _download(session, url: str, policy: ProbePolicy, dest: Path) -> tuple[ProbeResult, Finding | None, str, int]:
    """Stream ``url`` into ``dest``; returns (probe, failure finding or None, sha256, size)."""
    result, resp = _follow(session, "GET", url, policy)
    if resp is None or not result.ok:
        if resp is not None:
            resp.close()
        return result, _failure(result, url), "", 0
    h = hashlib.sha256()
    size = 0
    try:
        with resp, open(dest, "wb") as out:
            for chunk in resp.iter_content(_CHUNK):
                h.update(chunk)
                size += len(chunk)
                out.write(chunk)
    except requests.Timeout as exc:
        return result, Finding("TIMEOUT", f"{url}: timed out mid-transfer ({exc})", context=url), "", 0
    except requests.RequestException as exc:
        return result, Finding("UNREACHABLE", f"{url}: transfer aborted ({type(exc).__name__})", context=url), "", 0
    if size == 0:
        return result, Finding("EMPTY_PAYLOAD", f"{url}: empty response body", context=url), "", 0
    return result, None, h.hexdigest(), size


def _member_paths(names: list[str]) -> tuple[list[str | None], int]:
    """Normalize archive member names; drop a shared top-level directory.

    Returns per-member relative paths (None = unsafe or empty) and how many
    leading components were stripped.
    """
    norm = []
    for n in names:
        p = posixpath.normpath(n.replace("\\", "/").lstrip("/"))
        norm.append(None if p in (".", "") or p == ".." or p.startswith("../") else p)
    firsts = {p.split("/")[0] for p in norm if p}
    strip = 1 if len(firsts) == 1 and any(p and "/" in p for p in norm) else 0
    out: list[str | None] = []
    for p in norm:
        if p is None:
            out.append(None)
            continue
        parts = p.split("/")[strip:]
        out.append("/".join(parts) if parts else None)
    return out, strip


def _extract(payload: Path, dest: Path) -> None:
    """Extract a tar (any compression) or zip archive safely into ``dest``.

    Links, devices and paths escaping ``dest`` are not materialized.
    """
    try:
        if zipfile.is_zipfile(payload):
            with zipfile.ZipFile(payload) as zf:
                infos = zf.infolist()
                rels, _ = _member_paths([i.filename for i in infos])
                for info, rel in zip(infos, rels):
                    if rel is None:
                        continue
                    target = dest / rel
                    if info.is_dir():
                        target.mkdir(parents=True, exist_ok=True)
                        continue
                    target.parent.mkdir(parents=True, exist_ok=True)
                    with zf.open(info) as src, open(target, "wb") as dst:
                        shutil.copyfileobj(src, dst)
            return
        with tarfile.open(payload, "r:*") as tf:
            members = tf.getmembers()
            rels, _ = _member_paths([m.name for m in members])
            for member, rel in zip(members, rels):
                if rel is None:
                    continue
                target = dest / rel
                if member.isdir():
                    target.mkdir(parents=True, exist_ok=True)
                elif member.isfile():
                    target.parent.mkdir(parents=True, exist_ok=True)
                    src = tf.extractfile(member)
                    with src, open(target, "wb") as dst:
                        shutil.copyfileobj(src, dst)
    except (tarfile.TarError, zipfile.BadZipFile, EOFError, zlib.error, gzip.BadGzipFile, lzma.LZMAError) as exc:
        raise _Corrupted(f"{type(exc).__name__}: {exc}") from None


def _replace_dir(src: Path, dst: Path) -> None:
    if dst.is_symlink() or dst.is_file():
        dst.unlink()
    elif dst.exists():
        shutil.rmtree(dst)
    os.replace(src, dst)


def _ensure_writable(directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(dir=directory, prefix=".probe-"):
        pass


def _fetch_precondition(location, download_dir, policy=None, hosts=None, session=None) -> str | None:
    if not isinstance(location, Location):
        return "input location is null"
    if download_dir is None or str(download_dir).strip() == "":
        return "download directory is null"
    return None


@fitness_function(
    CheckId.ACCESSIBILITY,
    _fetch_precondition,
    "GET the resolved Location (provider source archive for hosted repositories) and store it locally; "
    "discriminate auth walls, missing resources, corruption and timeouts.",
)
def fetch_artifact(
    location: Location,
    download_dir: str | Path,
    policy: ProbePolicy | None = None,
    hosts: dict[str, HostMapping] | None = None,
    session: requests.Session | None = None,
) -> Verdict:
    policy = policy or ProbePolicy()
    download_dir = Path(download_dir)
    _ensure_writable(download_dir)
    kind, coords = classify_provider(location.uri, hosts)
    own = session is None
    session = session or _session(policy)
    try:
        if kind is not ProviderKind.GENERIC and coords is not None:
            return _fetch_repository(session, location, kind, coords, download_dir, policy)
        return _fetch_single(session, location, download_dir, policy)
    finally:
        if own:
            session.close()


def _fetch_repository(session, location, kind, coords, download_dir: Path, policy) -> Verdict:
    name = _safe_name(coords.name)
    findings: list[Finding] = []
    payload_dir = download_dir / ".payloads"
    payload_dir.mkdir(exist_ok=True)
    with FileLock(str(download_dir / f".{name}.lock")):
        tmp_payload = payload_dir / f".{name}.partial"
        failure = None
        for i, ref in enumerate(DEFAULT_REFS):
            url = archive_url(kind, coords, ref)
            result, failure, digest, size = _download(session, url, policy, tmp_payload)
            if failure is None:
                if i > 0:
                    findings.append(Finding("BRANCH_FALLBACK", f"branch {DEFAULT_REFS[0]!r} not found; used {ref!r}", context=url))
                break
            # only a missing branch justifies trying the next ref
            if failure.code != "GONE":
                break
        if failure is not None:
            tmp_payload.unlink(missing_ok=True)
            return Verdict(Status.FAIL, findings + [failure])

        payload = payload_dir / f"{name}.archive"
        os.replace(tmp_payload, payload)
        staging = Path(tempfile.mkdtemp(prefix=f".{name}-", dir=download_dir))
        try:
            try:
                _extract(payload, staging)
            except _Corrupted as exc:
                return Verdict(Status.FAIL, findings + [Finding("CORRUPTED", f"{url}: {exc}", context=url)])
            if not any(staging.iterdir()):
                return Verdict(Status.FAIL, findings + [Finding("CORRUPTED", f"{url}: archive extracted to nothing", context=url)])
            final = download_dir / name
            _replace_dir(staging, final)
        finally:
            if staging.exists():
                shutil.rmtree(staging, ignore_errors=True)
    artifact = RetrievedArtifact(final, size, digest, location, utcnow(), Form.ARCHIVE_EXTRACTED, payload)
    findings.append(Finding("ARTIFACT_RETRIEVED", f"{size} bytes from {url} extracted to {final}", context=str(final)))
    return Verdict(Status.PASS, findings, artifact)


def _fetch_single(session, location, download_dir: Path, policy) -> Verdict:
    parts = urlsplit(location.uri)
    segment = [s for s in parts.path.split("/") if s]
    filename = _safe_name(segment[-1]) if segment else _safe_name(parts.hostname or "download")
    dirname = filename.split(".")[0] or filename
    with FileLock(str(download_dir / f".{dirname}.lock")):
        staging = Path(tempfile.mkdtemp(prefix=f".{dirname}-", dir=download_dir))
        try:
            _, failure, digest, size = _download(session, location.uri, policy, staging / filename)
            if failure is not None:
                return Verdict(Status.FAIL, [failure])
            final = download_dir / dirname
            _replace_dir(staging, final)
        finally:
            if staging.exists():
                shutil.rmtree(staging, ignore_errors=True)
    payload = final / filename
    artifact = RetrievedArtifact(final, size, digest, location, utcnow(), Form.SINGLE_FILE, payload)
    finding = Finding("ARTIFACT_RETRIEVED", f"{size} bytes from {location.uri} stored as {payload}", context=str(payload))
    return Verdict(Status.PASS, [finding], artifact)
