"""Run configuration and the per-target FAIR pipeline.

For each target: findability -> accessibility (consuming the Location) ->
tree enumeration -> interoperability and reusability over that tree.
"""

from __future__ import annotations

import json
import logging
import re
import shutil
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from fair_audit.core import (
    ArtifactMetadata,
    CheckId,
    CheckOutcome,
    Finding,
    Status,
    skipped,
    upstream_unavailable,
    utcnow,
)
from fair_audit.interop import EnvironmentManifest, ManifestError, interoperability, load_environment
from fair_audit.netprobe import ProbePolicy, _session, fetch_artifact, resolve_findability
from fair_audit.repo import HostMapping, ProviderKind, enumerate_tree
from fair_audit.report import AuditReport, aggregate
from fair_audit.reuse import scan_reusability
from fair_audit.versions import Version, parse_version

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

CONFIG_ENV_VAR = "FAIR_AUDIT_CONFIG"
DEFAULT_DOWNLOAD_DIR = "./fair-audit-artifacts"
MAX_CONCURRENCY = 64
MAX_TIMEOUT_S = 600
MAX_REDIRECTS = 50

_DOI_RE = re.compile(r"^(?:doi:)?10\.\d{4,9}/\S+$", re.IGNORECASE)
_SCHEME_RE = re.compile(r"^[a-zA-Z][a-zA-Z0-9+.-]*://")


class ConfigError(ValueError):
    """Configuration fault; the run aborts with exit code 2 before any target."""


class NoEnvironment(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    targets: tuple[str, ...]
    checks: tuple[CheckId, ...] = tuple(CheckId)
    env_manifest_path: Path | None = None
    download_dir: Path = Path(DEFAULT_DOWNLOAD_DIR)
    output: str = "text"
    timeout_s: float = 10
    max_redirects: int = 10
    concurrency: int = 1
    offline: bool = False
    verbose: bool = False
    python: str | None = None
    hosts: dict[str, HostMapping] = field(default_factory=dict)
    doi_resolver: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "checks", tuple(sorted({CheckId(c) for c in self.checks}, key=lambda c: c.order)))
        if not self.targets:
            raise ConfigError("at least one target is required")
        if not self.checks:
            raise ConfigError("at least one check must be selected")
        if self.output not in ("json", "text"):
            raise ConfigError(f"output must be json or text, not {self.output!r}")
        if not 0 < self.timeout_s <= MAX_TIMEOUT_S:
            raise ConfigError(f"timeout must be in (0, {MAX_TIMEOUT_S}]")
        if not 0 <= self.max_redirects <= MAX_REDIRECTS:
            raise ConfigError(f"max-redirects must be in [0, {MAX_REDIRECTS}]")
        if not 1 <= self.concurrency <= MAX_CONCURRENCY:
            raise ConfigError(f"concurrency must be in [1, {MAX_CONCURRENCY}]")
        if self.offline:
            remote = [t for t in self.targets if not is_local_target(t)]
            if remote:
                raise ConfigError(f"--offline requires local paths; got {remote[0]!r}")

    def policy(self) -> ProbePolicy:
        kwargs = {"timeout": float(self.timeout_s), "max_redirects": self.max_redirects}
        if self.doi_resolver:
            kwargs["doi_resolver"] = self.doi_resolver
        return ProbePolicy(**kwargs)


def is_local_target(target: str) -> bool:
    if _SCHEME_RE.match(target) or _DOI_RE.match(target):
        return False
    return True


def target_metadata(target: str) -> ArtifactMetadata:
    if _DOI_RE.match(target):
        return ArtifactMetadata(identifier=target, display_name=target)
    return ArtifactMetadata(candidate_locations=(target,), display_name=target)


def parse_checks(text: str) -> tuple[CheckId, ...]:
    out = []
    for part in text.split(","):
        part = part.strip().lower()
        if not part:
            continue
        try:
            out.append(CheckId(part))
        except ValueError:
            raise ConfigError(f"unknown check {part!r}; choose from {', '.join(c.value for c in CheckId)}") from None
    return tuple(out)


def read_targets_file(path: str | Path) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read targets file {path}: {exc.strerror}") from None
    targets = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            targets.append(line)
    return targets


def load_config_file(path: str | Path) -> dict:
    """Read a TOML config; returns RunConfig keyword arguments.

    Keys mirror the CLI flags (``timeout``, ``max_redirects``, ...). Extra
    hosts go in ``[providers."host[:port]"]`` tables with ``kind`` and an
    optional ``archive_template`` using {scheme} {host} {owner} {name} {ref}.
    """
    try:
        doc = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from None
    out: dict = {}
    simple = {
        "targets": "targets",
        "env_manifest": "env_manifest_path",
        "download_dir": "download_dir",
        "output": "output",
        "timeout": "timeout_s",
        "max_redirects": "max_redirects",
        "concurrency": "concurrency",
        "offline": "offline",
        "verbose": "verbose",
        "python": "python",
        "doi_resolver": "doi_resolver",
    }
    for key, value in doc.items():
        if key in simple:
            out[simple[key]] = value
        elif key == "checks":
            out["checks"] = parse_checks(",".join(value) if isinstance(value, list) else str(value))
        elif key == "targets_file":
            out.setdefault("targets", []).extend(read_targets_file(value))
        elif key == "providers":
            hosts = {}
            for host, spec in value.items():
                try:
                    kind = ProviderKind(spec["kind"])
                except (KeyError, ValueError, TypeError):
                    raise ConfigError(f"provider {host!r}: kind must be one of {[k.value for k in ProviderKind]}") from None
                hosts[host.lower()] = HostMapping(kind, spec.get("archive_template"))
            out["hosts"] = hosts
        else:
            raise ConfigError(f"unknown config key {key!r} in {path}")
    for key in ("env_manifest_path", "download_dir"):
        if key in out:
            out[key] = Path(out[key])
    return out


# The script runs inside the interpreter being described; keep it 3.8-compatible.
_CAPTURE_SCRIPT = """
import json, platform
try:
    from importlib import metadata
    pkgs = {}
    for d in metadata.distributions():
        name = d.metadata["Name"]
        if name:
            pkgs[name] = d.version
except Exception:
    pkgs = {}
print(json.dumps({"version": platform.python_version(), "packages": pkgs}))
"""

_LEADING_VERSION = re.compile(r"^v?\d+(?:\.\d+)*(?:(?:a|b|rc)\d+)?")


def _coerce_version(text: str) -> Version | None:
    # drop post/dev/local suffixes the manifest grammar cannot express
    m = _LEADING_VERSION.match(text.strip())
    return parse_version(m.group(0)) if m else None


def capture_environment(python: str | None = None, output: str | Path | None = None) -> EnvironmentManifest:
    """Query an interpreter for its version and installed distributions.

    Writes the manifest to ``output`` when given. Raises :class:`NoEnvironment`
    when no interpreter can be run.
    """
    from fair_audit.requirements import normalize_name

    exe = python or shutil.which("python3") or shutil.which("python")
    if not exe or not (Path(exe).exists() or shutil.which(exe)):
        raise NoEnvironment("no Python interpreter found; pass --env-manifest FILE instead")
    try:
        proc = subprocess.run([exe, "-c", _CAPTURE_SCRIPT], capture_output=True, text=True, timeout=60, check=True)
        doc = json.loads(proc.stdout)
        interpreter = parse_version(doc["version"])
    except (OSError, subprocess.SubprocessError, ValueError, KeyError) as exc:
        raise NoEnvironment(f"could not query interpreter {exe}: {exc}; pass --env-manifest FILE instead") from None
    packages = {}
    for name, ver in sorted(doc.get("packages", {}).items()):
        v = _coerce_version(str(ver))
        if v is None:
            logger.warning("skipping %s: unsupported version %r", name, ver)
            continue
        packages[normalize_name(name)] = v
    manifest = EnvironmentManifest(interpreter, packages)
    if output is not None:
        Path(output).write_text(manifest.render(), encoding="utf-8")
    return manifest


def resolve_environment(config: RunConfig) -> tuple[EnvironmentManifest | None, str | None]:
    """An explicit manifest wins over capture. Returns (manifest, reason-if-none)."""
    if config.env_manifest_path is not None:
        try:
            return load_environment(config.env_manifest_path), None
        except OSError as exc:
            raise ConfigError(f"cannot read environment manifest {config.env_manifest_path}: {exc.strerror}") from None
        except ManifestError as exc:
            raise ConfigError(f"invalid environment manifest {config.env_manifest_path}: {exc}") from None
    try:
        return capture_environment(config.python), None
    except NoEnvironment as exc:
        return None, str(exc)


def _no_environment(reason: str) -> CheckOutcome:
    return CheckOutcome(CheckId.INTEROPERABILITY, Status.ERROR, (Finding("NO_ENVIRONMENT", reason),), utcnow(), 0.0)


def audit_target(
    target: str,
    config: RunConfig,
    env: EnvironmentManifest | None,
    env_problem: str | None = None,
) -> list[CheckOutcome]:
    """Run the selected checks for one target, honoring the data flow between them."""
    wanted = set(config.checks)
    outcomes: dict[CheckId, CheckOutcome] = {}
    tree = None

    if is_local_target(target):
        code = "SKIPPED_OFFLINE" if config.offline else "SKIPPED_LOCAL_TARGET"
        for check in (CheckId.FINDABILITY, CheckId.ACCESSIBILITY):
            outcomes[check] = skipped(check, code, f"{check.value} not probed for local directory {target}")
        root = Path(target)
        if root.is_dir():
            tree = enumerate_tree(root)
    else:
        policy = config.policy()
        session = _session(policy)
        try:
            find = resolve_findability(target_metadata(target), policy, config.hosts, session)
            outcomes[CheckId.FINDABILITY] = find
            if wanted & {CheckId.ACCESSIBILITY, CheckId.INTEROPERABILITY, CheckId.REUSABILITY}:
                if find.status is Status.PASS:
                    access = fetch_artifact(find.payload, config.download_dir, policy, config.hosts, session)
                else:
                    access = upstream_unavailable(CheckId.ACCESSIBILITY, CheckId.FINDABILITY)
                outcomes[CheckId.ACCESSIBILITY] = access
                if access.status is Status.PASS:
                    tree = enumerate_tree(access.payload)
        finally:
            session.close()

    def no_tree(check: CheckId) -> CheckOutcome:
        if is_local_target(target):
            msg = f"local directory {target} does not exist"
            return CheckOutcome(check, Status.FAIL, (Finding("UPSTREAM_UNAVAILABLE", msg),), utcnow(), 0.0)
        return upstream_unavailable(check, CheckId.ACCESSIBILITY)

    if CheckId.INTEROPERABILITY in wanted:
        if env is None:
            outcomes[CheckId.INTEROPERABILITY] = _no_environment(env_problem or "no environment manifest")
        elif tree is None:
            outcomes[CheckId.INTEROPERABILITY] = no_tree(CheckId.INTEROPERABILITY)
        else:
            outcomes[CheckId.INTEROPERABILITY] = interoperability(tree, env)
    if CheckId.REUSABILITY in wanted:
        outcomes[CheckId.REUSABILITY] = no_tree(CheckId.REUSABILITY) if tree is None else scan_reusability(tree)
    return [outcomes[c] for c in config.checks]


def run_audit(config: RunConfig) -> AuditReport:
    env, env_problem = (None, None)
    if CheckId.INTEROPERABILITY in config.checks:
        env, env_problem = resolve_environment(config)
    if any(not is_local_target(t) for t in config.targets):
        try:
            config.download_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"download directory {config.download_dir} unusable: {exc.strerror}") from None

    def work(target: str):
        return aggregate(target, audit_target(target, config, env, env_problem))

    # map() yields in submission order, not completion order
    with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
        records = list(pool.map(work, config.targets))
    return AuditReport(tuple(records))
