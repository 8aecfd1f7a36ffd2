"""Automatable FAIR fitness functions for research-software repositories."""

__version__ = "0.1.0"

from fair_audit.core import (  # noqa: E402
    ArtifactMetadata,
    CheckId,
    CheckOutcome,
    Finding,
    Location,
    Severity,
    Status,
    check_catalog,
    run_check,
)
from fair_audit.interop import EnvironmentManifest, interoperability, load_environment, parse_environment  # noqa: E402
from fair_audit.netprobe import ProbePolicy, RetrievedArtifact, fetch_artifact, probe_uri, resolve_findability  # noqa: E402
from fair_audit.repo import ProviderKind, RepoTree, classify_provider, enumerate_tree  # noqa: E402
from fair_audit.reuse import indicator_table, scan_reusability  # noqa: E402

__all__ = [
    "ArtifactMetadata",
    "CheckId",
    "CheckOutcome",
    "EnvironmentManifest",
    "Finding",
    "Location",
    "ProbePolicy",
    "ProviderKind",
    "RepoTree",
    "RetrievedArtifact",
    "Severity",
    "Status",
    "check_catalog",
    "classify_provider",
    "enumerate_tree",
    "fetch_artifact",
    "indicator_table",
    "interoperability",
    "load_environment",
    "parse_environment",
    "probe_uri",
    "resolve_findability",
    "run_check",
    "scan_reusability",
]
