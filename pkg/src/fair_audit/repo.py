"""Git-host awareness and file-tree enumeration of retrieved artifacts."""

from __future__ import annotations

import fnmatch
import os
import posixpath
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from urllib.parse import urlsplit

from fair_audit.core import Finding


class ProviderKind(str, Enum):
    GITHUB = "github"
    GITLAB = "gitlab"
    BITBUCKET = "bitbucket"
    GENERIC = "generic"


# Placeholders: {scheme} {host} {owner} {name} {ref}
DEFAULT_ARCHIVE_TEMPLATES = {
    ProviderKind.GITHUB: "{scheme}://{host}/{owner}/{name}/archive/refs/heads/{ref}.tar.gz",
    ProviderKind.GITLAB: "{scheme}://{host}/{owner}/{name}/-/archive/{ref}/{name}-{ref}.tar.gz",
    ProviderKind.BITBUCKET: "{scheme}://{host}/{owner}/{name}/get/{ref}.tar.gz",
}

DEFAULT_REFS = ("main", "master")

_BUILTIN_HOSTS = {
    "github.com": ProviderKind.GITHUB,
    "www.github.com": ProviderKind.GITHUB,
    "gitlab.com": ProviderKind.GITLAB,
    "www.gitlab.com": ProviderKind.GITLAB,
    "bitbucket.org": ProviderKind.BITBUCKET,
    "www.bitbucket.org": ProviderKind.BITBUCKET,
}


class UnsupportedProvider(ValueError):
    pass


@dataclass(frozen=True)
class HostMapping:
    kind: ProviderKind
    archive_template: str | None = None


@dataclass(frozen=True)
class RepoCoords:
    owner: str
    name: str
    host: str
    scheme: str = "https"
    archive_template: str | None = None


def classify_provider(
    uri: str, hosts: dict[str, HostMapping] | None = None
) -> tuple[ProviderKind, RepoCoords | None]:
    """Map a URI to its hosting provider and ``owner/name`` coordinates.

    ``hosts`` adds institutional hosts (keyed by ``host`` or ``host:port``);
    unknown hosts fall back to ``generic``. Never raises.
    """
    try:
        parts = urlsplit(uri)
        netloc = parts.netloc.lower()
        hostname = (parts.hostname or "").lower()
    except ValueError:
        return ProviderKind.GENERIC, None
    mapping = None
    if hosts:
        mapping = hosts.get(netloc) or hosts.get(hostname)
    if mapping is None and hostname in _BUILTIN_HOSTS:
        mapping = HostMapping(_BUILTIN_HOSTS[hostname])
    if mapping is None or mapping.kind is ProviderKind.GENERIC:
        return ProviderKind.GENERIC, None
    segments = [s for s in parts.path.split("/") if s]
    if len(segments) < 2:
        return mapping.kind, None
    owner, name = segments[0], segments[1]
    if name.endswith(".git"):
        name = name[: -len(".git")]
    if not name:
        return mapping.kind, None
    return mapping.kind, RepoCoords(owner, name, netloc, parts.scheme or "https", mapping.archive_template)


def archive_url(kind: ProviderKind, coords: RepoCoords | None, ref: str) -> str:
    if kind is ProviderKind.GENERIC or coords is None:
        raise UnsupportedProvider("generic locations have no source-archive endpoint")
    template = coords.archive_template or DEFAULT_ARCHIVE_TEMPLATES[kind]
    return template.format(scheme=coords.scheme, host=coords.host, owner=coords.owner, name=coords.name, ref=ref)


@dataclass(frozen=True)
class TreeEntry:
    relative_path: str
    kind: str  # "file", "directory" or "symlink" (recorded, never followed)
    byte_size: int = 0


@dataclass
class RepoTree:
    root: Path
    entries: list[TreeEntry] = field(default_factory=list)
    findings: list[Finding] = field(default_factory=list)

    def paths(self, kind: str | None = None) -> list[str]:
        return [e.relative_path for e in self.entries if kind is None or e.kind == kind]

    def get(self, relative_path: str) -> TreeEntry | None:
        for e in self.entries:
            if e.relative_path == relative_path:
                return e
        return None

    def root_files(self, names, case_insensitive: bool = False) -> list[TreeEntry]:
        """Files directly under the root whose name is in ``names``, in ``names`` order."""
        top = {e.relative_path: e for e in self.entries if e.kind == "file" and "/" not in e.relative_path}
        if not case_insensitive:
            return [top[n] for n in names if n in top]
        found = []
        for n in names:
            found.extend(e for p, e in sorted(top.items()) if p.lower() == n.lower() and e not in found)
        return found

    def match(self, pattern: str, anywhere: bool = False) -> list[TreeEntry]:
        """Files matching a glob. ``anywhere`` matches the basename at any depth;
        otherwise the pattern's directory part must equal the file's directory."""
        out = []
        for e in self.entries:
            if e.kind != "file":
                continue
            d, base = posixpath.split(e.relative_path)
            if anywhere:
                ok = fnmatch.fnmatchcase(base, pattern)
            else:
                pd, pbase = posixpath.split(pattern)
                ok = d == pd and fnmatch.fnmatchcase(base, pbase)
            if ok:
                out.append(e)
        return out

    def read_bytes(self, relative_path: str) -> bytes:
        return (self.root / relative_path).read_bytes()


def enumerate_tree(artifact) -> RepoTree:
    """Walk a retrieved artifact (or a directory path) in lexicographic order.

    Directories precede their children. Symbolic links are listed but not
    followed; unreadable entries become warnings.
    """
    root = Path(getattr(artifact, "root_path", artifact))
    tree = RepoTree(root=root)
    seen: set[str] = set()

    def add(rel: str, kind: str, size: int) -> None:
        norm = posixpath.normpath(rel.replace(os.sep, "/"))
        if norm.startswith("../") or norm == ".." or norm.startswith("/") or norm == ".":
            tree.findings.append(Finding("UNREADABLE_ENTRY", f"path escapes the artifact root: {rel}", context=rel))
            return
        if norm in seen:
            return
        seen.add(norm)
        tree.entries.append(TreeEntry(norm, kind, size))

    def walk(directory: Path, prefix: str) -> None:
        try:
            children = sorted(os.scandir(directory), key=lambda d: d.name)
        except OSError as exc:
            tree.findings.append(Finding("UNREADABLE_ENTRY", f"cannot list directory: {exc.strerror}", context=prefix or "."))
            return
        for child in children:
            rel = f"{prefix}{child.name}"
            try:
                if child.is_symlink():
                    add(rel, "symlink", 0)
                elif child.is_dir(follow_symlinks=False):
                    add(rel, "directory", 0)
                    walk(Path(child.path), rel + "/")
                else:
                    add(rel, "file", child.stat(follow_symlinks=False).st_size)
            except OSError as exc:
                tree.findings.append(Finding("UNREADABLE_ENTRY", f"cannot stat entry: {exc.strerror}", context=rel))

    if root.is_dir():
        walk(root, "")
    return tree
