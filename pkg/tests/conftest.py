from __future__ import annotations

import io
import socket
import tarfile
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from fair_audit.netprobe import ProbePolicy
from fair_audit.repo import HostMapping, ProviderKind


@dataclass
class Route:
    status: int = 200
    body: bytes = b""
    headers: dict = field(default_factory=dict)
    head_status: int | None = None
    delay: float = 0.0


class FixtureServer:
    """Programmable local HTTP server; counts concurrent in-flight requests."""

    def __init__(self) -> None:
        self.routes: dict[str, Route] = {}
        self.log: list[tuple[str, str]] = []
        self.user_agents: list[str] = []
        self.in_flight = 0
        self.max_in_flight = 0
        self._lock = threading.Lock()
        server = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args):
                pass

            def _serve(self, head: bool) -> None:
                with server._lock:
                    server.log.append((self.command, self.path))
                    server.user_agents.append(self.headers.get("User-Agent", ""))
                    server.in_flight += 1
                    server.max_in_flight = max(server.max_in_flight, server.in_flight)
                try:
                    route = server.routes.get(self.path.split("?")[0])
                    if route is None:
                        route = Route(404, b"not found")
                    if route.delay:
                        time.sleep(route.delay)
                    status = route.head_status if head and route.head_status is not None else route.status
                    self.send_response(status)
                    for k, v in route.headers.items():
                        self.send_header(k, v)
                    self.send_header("Content-Length", str(len(route.body)))
                    self.end_headers()
                    if not head:
                        self.wfile.write(route.body)
                finally:
                    with server._lock:
                        server.in_flight -= 1

            def do_HEAD(self):
                self._serve(True)

            def do_GET(self):
                self._serve(False)

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.httpd.daemon_threads = True
        self.port = self.httpd.server_address[1]
        self.thread = threading.Thread(target=self.httpd.serve_forever, kwargs={"poll_interval": 0.02}, daemon=True)
        self.thread.start()

    @property
    def netloc(self) -> str:
        return f"127.0.0.1:{self.port}"

    def url(self, path: str) -> str:
        return f"http://{self.netloc}{path}"

    def add(self, path: str, status: int = 200, body: bytes = b"", **kw) -> str:
        self.routes[path] = Route(status, body, **kw)
        return self.url(path)

    def redirect(self, path: str, to: str, status: int = 302) -> str:
        return self.add(path, status, headers={"Location": to})

    def hosts(self, kind: ProviderKind = ProviderKind.GITHUB) -> dict[str, HostMapping]:
        return {self.netloc: HostMapping(kind)}

    def serve_repo(self, owner: str, name: str, archive: bytes | None, ref: str = "main", page_status: int = 200,
                   archive_status: int = 200) -> str:
        """Emulate a GitHub-style repository page plus its branch archive endpoint."""
        self.add(f"/{owner}/{name}", page_status, b"<html>repo</html>")
        if archive is not None or archive_status != 200:
            self.add(f"/{owner}/{name}/archive/refs/heads/{ref}.tar.gz", archive_status, archive or b"denied")
        return self.url(f"/{owner}/{name}")

    def close(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()


# Filled by the acceptance suite; shown once at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def server():
    s = FixtureServer()
    yield s
    s.close()


@pytest.fixture
def policy():
    return ProbePolicy(timeout=2.0)


@pytest.fixture
def refused_url():
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    return f"http://127.0.0.1:{port}/nothing-here"


def make_tarball(files: dict[str, bytes | str], top: str | None = "hicss58-main") -> bytes:
    buf = io.BytesIO()
    with tarfile.open(fileobj=buf, mode="w:gz") as tf:
        dirs = set()
        for path, data in sorted(files.items()):
            full = f"{top}/{path}" if top else path
            parts = full.split("/")[:-1]
            for i in range(1, len(parts) + 1):
                d = "/".join(parts[:i])
                if d not in dirs:
                    dirs.add(d)
                    info = tarfile.TarInfo(d)
                    info.type = tarfile.DIRTYPE
                    info.mode = 0o755
                    info.mtime = 0
                    tf.addfile(info)
            raw = data.encode() if isinstance(data, str) else data
            info = tarfile.TarInfo(full)
            info.size = len(raw)
            info.mtime = 0
            tf.addfile(info, io.BytesIO(raw))
    return buf.getvalue()


HEALTHY_REPO = {
    "README.md": "# hicss58\n\nScripts and classification sheets.\n",
    "LICENSE": "MIT License\n",
    "requirements.txt": "alpha>=1.2\nbeta_lib==1.0\n",
    "Dockerfile": "FROM python:3.10\n",
    "CITATION.cff": "cff-version: 1.2.0\ntitle: hicss58\n",
    "analysis/notebook.ipynb": "{}",
    ".github/workflows/ci.yml": "jobs:\n  test:\n    steps:\n      - run: python -m pytest\n",
}

HEALTHY_ENV = "interpreter 3.10.2\nalpha==1.3.0\nbeta-lib==1.0\n"


def write_tree(root: Path, files: dict[str, bytes | str]) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    for path, data in files.items():
        p = root / path
        p.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(data, str):
            p.write_text(data, encoding="utf-8")
        else:
            p.write_bytes(data)
    return root
