"""``fair-audit`` command line.

    fair-audit [options] TARGET...        audit URLs, DOIs or local directories
    fair-audit capture-env [-o FILE]      write an environment manifest for this host

Exit codes: 0 all targets pass, 1 some target fails, 2 error (bad
configuration, violated precondition, missing environment).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from fair_audit import __version__
from fair_audit.audit import (
    CONFIG_ENV_VAR,
    DEFAULT_DOWNLOAD_DIR,
    ConfigError,
    NoEnvironment,
    RunConfig,
    capture_environment,
    load_config_file,
    parse_checks,
    read_targets_file,
    run_audit,
)
from fair_audit.report import exit_code, render


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fair-audit",
        description="Check research-software artifacts for findability, accessibility, "
        "interoperability and reusability.",
        epilog="Run 'fair-audit capture-env --help' for the environment-manifest helper.",
    )
    p.add_argument("targets", nargs="*", metavar="TARGET", help="URL, DOI or local directory")
    p.add_argument("--targets-file", metavar="PATH", help="one target per line; '#' starts a comment")
    p.add_argument("--checks", metavar="LIST", help="comma-separated subset (default: all four)")
    p.add_argument("--env-manifest", metavar="PATH", help="environment manifest for interoperability")
    p.add_argument("--download-dir", metavar="PATH", help=f"where artifacts are stored (default {DEFAULT_DOWNLOAD_DIR})")
    p.add_argument("--output", choices=("json", "text"))
    p.add_argument("--timeout", type=float, metavar="SECONDS")
    p.add_argument("--max-redirects", type=int, metavar="N")
    p.add_argument("--concurrency", type=int, metavar="N")
    p.add_argument("--offline", action="store_true", default=None, help="no network; local directories only")
    p.add_argument("--verbose", action="store_true", default=None, help="show info findings in text output")
    p.add_argument("--config", metavar="PATH", help=f"TOML config (default: ${CONFIG_ENV_VAR})")
    p.add_argument("--python", metavar="EXE", help="interpreter to capture when --env-manifest is absent")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def parse_args(argv: list[str] | None = None, environ=None) -> RunConfig:
    """Build a RunConfig from flags, a config file and defaults (in that precedence).

    Usage errors exit through argparse with status 2.
    """
    parser = _parser()
    args = parser.parse_args(argv)
    environ = os.environ if environ is None else environ
    try:
        settings: dict = {}
        config_path = args.config or environ.get(CONFIG_ENV_VAR)
        if config_path:
            settings.update(load_config_file(config_path))

        targets = list(args.targets)
        if args.targets_file:
            targets += read_targets_file(args.targets_file)
        if targets:
            settings["targets"] = targets
        if args.checks is not None:
            settings["checks"] = parse_checks(args.checks)
        flag_map = {
            "env_manifest": ("env_manifest_path", Path),
            "download_dir": ("download_dir", Path),
            "output": ("output", str),
            "timeout": ("timeout_s", float),
            "max_redirects": ("max_redirects", int),
            "concurrency": ("concurrency", int),
            "offline": ("offline", bool),
            "verbose": ("verbose", bool),
            "python": ("python", str),
        }
        for flag, (key, conv) in flag_map.items():
            value = getattr(args, flag)
            if value is not None:
                settings[key] = conv(value)
        settings.setdefault("targets", [])
        return RunConfig(**settings)
    except ConfigError as exc:
        parser.error(str(exc))


def _capture_main(argv: list[str]) -> int:
    p = argparse.ArgumentParser(prog="fair-audit capture-env", description="Write an environment manifest.")
    p.add_argument("--python", metavar="EXE", help="interpreter to query (default: python3 on PATH)")
    p.add_argument("-o", "--output", metavar="PATH", help="manifest file (default: stdout)")
    args = p.parse_args(argv)
    try:
        manifest = capture_environment(args.python, args.output)
    except NoEnvironment as exc:
        print(f"NO_ENVIRONMENT: {exc}", file=sys.stderr)
        return 2
    if args.output is None:
        sys.stdout.write(manifest.render())
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if argv[:1] == ["capture-env"]:
        return _capture_main(argv[1:])
    config = parse_args(argv)
    try:
        report = run_audit(config)
    except ConfigError as exc:
        print(f"fair-audit: error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.buffer.write(render(report, config.output, config.verbose))
    sys.stdout.flush()
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
