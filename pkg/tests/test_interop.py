import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fair_audit.core import Severity, Status
from fair_audit.interop import (
    ManifestError,
    check_interpreter_compat,
    detect_build_metadata,
    detect_interpreter_requirement,
    interoperability,
    parse_environment,
    resolve_dependencies,
    scan_ci_workflows,
)
from fair_audit.repo import enumerate_tree
from fair_audit.requirements import parse_requirements
from fair_audit.versions import parse_constraints, parse_version
from conftest import HEALTHY_ENV, HEALTHY_REPO, write_tree


def env(text="interpreter 3.10.2\nalpha==1.3.0\n"):
    return parse_environment(text)


def tree_of(tmp_path, files):
    return enumerate_tree(write_tree(tmp_path / "repo", files))


def codes(findings):
    return [f.code for f in findings]


# -- environment manifest --------------------------------------------------


def test_parse_environment():
    e = parse_environment("# captured\ninterpreter 3.10.2\nAlpha_Pkg==1.3.0  # pinned\n\nbeta==2.0rc1\n")
    assert e.interpreter_version.release == (3, 10, 2)
    assert set(e.packages) == {"alpha-pkg", "beta"}
    assert parse_environment(e.render()) == e


@pytest.mark.parametrize("bad", ["", "alpha==1.0\n", "interpreter x\n", "interpreter 3.10\nalpha>=1\n", "interpreter 3.10\nalpha==1.*\n"])
def test_bad_environment(bad):
    with pytest.raises(ManifestError):
        parse_environment(bad)


# -- sub-scans -------------------------------------------------------------


def test_build_metadata(tmp_path):
    assert codes(detect_build_metadata(tree_of(tmp_path, {"pyproject.toml": ""}))) == ["BUILD_METADATA_FOUND"]
    both = detect_build_metadata(tree_of(tmp_path, {"setup.py": "", "pyproject.toml": ""}))
    assert codes(both) == ["BUILD_METADATA_FOUND"] * 2


def test_no_build_metadata(tmp_path):
    (tmp_path / "empty").mkdir()
    found = detect_build_metadata(enumerate_tree(tmp_path / "empty"))
    assert codes(found) == ["NO_BUILD_METADATA"] and found[0].severity is Severity.WARNING


def test_nested_build_metadata_ignored(tmp_path):
    assert codes(detect_build_metadata(tree_of(tmp_path, {"sub/setup.py": ""}))) == ["NO_BUILD_METADATA"]


@pytest.mark.parametrize(
    "text, expected",
    [
        ("steps:\n  - run: python -m pytest\n", "CI_INVOKES_INTERPRETER"),
        ("steps:\n  - uses: actions/setup-python@v5\n", "CI_INVOKES_INTERPRETER"),
        ("steps:\n  - run: python3.11 tools/build.py\n", "CI_INVOKES_INTERPRETER"),
        ("steps:\n  - run: npm test\n", "CI_PRESENT_NO_INTERPRETER"),
        ("steps:\n  - run: build cpython from source\n", "CI_PRESENT_NO_INTERPRETER"),
    ],
)
def test_ci_workflows(tmp_path, text, expected):
    assert codes(scan_ci_workflows(tree_of(tmp_path, {".github/workflows/ci.yml": text}))) == [expected]


def test_no_ci_workflow(tmp_path):
    assert codes(scan_ci_workflows(tree_of(tmp_path, {"README.md": "x"}))) == ["NO_CI_WORKFLOW"]


def test_ci_yaml_extension_and_contents_override(tmp_path):
    tree = tree_of(tmp_path, {".github/workflows/a.yaml": "run: npm", ".github/workflows/notes.txt": "python"})
    assert codes(scan_ci_workflows(tree)) == ["CI_PRESENT_NO_INTERPRETER"]
    assert codes(scan_ci_workflows(tree, {".github/workflows/a.yaml": b"run: python x"})) == ["CI_INVOKES_INTERPRETER"]


# -- interpreter -----------------------------------------------------------


def test_interpreter_compat_examples():
    ok, f = check_interpreter_compat(parse_constraints(">=3.8"), env())
    assert ok and f.code == "INTERPRETER_COMPATIBLE"
    ok, f = check_interpreter_compat(None, env())
    assert ok and f.code == "NO_INTERPRETER_CONSTRAINT"
    ok, f = check_interpreter_compat(parse_constraints("==3.7"), env())
    assert not ok and f.code == "INTERPRETER_INCOMPATIBLE" and f.severity is Severity.BLOCKER


def test_requirement_sources_priority(tmp_path):
    tree = tree_of(
        tmp_path,
        {
            "pyproject.toml": '[project]\nname = "x"\nrequires-python = ">=3.9"\n',
            "setup.py": "setup(python_requires='>=3.6')",
            ".python-version": "3.7\n",
        },
    )
    required, _ = detect_interpreter_requirement(tree)
    assert [str(c) for c in required] == [">=3.9"]


def test_setup_py_then_version_file(tmp_path):
    required, _ = detect_interpreter_requirement(tree_of(tmp_path / "a", {"setup.py": 'python_requires=">=3.6,<4"'}))
    assert [str(c) for c in required] == [">=3.6", "<4"]
    required, _ = detect_interpreter_requirement(tree_of(tmp_path / "b", {".python-version": "3.10\n"}))
    assert [str(c) for c in required] == [">=3.10", "<3.11"]
    required, findings = detect_interpreter_requirement(tree_of(tmp_path / "c", {"README.md": ""}))
    assert required is None and findings == []


def test_unparseable_requires_python_falls_through(tmp_path):
    tree = tree_of(tmp_path, {"pyproject.toml": '[project]\nrequires-python = ">=3.8, !=3.9.*"\n', ".python-version": "3.10.2"})
    required, findings = detect_interpreter_requirement(tree)
    assert codes(findings) == ["INTERPRETER_CONSTRAINT_UNPARSEABLE"]
    assert [str(c) for c in required] == [">=3.10.2", "<3.10.3"]


# -- dependency resolution -------------------------------------------------


def test_resolve_dependencies_examples():
    reqs, _ = parse_requirements("alpha>=1.2")
    assert codes(resolve_dependencies(reqs, env())) == ["DEP_OK"]
    assert codes(resolve_dependencies(reqs, env("interpreter 3.10.2\n"))) == ["DEP_MISSING"]
    reqs, _ = parse_requirements("alpha>=2.0")
    assert codes(resolve_dependencies(reqs, env())) == ["DEP_VERSION_CONFLICT"]


def test_unconstrained_requirement_only_needs_presence():
    reqs, _ = parse_requirements("alpha\n")
    assert codes(resolve_dependencies(reqs, env())) == ["DEP_OK"]


names = st.sampled_from(["alpha", "beta", "gamma", "delta"])
vers = st.sampled_from(["0.9", "1.0", "1.3.0", "2.0", "2.1"])
ops = st.sampled_from([">=", "<", "==", "~=", "!="])


@given(
    st.lists(st.tuples(names, ops, vers), max_size=5),
    st.dictionaries(names, vers, max_size=4),
    names,
    vers,
)
def test_adding_a_package_never_breaks_an_ok(req_parts, installed, extra_name, extra_ver):
    reqs, _ = parse_requirements("\n".join(f"{n}{o}{v}" for n, o, v in req_parts))
    lines = "interpreter 3.10\n" + "".join(f"{k}=={v}\n" for k, v in installed.items())
    before = resolve_dependencies(reqs, parse_environment(lines))
    if extra_name not in installed:
        lines += f"{extra_name}=={extra_ver}\n"
    after = resolve_dependencies(reqs, parse_environment(lines))
    for b, a in zip(before, after):
        if b.code == "DEP_OK":
            assert a.code == "DEP_OK"


# -- the check -------------------------------------------------------------


def test_hicss58_like_fixture_passes(tmp_path):
    out = interoperability(tree_of(tmp_path, HEALTHY_REPO), parse_environment(HEALTHY_ENV))
    assert out.status is Status.PASS
    assert out.codes().count("DEP_OK") == 2
    assert "CI_INVOKES_INTERPRETER" in out.codes()
    assert not any(f.severity is Severity.BLOCKER for f in out.findings)
    assert out.payload is None


def test_missing_manifest_fails(tmp_path):
    out = interoperability(tree_of(tmp_path, {"README.md": "x"}), env())
    assert out.status is Status.FAIL and "NO_DEPENDENCY_MANIFEST" in out.codes()
    assert "NO_BUILD_METADATA" in out.codes() and "NO_CI_WORKFLOW" in out.codes()


def test_unsatisfiable_pin_fails(tmp_path):
    out = interoperability(tree_of(tmp_path, {"requirements.txt": "alpha==9.9\n"}), env())
    assert out.status is Status.FAIL and "DEP_VERSION_CONFLICT" in out.codes()


def test_manifest_with_bad_encoding_fails(tmp_path):
    out = interoperability(tree_of(tmp_path, {"requirements.txt": b"\xff\xfe"}), env())
    assert out.status is Status.FAIL and "MANIFEST_ENCODING" in out.codes()


def test_warnings_do_not_fail(tmp_path):
    out = interoperability(tree_of(tmp_path, {"requirements.txt": "-r base.txt\nalpha\nweird==1.*\n"}), env())
    assert out.status is Status.PASS
    assert {"DIRECTIVE_SKIPPED", "UNPARSEABLE_REQUIREMENT", "DEP_OK"} <= set(out.codes())


@pytest.mark.parametrize("args", [(None, None), ("tree", None), (None, "env")])
def test_null_inputs_are_errors(tmp_path, args):
    tree = tree_of(tmp_path, {"requirements.txt": "alpha"})
    t = tree if args[0] else None
    e = env() if args[1] else None
    out = interoperability(t, e)
    assert out.status is Status.ERROR and out.codes() == ["PRECONDITION_VIOLATED"]


MANIFESTS = {"present", "absent"}
DEPS = {
    "satisfied": ("alpha>=1.2\n", None),
    "missing": ("alpha>=1.2\nzeta\n", "DEP_MISSING"),
    "conflicting": ("alpha>=2.0\n", "DEP_VERSION_CONFLICT"),
}
INTERP = {
    "compatible": ('[project]\nrequires-python = ">=3.8"\n', None),
    "incompatible": ('[project]\nrequires-python = "<3.9"\n', "INTERPRETER_INCOMPATIBLE"),
    "unconstrained": ('[project]\nname = "x"\n', None),
}


@pytest.mark.parametrize("manifest, deps, interp", list(itertools.product(sorted(MANIFESTS), DEPS, INTERP)))
def test_truth_table(tmp_path, manifest, deps, interp):
    req_text, dep_code = DEPS[deps]
    pyproject, interp_code = INTERP[interp]
    files = {"pyproject.toml": pyproject}
    if manifest == "present":
        files["requirements.txt"] = req_text
    out = interoperability(tree_of(tmp_path, files), env())
    expected_blockers = set()
    if manifest == "absent":
        expected_blockers.add("NO_DEPENDENCY_MANIFEST")
    elif dep_code:
        expected_blockers.add(dep_code)
    if interp_code:
        expected_blockers.add(interp_code)
    blockers = {f.code for f in out.findings if f.severity is Severity.BLOCKER}
    assert blockers == expected_blockers
    assert out.status is (Status.FAIL if expected_blockers else Status.PASS)
