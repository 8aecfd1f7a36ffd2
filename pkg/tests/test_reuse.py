import pytest
from hypothesis import given, settings, HealthCheck
from hypothesis import strategies as st

from fair_audit.core import Severity, Status
from fair_audit.repo import enumerate_tree
from fair_audit.reuse import IndicatorKind, detect_indicators, indicator_table, scan_reusability
from conftest import write_tree


def tree_of(tmp_path, files):
    return enumerate_tree(write_tree(tmp_path / "repo", files))


def test_indicator_table():
    table = indicator_table()
    assert len(table) == 7
    assert {k for k, _, mandatory in table if mandatory} == {IndicatorKind.README, IndicatorKind.LICENSE}
    assert (IndicatorKind.NOTEBOOK, ("*.ipynb",), False) in table


def test_full_census_passes(tmp_path):
    files = {"README.md": "# x", "LICENSE": "MIT", "Dockerfile": "FROM x", "CITATION.cff": "cff-version: 1.2.0\n"}
    out = scan_reusability(tree_of(tmp_path, files))
    assert out.status is Status.PASS
    present = {"README_FOUND", "LICENSE_FOUND", "CONTAINER_SPEC_FOUND", "CITATION_FOUND"}
    assert present <= set(out.codes())
    assert {"NO_ENV_SPEC", "NO_NOTEBOOK", "NO_WORKFLOW"} <= set(out.codes())
    assert out.payload is None


def test_readme_only_fails_missing_license(tmp_path):
    out = scan_reusability(tree_of(tmp_path, {"README.md": "# x"}))
    assert out.status is Status.FAIL and "MISSING_LICENSE" in out.codes()


def test_empty_readme_fails(tmp_path):
    out = scan_reusability(tree_of(tmp_path, {"README.md": "", "LICENSE": "MIT"}))
    assert out.status is Status.FAIL and "README_EMPTY" in out.codes()


def test_whitespace_readme_and_empty_license(tmp_path):
    out = scan_reusability(tree_of(tmp_path, {"README.md": " \n\t", "LICENSE.txt": ""}))
    assert {"README_EMPTY", "LICENSE_EMPTY"} <= set(out.codes())


@pytest.mark.parametrize("name", ["LICENSE", "LICENSE.txt", "LICENSE.md", "COPYING", "license", "Copying"])
def test_license_names_case_insensitive(tmp_path, name):
    out = scan_reusability(tree_of(tmp_path, {"readme.md": "x", name: "text"}))
    assert out.status is Status.PASS


def test_nested_readme_does_not_count(tmp_path):
    out = scan_reusability(tree_of(tmp_path, {"docs/README.md": "x", "LICENSE": "MIT"}))
    assert "MISSING_README" in out.codes()


@pytest.mark.parametrize(
    "path, code",
    [
        ("Dockerfile", "CONTAINER_SPEC_FOUND"),
        ("environment.yml", "ENV_SPEC_FOUND"),
        ("environment.yaml", "ENV_SPEC_FOUND"),
        ("deep/nested/analysis.ipynb", "NOTEBOOK_FOUND"),
        (".github/workflows/ci.yml", "WORKFLOW_FOUND"),
        (".github/workflows/ci.yaml", "WORKFLOW_FOUND"),
        ("CITATION.cff", "CITATION_FOUND"),
    ],
)
def test_optional_indicators_are_info(tmp_path, path, code):
    content = "cff-version: 1.2.0\n" if path.endswith(".cff") else "x"
    out = scan_reusability(tree_of(tmp_path, {"README.md": "x", "LICENSE": "x", path: content}))
    found = [f for f in out.findings if f.code == code]
    assert found and all(f.severity is Severity.INFO for f in found)
    assert found[0].context == path


def test_citation_without_version_key(tmp_path):
    out = scan_reusability(tree_of(tmp_path, {"README.md": "x", "LICENSE": "x", "CITATION.cff": "title: x\n"}))
    assert out.status is Status.PASS
    assert "CITATION_MALFORMED" in out.codes()


def test_indicator_paths_exist_in_tree(tmp_path):
    files = {"README.md": "x", "LICENSE": "x", "a/b.ipynb": "{}", "c.ipynb": "{}", ".github/workflows/w.yml": "x"}
    tree = tree_of(tmp_path, files)
    indicators, _ = detect_indicators(tree)
    assert {i.path for i in indicators} <= set(tree.paths("file"))
    assert sorted(i.path for i in indicators if i.kind is IndicatorKind.NOTEBOOK) == ["a/b.ipynb", "c.ipynb"]


def test_null_tree_is_error():
    out = scan_reusability(None)
    assert out.status is Status.ERROR and out.codes() == ["PRECONDITION_VIOLATED"]


def test_contents_override_disk(tmp_path):
    tree = tree_of(tmp_path, {"README.md": "", "LICENSE": "x"})
    assert scan_reusability(tree, {"README.md": b"# filled"}).status is Status.PASS


CANDIDATES = [
    "README.md", "readme.md", "LICENSE", "COPYING", "Dockerfile", "environment.yml", "x.ipynb",
    "sub/y.ipynb", ".github/workflows/ci.yml", "CITATION.cff", "src/main.py", "docs/README.md",
]


@settings(suppress_health_check=[HealthCheck.function_scoped_fixture], max_examples=60)
@given(st.sets(st.sampled_from(CANDIDATES)), st.sets(st.sampled_from(CANDIDATES)), st.booleans())
def test_adding_files_is_monotone(tmp_path_factory, base, extra, empty_readme):
    root = tmp_path_factory.mktemp("mono")
    files = {p: ("" if p == "README.md" and empty_readme else "content\ncff-version: 1\n") for p in base}
    before = scan_reusability(enumerate_tree(write_tree(root / "a", files)))
    files2 = dict(files)
    for p in extra:
        files2.setdefault(p, "content\ncff-version: 1\n")
    after = scan_reusability(enumerate_tree(write_tree(root / "b", files2)))
    if before.status is Status.PASS:
        assert after.status is Status.PASS
    present = {f.code for f in before.findings if f.code.endswith("_FOUND")}
    assert present <= {f.code for f in after.findings}
    mandatory_ok = any(
        p.lower() == "readme.md" and files[p].strip() for p in files
    ) and any(p.lower() in ("license", "copying") for p in files)
    assert (before.status is Status.PASS) == mandatory_ok
