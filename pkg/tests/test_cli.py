import json

import pytest
from click.testing import CliRunner

from storysearch.cli import main
from storysearch.project_io import deserialize_project

from conftest import FIR_TREE_STUB


@pytest.fixture
def runner():
    return CliRunner()


def make_project(runner, tmp_path, name="p.json"):
    path = tmp_path / name
    result = runner.invoke(
        main,
        ["expand", "--project", str(path), "--init-root", FIR_TREE_STUB, "--mock", "--seed", "3"],
    )
    assert result.exit_code == 0, result.output
    return path


class TestExpand:
    def test_creates_project_and_commits_event(self, runner, tmp_path):
        path = make_project(runner, tmp_path)
        tree, _, _ = deserialize_project(path.read_bytes())
        assert len(tree.nodes) == 2
        assert tree.root.prior_guesses

    def test_missing_project_without_init_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(
            main, ["expand", "--project", str(tmp_path / "nope.json"), "--mock"]
        )
        assert result.exit_code == 2

    def test_backward_direction(self, runner, tmp_path):
        path = make_project(runner, tmp_path)
        result = runner.invoke(
            main,
            ["expand", "--project", str(path), "--direction", "backward", "--mock", "--seed", "3"],
        )
        assert result.exit_code == 0
        tree, _, _ = deserialize_project(path.read_bytes())
        directions = {n.direction.value for n in tree.nodes.values()}
        assert "backward" in directions


class TestMcts:
    def test_zero_iterations_is_usage_error(self, runner, tmp_path):
        path = make_project(runner, tmp_path)
        result = runner.invoke(
            main, ["mcts", "--project", str(path), "--iterations", "0", "--mock"]
        )
        assert result.exit_code == 2

    def test_run_grows_and_saves_project(self, runner, tmp_path):
        path = make_project(runner, tmp_path)
        result = runner.invoke(
            main,
            ["mcts", "--project", str(path), "--iterations", "5", "--mock", "--seed", "3"],
        )
        assert result.exit_code == 0, result.output
        assert "ran 5 iterations" in result.output
        tree, _, _ = deserialize_project(path.read_bytes())
        assert len(tree.nodes) == 7  # root + manual expand + 5 committed search nodes


class TestJudge:
    def test_corrupt_project_is_runtime_failure(self, runner, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        result = runner.invoke(main, ["judge", "--project", str(path), "--mock"])
        assert result.exit_code == 1

    def test_prints_scores_and_writes_report(self, runner, tmp_path):
        path = make_project(runner, tmp_path)
        out = tmp_path / "report.json"
        result = runner.invoke(
            main, ["judge", "--project", str(path), "--mock", "--seed", "3", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        assert "overall_quality=" in result.output
        doc = json.loads(out.read_text())
        assert set(doc) == {"judgement", "narrative_comments"}


class TestDiversity:
    def test_prints_values_in_unit_range(self, runner, tmp_path):
        path = make_project(runner, tmp_path)
        result = runner.invoke(main, ["diversity", "--project", str(path)])
        assert result.exit_code == 0, result.output
        for n in (1, 2, 3, 4):
            assert f"distinct-{n}=" in result.output
        values = [
            float(token.split("=")[1])
            for token in result.output.split()
            if token.startswith("distinct-")
        ]
        assert all(0.0 <= v <= 1.0 for v in values)

    def test_compare_mode_emits_table(self, runner, tmp_path, corpus_file):
        out = tmp_path / "divout"
        result = runner.invoke(
            main,
            [
                "diversity",
                "--compare",
                "--stubs",
                str(corpus_file),
                "--runs",
                "2",
                "--length",
                "4",
                "--iterations",
                "6",
                "--mock",
                "--seed",
                "1",
                "--out",
                str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        assert "1-grams" in result.output
        assert (out / "diversity_comparison.md").exists()

    def test_compare_requires_stubs(self, runner):
        result = runner.invoke(main, ["diversity", "--compare", "--mock"])
        assert result.exit_code == 2


class TestSuite:
    def test_small_suite_writes_reports(self, runner, tmp_path, corpus_file):
        out = tmp_path / "suite"
        result = runner.invoke(
            main,
            [
                "suite",
                "--stubs",
                str(corpus_file),
                "--count",
                "2",
                "--strategies",
                "table1",
                "--mock",
                "--seed",
                "1",
                "--out",
                str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        lines = (out / "suite_report.md").read_text().strip().splitlines()
        assert len(lines) == 2 + 7  # header + divider + seven strategies

    def test_reruns_are_byte_identical(self, runner, tmp_path, corpus_file):
        outputs = []
        for name in ("one", "two"):
            out = tmp_path / name
            result = runner.invoke(
                main,
                [
                    "suite",
                    "--stubs",
                    str(corpus_file),
                    "--count",
                    "1",
                    "--mock",
                    "--seed",
                    "4",
                    "--out",
                    str(out),
                ],
            )
            assert result.exit_code == 0, result.output
            outputs.append((out / "suite_report.csv").read_bytes())
        assert outputs[0] == outputs[1]
