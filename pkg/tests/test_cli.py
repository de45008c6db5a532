import json

import pytest

from reaper.cli import main

from .conftest import GALAXY_PLAN_TEXT

CHAIN_PLAN = (
    'Step 1: shipment_status(query="order")\n'
    "Step 2: prod_qna(product_id=$1.product_id, query=\"size\")\n"
    "Step 3: review_summary(product_id=$2.product_id)"
)


def write_tasks(path, n):
    lines = []
    for i in range(n):
        plan = (
            f'Step 1: prod_search(keywords="item {i}")'
            if i % 2
            else GALAXY_PLAN_TEXT
        )
        lines.append(
            json.dumps({"query": f"question {i} about {chr(97 + i % 26)}", "context": None, "plan": plan})
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestValidate:
    def test_clean_file(self, tmp_path, capsys):
        plans = tmp_path / "plans.txt"
        plans.write_text(GALAXY_PLAN_TEXT + "\n\nStep 1: no_retrieval()\n")
        assert main(["validate", str(plans)]) == 0
        assert "clean" in capsys.readouterr().out

    def test_unknown_tool_lists_violation(self, tmp_path, capsys):
        plans = tmp_path / "plans.txt"
        plans.write_text('Step 1: compare(query="a vs b")\n')
        assert main(["validate", str(plans)]) == 1
        assert "UnknownTool" in capsys.readouterr().out

    def test_parse_error_reported(self, tmp_path, capsys):
        plans = tmp_path / "plans.txt"
        plans.write_text("not a plan at all\n")
        assert main(["validate", str(plans)]) == 1
        assert "parse error" in capsys.readouterr().out

    def test_missing_file_is_io_error(self, tmp_path, capsys):
        assert main(["validate", str(tmp_path / "missing.txt")]) == 2
        assert "error" in capsys.readouterr().err


class TestForge:
    def test_count_law_and_manifest(self, tmp_path, capsys):
        tasks = tmp_path / "tasks.jsonl"
        write_tasks(tasks, 10)
        out = tmp_path / "train.jsonl"
        code = main(
            [
                "forge",
                "--tasks", str(tasks),
                "--out", str(out),
                "--tasks-per-query", "3",
                "--generic-fraction", "0",
                "--seed", "11",
            ]
        )
        assert code == 0
        manifest = json.loads(capsys.readouterr().out)
        assert manifest["reaper_count"] == 30
        assert manifest["generic_count"] == 0
        assert len(out.read_text().splitlines()) == 30

    def test_generic_fraction_zero(self, tmp_path, capsys):
        tasks = tmp_path / "tasks.jsonl"
        write_tasks(tasks, 4)
        out = tmp_path / "train.jsonl"
        main(["forge", "--tasks", str(tasks), "--out", str(out),
              "--generic-fraction", "0"])
        manifest = json.loads(capsys.readouterr().out)
        assert manifest["generic_count"] == 0

    def test_same_seed_twice_is_byte_identical(self, tmp_path, capsys):
        tasks = tmp_path / "tasks.jsonl"
        write_tasks(tasks, 6)
        first = tmp_path / "a.jsonl"
        second = tmp_path / "b.jsonl"
        for out in (first, second):
            main(["forge", "--tasks", str(tasks), "--out", str(out),
                  "--tasks-per-query", "2", "--seed", "99"])
        assert first.read_bytes() == second.read_bytes()

    def test_manifest_file_written(self, tmp_path, capsys):
        tasks = tmp_path / "tasks.jsonl"
        write_tasks(tasks, 2)
        manifest_path = tmp_path / "manifest.json"
        main(["forge", "--tasks", str(tasks), "--out", str(tmp_path / "t.jsonl"),
              "--manifest", str(manifest_path)])
        assert json.loads(manifest_path.read_text())["reaper_count"] == 2

    def test_bad_tasks_file_is_usage_error(self, tmp_path, capsys):
        tasks = tmp_path / "tasks.jsonl"
        tasks.write_text("{not json\n")
        assert main(["forge", "--tasks", str(tasks),
                     "--out", str(tmp_path / "t.jsonl")]) == 2

    def test_missing_record_field_is_usage_error(self, tmp_path, capsys):
        tasks = tmp_path / "tasks.jsonl"
        tasks.write_text(json.dumps({"query": "hello"}) + "\n")
        assert main(["forge", "--tasks", str(tasks),
                     "--out", str(tmp_path / "t.jsonl")]) == 2
        assert "missing field" in capsys.readouterr().err

    def test_missing_output_directory_fails_fast(self, tmp_path, capsys):
        tasks = tmp_path / "tasks.jsonl"
        write_tasks(tasks, 2)
        assert main(["forge", "--tasks", str(tasks),
                     "--out", str(tmp_path / "nowhere" / "t.jsonl")]) == 2


def write_gold_and_pred(tmp_path, mutate=None):
    gold_rows = [
        {"query": "where is my order", "context": None,
         "gold_plan": 'Step 1: shipment_status(query="mug order")',
         "class": "shipment_status"},
        {"query": "running shoes", "context": None,
         "gold_plan": 'Step 1: prod_search(keywords="running shoes")',
         "class": "product_search"},
        {"query": "hi", "context": None,
         "gold_plan": "Step 1: no_retrieval()", "class": "no_retrieval"},
    ]
    pred_rows = [{"plan": row["gold_plan"]} for row in gold_rows]
    if mutate:
        mutate(pred_rows)
    gold = tmp_path / "gold.jsonl"
    pred = tmp_path / "pred.jsonl"
    gold.write_text("\n".join(json.dumps(r) for r in gold_rows) + "\n")
    pred.write_text("\n".join(json.dumps(r) for r in pred_rows) + "\n")
    return gold, pred


class TestEval:
    def test_perfect_predictions(self, tmp_path, capsys):
        gold, pred = write_gold_and_pred(tmp_path)
        assert main(["eval", "--pred", str(pred), "--gold", str(gold)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["tool_accuracy"] == 1.0
        assert report["argument_accuracy"] == 1.0

    def test_omitted_tool_reported(self, tmp_path, capsys):
        gold, pred = write_gold_and_pred(tmp_path)
        main(["eval", "--pred", str(pred), "--gold", str(gold),
              "--omitted-tool", "prod_qna"])
        report = json.loads(capsys.readouterr().out)
        assert report["instruction_following"] == 1.0

    def test_length_mismatch_is_domain_error(self, tmp_path, capsys):
        gold, pred = write_gold_and_pred(tmp_path)
        pred.write_text(pred.read_text().splitlines()[0] + "\n")
        assert main(["eval", "--pred", str(pred), "--gold", str(gold)]) == 1

    def test_report_file_written(self, tmp_path, capsys):
        gold, pred = write_gold_and_pred(tmp_path)
        out = tmp_path / "report.json"
        main(["eval", "--pred", str(pred), "--gold", str(gold), "--out", str(out)])
        assert json.loads(out.read_text())["tool_accuracy"] == 1.0


class TestBench:
    def test_three_step_chain_defaults(self, tmp_path, capsys):
        plans = tmp_path / "plan.txt"
        plans.write_text(CHAIN_PLAN + "\n")
        assert main(["bench", str(plans)]) == 0
        table = capsys.readouterr().out
        row = [x for x in table.splitlines()[-1].split() if x]
        assert row[1] == "3"
        assert float(row[2]) == 357.0
        assert float(row[3]) == 6150.0
        assert abs(float(row[4]) - 17.23) < 0.01

    def test_single_step_speedup_formula(self, tmp_path, capsys):
        plans = tmp_path / "plan.txt"
        plans.write_text('Step 1: prod_search(keywords="mug")\n')
        main(["bench", str(plans), "--tool-latency", "50"])
        row = capsys.readouterr().out.splitlines()[-1].split()
        assert abs(float(row[4]) - (2000 + 50) / (207 + 50)) < 0.01

    def test_invalid_plan_is_domain_error(self, tmp_path, capsys):
        plans = tmp_path / "plan.txt"
        plans.write_text("Step 1: compare()\n")
        assert main(["bench", str(plans)]) == 1


class TestPlan:
    def test_stub_backend_matches_pool_query(self, capsys):
        assert main(["plan", "where is my coffee maker order"]) == 0
        out = capsys.readouterr().out
        assert 'Step 1: shipment_status(query="coffee maker order")' in out

    def test_stub_backend_falls_back_to_default(self, capsys):
        assert main(["plan", "an unmatched question"]) == 0
        assert "Step 1: no_retrieval()" in capsys.readouterr().out

    def test_remote_backend_without_url_is_domain_error(self, capsys, monkeypatch):
        monkeypatch.delenv("REAPER_BACKEND_URL", raising=False)
        assert main(["plan", "hello", "--backend", "remote"]) == 1


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as excinfo:
        main(["not-a-command"])
    assert excinfo.value.code == 2
