import json

import pytest

from casegraph.cli import main

from conftest import mock_audio


@pytest.fixture
def data_dir(tmp_path):
    return str(tmp_path / "data")


def run(capsys, *argv) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestIngestAndSearch:
    def test_ingest_then_search(self, tmp_path, data_dir, capsys):
        tip = tmp_path / "tip.txt"
        tip.write_text("Alice Harper was seen near Central Station.")
        code, out, _ = run(capsys, "ingest", "--data-dir", data_dir, str(tip))
        assert code == 0
        job = json.loads(out)
        assert job["status"] == "done"
        code, out, _ = run(capsys, "search", "--data-dir", data_dir, "alice harper", "--modes", "exact")
        assert code == 0
        assert "Alice Harper" in out

    def test_audio_ingest_needs_media_type(self, tmp_path, data_dir, capsys):
        wiretap = tmp_path / "call.json"
        wiretap.write_bytes(mock_audio({"A": "Bob Keller in Rotterdam."}))
        code, out, _ = run(
            capsys, "ingest", "--data-dir", data_dir, str(wiretap), "--media-type", "audio/mock"
        )
        assert code == 0
        assert "Thing" not in out  # plain job summary, not a dump


class TestVerifyAndReplay:
    def test_verify_ok_then_broken(self, tmp_path, data_dir, capsys):
        tip = tmp_path / "tip.txt"
        tip.write_text("Berlin.")
        run(capsys, "ingest", "--data-dir", data_dir, str(tip))
        code, out, err = run(capsys, "verify", "--data-dir", data_dir)
        assert code == 0 and "intact" in out
        log_path = tmp_path / "data" / "provenance.ndjson"
        lines = log_path.read_text().splitlines()
        entry = json.loads(lines[2])
        entry["payload"] = {"forged": True}
        lines[2] = json.dumps(entry)
        log_path.write_text("\n".join(lines) + "\n")
        code, _, err = run(capsys, "verify", "--data-dir", data_dir)
        assert code == 1
        assert "seq 1" in err

    def test_replay_summary_and_snapshot(self, tmp_path, data_dir, capsys):
        tip = tmp_path / "tip.txt"
        tip.write_text("Alice Harper in Berlin.")
        run(capsys, "ingest", "--data-dir", data_dir, str(tip))
        out_path = tmp_path / "state.json"
        code, out, _ = run(capsys, "replay", "--data-dir", data_dir, "--out", str(out_path))
        assert code == 0
        summary = json.loads(out)
        assert summary["nodes"] >= 3
        snapshot = json.loads(out_path.read_text())
        assert set(snapshot) == {"nodes", "edges"}


class TestLayoutCommand:
    def test_positions_file(self, tmp_path, capsys):
        graph = tmp_path / "g.json"
        graph.write_text(json.dumps({"nodes": ["a", "b", "c"], "edges": [["a", "b"], ["b", "c"]]}))
        out = tmp_path / "pos.json"
        code, _, _ = run(
            capsys, "layout", "--graph", str(graph), "--iters", "10", "--theta", "0.5",
            "--seed", "7", "--out", str(out),
        )
        assert code == 0
        positions = json.loads(out.read_text())
        assert [p["id"] for p in positions] == ["a", "b", "c"]
        assert all(set(p) == {"id", "x", "y"} for p in positions)


class TestEvalNer:
    def test_table_output(self, tmp_path, capsys):
        docs = {"d1": "Alice Harper met Bob Keller.", "d2": "Nothing here."}
        docs_path = tmp_path / "docs.json"
        docs_path.write_text(json.dumps(docs))
        gold_path = tmp_path / "gold.ndjson"
        gold_path.write_text(
            json.dumps({"doc": "d1", "start": 0, "end": 12, "label": "PERSON"}) + "\n"
            + json.dumps({"doc": "d1", "start": 17, "end": 27, "label": "PERSON"}) + "\n"
        )
        code, out, _ = run(capsys, "eval-ner", "--gold", str(gold_path), "--docs", str(docs_path))
        assert code == 0
        lines = out.splitlines()
        assert lines[0].split() == ["Type", "P", "R", "F1"]
        person_row = next(l for l in lines if l.startswith("PERSON"))
        assert person_row.split()[1:] == ["1.00", "1.00", "1.00"]


class TestReportCommand:
    def test_export_report(self, tmp_path, data_dir, capsys):
        tip = tmp_path / "tip.txt"
        tip.write_text("Alice Harper in Berlin.")
        _, out, _ = run(capsys, "ingest", "--data-dir", data_dir, str(tip))
        doc = json.loads(out)["document"]
        json_out = tmp_path / "report.json"
        html_out = tmp_path / "report.html"
        code, _, _ = run(
            capsys, "export-report", "--data-dir", data_dir, "--items", doc,
            "--out", str(json_out), "--html", str(html_out),
        )
        assert code == 0
        bundle = json.loads(json_out.read_text())
        assert doc in bundle["items"]
        assert "<html" in html_out.read_text()

    def test_unknown_item_exits_nonzero(self, tmp_path, data_dir, capsys):
        tip = tmp_path / "tip.txt"
        tip.write_text("x")
        run(capsys, "ingest", "--data-dir", data_dir, str(tip))
        code, _, err = run(
            capsys, "export-report", "--data-dir", data_dir, "--items", "n999",
            "--out", str(tmp_path / "r.json"),
        )
        assert code == 2
        assert "error" in err
