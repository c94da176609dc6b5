import json
import os
import socket
import subprocess
import sys
import time

import httpx
import pytest

from axmc import engine
from axmc.cli import main
from axmc.synthetic import income_like, write_csv


@pytest.fixture(scope="module")
def dataset_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli-data")
    data = income_like(n=240, seed=12)
    csv_path = root / "income.csv"
    schema_path = root / "income.json"
    write_csv(data, str(csv_path))
    schema_path.write_text(data.schema.to_json())
    return str(csv_path), str(schema_path)


def run_flags(dataset_files, out, budget=2, seed=1, m=4):
    csv_path, schema_path = dataset_files
    return [
        "run",
        "--data", csv_path,
        "--schema", schema_path,
        "--measures", "mmce,f1_gap",
        "--budget", str(budget),
        "--seed", str(seed),
        "--m", str(m),
        "--out", out,
    ]


class TestRun:
    def test_produces_snapshot_and_fronts(self, dataset_files, tmp_path, capsys):
        out = str(tmp_path / "s1")
        assert main(run_flags(dataset_files, out)) == 0
        assert os.path.isfile(os.path.join(out, "session.json"))
        assert os.path.isfile(os.path.join(out, "front_valid.csv"))
        assert os.path.isfile(os.path.join(out, "front_test.csv"))
        assert "valid front" in capsys.readouterr().out

    def test_rerun_identical_front(self, dataset_files, tmp_path):
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        main(run_flags(dataset_files, out1))
        main(run_flags(dataset_files, out2))
        front1 = open(os.path.join(out1, "front_valid.csv")).read()
        front2 = open(os.path.join(out2, "front_valid.csv")).read()
        assert front1 == front2

    def test_missing_measures_usage_error(self, dataset_files, tmp_path):
        csv_path, schema_path = dataset_files
        with pytest.raises(SystemExit) as exc:
            main(["run", "--data", csv_path, "--schema", schema_path,
                  "--budget", "2", "--out", str(tmp_path / "x")])
        assert exc.value.code == 2

    def test_unreadable_data_runtime_error(self, dataset_files, tmp_path):
        _, schema_path = dataset_files
        code = main(["run", "--data", "/nope.csv", "--schema", schema_path,
                     "--measures", "mmce,f1_gap", "--budget", "1",
                     "--out", str(tmp_path / "x")])
        assert code == 1

    def test_env_seed_override(self, dataset_files, tmp_path, monkeypatch):
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        monkeypatch.setenv("AXMC_SEED", "77")
        main(run_flags(dataset_files, out1, seed=1))
        main(run_flags(dataset_files, out2, seed=2))  # both override to 77
        state1 = engine.load_snapshot(os.path.join(out1, "session.json"))
        state2 = engine.load_snapshot(os.path.join(out2, "session.json"))
        assert state1.seed == state2.seed == 77


class TestContinue:
    def test_staged_totals_and_box(self, dataset_files, tmp_path):
        out = str(tmp_path / "s1")
        main(run_flags(dataset_files, out, budget=2))
        code = main(["continue", "--session", out, "--budget", "2",
                     "--wmin", "0.1", "--wmax", "0.9"])
        assert code == 0
        state = engine.load_snapshot(os.path.join(out, "session.json"))
        assert state.budget.iterations_done == 4
        assert state.box.bounds[0] == (0.1, 0.9)
        assert main(["continue", "--session", out, "--budget", "1"]) == 0
        state = engine.load_snapshot(os.path.join(out, "session.json"))
        assert state.budget.iterations_done == 5

    def test_infeasible_box_fails_before_running(self, dataset_files, tmp_path):
        out = str(tmp_path / "s1")
        main(run_flags(dataset_files, out, budget=1))
        before = engine.load_snapshot(os.path.join(out, "session.json"))
        code = main(["continue", "--session", out, "--budget", "2",
                     "--wmin", "0.9", "--wmax", "0.1"])
        assert code == 1
        after = engine.load_snapshot(os.path.join(out, "session.json"))
        assert after.budget.iterations_done == before.budget.iterations_done

    def test_corrupt_snapshot(self, tmp_path):
        bad = tmp_path / "session.json"
        bad.write_text("{not json")
        assert main(["continue", "--session", str(tmp_path), "--budget", "1"]) == 1


class TestFront:
    def test_csv_columns(self, dataset_files, tmp_path, capsys):
        out = str(tmp_path / "s1")
        main(run_flags(dataset_files, out))
        capsys.readouterr()
        assert main(["front", "--session", out, "--split", "test", "--format", "csv"]) == 0
        printed = capsys.readouterr().out
        header = printed.splitlines()[0].split(",")
        assert header[:9] == list(engine.CONFIG_COLUMNS)
        assert header[9:] == ["mmce", "f1_gap", "provenance", "iteration"]

    def test_json_format_and_file_output(self, dataset_files, tmp_path):
        out = str(tmp_path / "s1")
        main(run_flags(dataset_files, out))
        target = str(tmp_path / "front.json")
        assert main(["front", "--session", out, "--split", "valid",
                     "--format", "json", "--out", target]) == 0
        body = json.loads(open(target).read())
        assert body["measures"] == ["mmce", "f1_gap"]
        assert body["rows"]

    def test_empty_archive_exit_1(self, dataset_files, tmp_path):
        out = str(tmp_path / "s1")
        main(run_flags(dataset_files, out, budget=1))
        snap_path = os.path.join(out, "session.json")
        snap = json.loads(open(snap_path).read())
        snap["archive"] = []
        open(snap_path, "w").write(json.dumps(snap))
        assert main(["front", "--session", out]) == 1


class TestServe:
    def test_responds_within_a_second(self, tmp_path):
        port = _free_port()
        proc = subprocess.Popen(
            [sys.executable, "-m", "axmc.cli", "serve", "--port", str(port),
             "--sessions-dir", str(tmp_path / "sessions")],
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
        )
        try:
            deadline = time.monotonic() + 10
            last_error = None
            while time.monotonic() < deadline:
                try:
                    resp = httpx.get(f"http://127.0.0.1:{port}/sessions", timeout=1.0)
                    assert resp.status_code == 200
                    assert resp.json() == []
                    return
                except httpx.HTTPError as exc:
                    last_error = exc
                    time.sleep(0.1)
            raise AssertionError(f"server never came up: {last_error}")
        finally:
            proc.terminate()
            proc.wait(timeout=10)

    def test_port_in_use_exit_1(self, tmp_path):
        blocker = socket.socket()
        blocker.bind(("127.0.0.1", 0))
        blocker.listen(1)
        port = blocker.getsockname()[1]
        try:
            code = main(["serve", "--port", str(port),
                         "--sessions-dir", str(tmp_path / "sessions")])
            assert code == 1
        finally:
            blocker.close()


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class TestCliServiceEquivalence:
    def test_identical_snapshots(self, dataset_files, tmp_path):
        from fastapi.testclient import TestClient

        from axmc.service import create_app

        csv_path, schema_path = dataset_files
        out = str(tmp_path / "cli")
        main(run_flags(dataset_files, out, budget=2, seed=5))
        cli_state = engine.load_snapshot(os.path.join(out, "session.json"))

        app = create_app(sessions_dir=str(tmp_path / "srv"))
        with TestClient(app) as client:
            body = {
                "dataset_path": csv_path,
                "schema": json.loads(open(schema_path).read()),
                "measures": ["mmce", "f1_gap"],
                "seed": 5,
                "m": 4,
            }
            sid = client.post("/sessions", json=body).json()["id"]
            client.post(f"/sessions/{sid}/run", json={"iterations": 2})
            deadline = time.monotonic() + 60
            while time.monotonic() < deadline:
                if client.get(f"/sessions/{sid}").json()["status"] == "done":
                    break
                time.sleep(0.05)
            srv_state = engine.load_snapshot(
                os.path.join(str(tmp_path / "srv"), sid, "session.json")
            )

        def canonical(state):
            snap = engine.snapshot(state)
            snap["id"] = ""
            for record in snap["archive"]:
                record["wall_time"] = 0.0
            return json.dumps(snap, sort_keys=True)

        assert canonical(cli_state) == canonical(srv_state)
