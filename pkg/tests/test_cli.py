"""Every subcommand end to end: exit codes and machine-readable stdout."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from netsentinel.cli import main
from netsentinel.pcap import synthesize_flood, write_capture


@pytest.fixture
def runner():
    return CliRunner()


class TestReport:
    def test_risk_matrix_json(self, runner):
        result = runner.invoke(main, ["report", "risk-matrix", "--format", "json"])
        assert result.exit_code == 0
        payload = json.loads(result.output)
        by_id = sorted(payload["threats"], key=lambda t: t["id"])
        assert [t["score"] for t in by_id] == [12, 9, 18, 12, 12, 18, 27, 9, 12, 18]
        assert payload["threats"][0]["name"] == "Resource Exhaustion"

    def test_risk_matrix_markdown(self, runner):
        result = runner.invoke(main, ["report", "risk-matrix", "--format", "md"])
        assert result.exit_code == 0
        assert result.output.count("\n") == 12  # header + rule + 10 rows
        assert "Resource Exhaustion" in result.output.splitlines()[2]


class TestScenario:
    def test_tc2_defense_off(self, runner, tmp_path):
        with runner.isolated_filesystem(temp_dir=tmp_path):
            result = runner.invoke(main, ["scenario", "tc2", "--defense", "off"])
            assert result.exit_code == 0
            report = json.loads(result.output)
            assert report["metrics"]["baseline_duration_s"] == 34.0
            assert report["metrics"]["poisoned_duration_s"] == 170.0
            assert report["validated"] is True

    def test_tc2_defense_on_writes_reports(self, runner, tmp_path):
        with runner.isolated_filesystem(temp_dir=tmp_path) as fs:
            result = runner.invoke(main, ["scenario", "tc2", "--defense", "on", "--out", "r"])
            assert result.exit_code == 0
            report = json.loads(result.output)
            assert report["metrics"]["tamper_detected"] is True
            saved = json.loads((Path(fs) / "r" / "tc2_on.json").read_text())
            assert saved == report

    def test_unknown_scenario_is_usage_error(self, runner):
        result = runner.invoke(main, ["scenario", "tc9"])
        assert result.exit_code == 2

    def test_unknown_flag_is_usage_error(self, runner):
        result = runner.invoke(main, ["scenario", "tc1", "--warp-speed"])
        assert result.exit_code == 2


class TestSealVerify:
    def test_seal_then_verify_ok(self, runner, tmp_path):
        history = tmp_path / "history.json"
        sealed = runner.invoke(main, ["seal", "history", "--path", str(history), "--key", "k1"])
        assert sealed.exit_code == 0
        assert json.loads(sealed.output)["key_id"]

        verified = runner.invoke(main, ["verify", "history", "--path", str(history), "--key", "k1"])
        assert verified.exit_code == 0
        assert json.loads(verified.output)["status"] == "valid"

    def test_verify_tampered_exits_1(self, runner, tmp_path):
        history = tmp_path / "history.json"
        runner.invoke(main, ["seal", "history", "--path", str(history), "--key", "k1"])
        history.write_text('[{"t": "2025-01-01T00:00:00+00:00", "severity": "high"}]')
        result = runner.invoke(main, ["verify", "history", "--path", str(history), "--key", "k1"])
        assert result.exit_code == 1
        assert json.loads(result.output)["status"] == "tampered"

    def test_verify_wrong_key(self, runner, tmp_path):
        history = tmp_path / "history.json"
        runner.invoke(main, ["seal", "history", "--path", str(history), "--key", "k1"])
        result = runner.invoke(main, ["verify", "history", "--path", str(history), "--key", "k2"])
        assert result.exit_code == 1
        assert json.loads(result.output)["status"] == "key_mismatch"

    def test_seal_without_key_fails_operationally(self, runner, tmp_path):
        result = runner.invoke(
            main, ["seal", "history", "--path", str(tmp_path / "h.json")], env={"AGENT_SEAL_KEY": ""}
        )
        assert result.exit_code == 1


class TestReplay:
    def test_replay_counts_and_snapshots(self, runner, tmp_path):
        capture = tmp_path / "cap.pcap"
        capture.write_bytes(
            write_capture(synthesize_flood("icmp", 100, "10.0.0.1", "10.0.0.2", rate_pps=10_000.0))
        )
        result = runner.invoke(
            main, ["replay", str(capture), "--rate", "10000", "--iterations", "5"]
        )
        assert result.exit_code == 0
        payload = json.loads(result.output)
        assert payload["packets_sent"] == 500
        assert payload["elapsed_s"] == pytest.approx(0.05)
        assert len(payload["snapshots"]) == 2

    def test_missing_capture_fails_operationally(self, runner, tmp_path):
        result = runner.invoke(main, ["replay", str(tmp_path / "ghost.pcap"), "--rate", "100"])
        assert result.exit_code == 1

    def test_custom_rules_config_drives_detection(self, runner, tmp_path):
        capture = tmp_path / "slow.pcap"
        capture.write_bytes(
            write_capture(synthesize_flood("icmp", 200, "10.0.0.1", "10.0.0.2", rate_pps=100.0))
        )
        rules = tmp_path / "rules.json"
        rules.write_text(json.dumps([
            {"id": "touchy", "kind": "icmp_flood", "threshold": 10,
             "unit": "pps", "window_s": 1, "maps_to_threat": 7},
        ]))
        # 100 pps icmp: silent under the defaults, loud under the custom rule
        quiet = runner.invoke(main, ["replay", str(capture), "--rate", "100"])
        assert json.loads(quiet.output)["alerts"] == 0
        loud = runner.invoke(main, ["replay", str(capture), "--rate", "100", "--rules", str(rules)])
        assert json.loads(loud.output)["alerts"] > 0

    def test_invalid_rate_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["replay", str(tmp_path / "x.pcap"), "--rate", "0"])
        assert result.exit_code == 2


class TestRun:
    def test_run_without_token_fails(self, runner):
        result = runner.invoke(main, ["run"], env={"AGENT_TOKEN": ""})
        assert result.exit_code == 1

    def test_run_hosts_the_gateway(self, tmp_path):
        # real server boot: the only subcommand CliRunner cannot drive
        import socket
        import subprocess
        import sys
        import time
        import urllib.error
        import urllib.request

        with socket.socket() as probe:
            probe.bind(("127.0.0.1", 0))
            port = probe.getsockname()[1]
        process = subprocess.Popen(
            [sys.executable, "-m", "netsentinel.cli", "run",
             "--token", "e2e-tok", "--bind", f"127.0.0.1:{port}",
             "--workdir", str(tmp_path / "state")],
            stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
        )
        try:
            request = urllib.request.Request(
                f"http://127.0.0.1:{port}/health",
                headers={"Authorization": "Bearer e2e-tok"},
            )
            body = None
            for _ in range(50):
                try:
                    with urllib.request.urlopen(request, timeout=1) as response:
                        body = json.loads(response.read())
                    break
                except (urllib.error.URLError, ConnectionError):
                    time.sleep(0.2)
            assert body == {"status": "ok", "scenarios_run": 0}
            bare = urllib.request.Request(f"http://127.0.0.1:{port}/health")
            with pytest.raises(urllib.error.HTTPError) as err:
                urllib.request.urlopen(bare, timeout=1)
            assert err.value.code == 401
        finally:
            process.terminate()
            process.wait(timeout=10)

    def test_help_exits_zero(self, runner):
        assert runner.invoke(main, ["--help"]).exit_code == 0
        assert runner.invoke(main, ["report", "--help"]).exit_code == 0
