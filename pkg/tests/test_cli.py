"""End-to-end CLI tests driving main(argv) in-process."""

import dataclasses
import json

import pytest

from cstatesim.catalog import default_catalog, dumps_catalog, save_catalog
from cstatesim.cli import BUILTIN_VARIANTS, main
from cstatesim.reporting import canonical_hash, parse_document

SIM_INI = """
[sim]
cores = 1
duration_s = 0.01
seed = 3

[arrival]
rate_qps = 2000

[service]
dist = fixed
mean_us = 10

[variant:custom_pair]
cstates = C0, C6A
"""


@pytest.fixture
def sim_config(tmp_path):
    path = tmp_path / "sim.ini"
    path.write_text(SIM_INI)
    return str(path)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# model subcommands


class TestModelCli:
    def test_upper_bound_low_idle_profile(self, capsys):
        code, out, _ = run_cli(
            capsys, "model", "upper-bound", "--residency", "C0=0.5,C1=0.45,C6=0.05"
        )
        assert code == 0
        assert out == "savings 22.7%\n"

    def test_upper_bound_heavy_idle_profile(self, capsys):
        code, out, _ = run_cli(
            capsys, "model", "upper-bound", "--residency", "C0=0.2,C1=0.8"
        )
        assert code == 0
        assert out == "savings 54.9%\n"

    def test_upper_bound_all_deep_is_zero(self, capsys):
        code, out, _ = run_cli(capsys, "model", "upper-bound", "--residency", "C6=1.0")
        assert code == 0
        assert out == "savings 0.0%\n"

    def test_estimate_prints_total_and_per_state(self, capsys):
        code, out, _ = run_cli(
            capsys, "model", "estimate", "--residency", "C0=0.5,C1=0.45,C6=0.05"
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "average power 2.653 W"
        assert any(line.split() == ["C0", "2", "W"] for line in lines[1:])
        assert any(line.split() == ["C1", "0.648", "W"] for line in lines[1:])

    def test_estimate_writes_document(self, capsys, tmp_path):
        out_path = tmp_path / "estimate.json"
        code, out, _ = run_cli(
            capsys,
            "model", "estimate",
            "--residency", "C6=1.0",
            "--out", str(out_path),
        )
        assert code == 0
        assert f"wrote {out_path}" in out
        doc = parse_document(out_path.read_text())
        assert doc["kind"] == "power_estimate"
        assert doc["results"]["avg_power_w"] == 0.1

    def test_estimate_aw_zero_penalty_golden(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "model", "estimate-aw",
            "--residency", "C0=0.5,C1=0.45,C6=0.05",
            "--freq-penalty", "0", "--delta-ns", "0",
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "baseline power 2.653 W"
        assert lines[1] == "agile estimate 2.14 W"
        assert lines[2] == "savings 19.3%"

    def test_estimate_aw_document(self, capsys, tmp_path):
        out_path = tmp_path / "aw.json"
        code, out, _ = run_cli(
            capsys,
            "model", "estimate-aw",
            "--residency", "C0=0.2,C1=0.8",
            "--freq-penalty", "0", "--delta-ns", "0",
            "--out", str(out_path),
        )
        assert code == 0
        doc = parse_document(out_path.read_text())
        assert doc["kind"] == "agile_power_estimate"
        assert doc["results"]["avg_power_w"] == 1.04
        assert doc["results"]["perf"]["freq_penalty"] == 0.0

    def test_trace_file_input(self, capsys, tmp_path):
        trace = tmp_path / "residency.csv"
        trace.write_text(
            "# duration_s=2.0\n"
            "state,fraction,transitions\n"
            "C0,0.5,100\nC1,0.45,100\nC6,0.05,10\n"
        )
        code, out, _ = run_cli(capsys, "model", "estimate", "--trace", str(trace))
        assert code == 0
        assert out.splitlines()[0] == "average power 2.653 W"

    def test_profile_required(self, capsys):
        code, _, err = run_cli(capsys, "model", "estimate")
        assert code == 1
        assert "give a profile" in err

    def test_bad_residency_sum_is_exit_1(self, capsys):
        code, _, err = run_cli(
            capsys, "model", "estimate", "--residency", "C0=0.5,C1=0.3"
        )
        assert code == 1
        assert "error: residency sum 0.8000" in err

    def test_malformed_residency_item(self, capsys):
        code, _, err = run_cli(capsys, "model", "estimate", "--residency", "C0:1.0")
        assert code == 1
        assert "expected NAME=FRACTION" in err

    def test_missing_trace_file_is_exit_2(self, capsys):
        code, _, err = run_cli(
            capsys, "model", "estimate", "--trace", "/nonexistent/r.csv"
        )
        assert code == 2
        assert "no such file" in err


# ---------------------------------------------------------------------------
# sim run / sweep


class TestSimCli:
    def test_run_prints_summary_and_writes_docs(self, capsys, sim_config, tmp_path):
        out_json = tmp_path / "report.json"
        out_csv = tmp_path / "plot.csv"
        code, out, _ = run_cli(
            capsys,
            "sim", "run",
            "--config", sim_config,
            "--out", str(out_json),
            "--plot", str(out_csv),
        )
        assert code == 0
        assert "avg power" in out
        assert "residency" in out
        doc = parse_document(out_json.read_text())
        assert doc["kind"] == "sim_report"
        assert doc["config"]["seed"] == 3
        plot = out_csv.read_text().splitlines()
        assert plot[0].startswith("variant,qps,avg_power_w")
        assert len(plot) == 2

    def test_run_is_deterministic_across_invocations(self, capsys, sim_config, tmp_path):
        hashes = []
        for name in ("a.json", "b.json"):
            out_json = tmp_path / name
            code, _, _ = run_cli(
                capsys, "sim", "run", "--config", sim_config, "--out", str(out_json)
            )
            assert code == 0
            hashes.append(canonical_hash(parse_document(out_json.read_text())))
        assert hashes[0] == hashes[1]

    def test_missing_config_is_exit_2(self, capsys):
        code, _, err = run_cli(capsys, "sim", "run", "--config", "/nonexistent.ini")
        assert code == 2
        assert "no such file" in err

    def test_sweep_table_and_document(self, capsys, sim_config, tmp_path):
        out_json = tmp_path / "sweep.json"
        code, out, _ = run_cli(
            capsys,
            "sim", "sweep",
            "--config", sim_config,
            "--qps", "1000,3000",
            "--variants", "baseline,agile",
            "--out", str(out_json),
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0].startswith("variant,qps,avg_power_w")
        rows = [line for line in lines[1:] if line.startswith(("baseline", "agile"))]
        assert len(rows) == 4
        doc = parse_document(out_json.read_text())
        assert doc["kind"] == "sweep"
        assert len(doc["results"]["points"]) == 4

    def test_sweep_accepts_config_defined_variant(self, capsys, sim_config):
        code, out, _ = run_cli(
            capsys,
            "sim", "sweep",
            "--config", sim_config,
            "--qps", "1000",
            "--variants", "baseline,custom_pair",
        )
        assert code == 0
        assert any(line.startswith("custom_pair,") for line in out.splitlines())

    def test_sweep_unknown_variant_is_usage_error(self, capsys, sim_config):
        with pytest.raises(SystemExit) as exc:
            main(
                [
                    "sim", "sweep",
                    "--config", sim_config,
                    "--qps", "1000",
                    "--variants", "warp_drive",
                ]
            )
        assert exc.value.code == 2
        err = capsys.readouterr().err
        assert "unknown variant 'warp_drive'" in err
        for name in BUILTIN_VARIANTS:
            assert name in err

    def test_demo_self_checks_pass(self, capsys):
        code, out, _ = run_cli(capsys, "sim", "demo", "--duration", "0.05")
        assert code == 0
        assert "demo checks pass" in out


# ---------------------------------------------------------------------------
# fsm trace


class TestFsmCli:
    def test_entry_trace_text(self, capsys):
        code, out, _ = run_cli(
            capsys, "fsm", "trace", "--flow", "entry", "--variant", "C6A"
        )
        assert code == 0
        assert out.splitlines()[0] == "C6A entry @ 500 MHz, total 18 ns"

    def test_exit_trace_respects_zone_flags(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "fsm", "trace", "--flow", "exit", "--variant", "C6AE",
            "--zones", "1", "--zone-ns", "15",
        )
        assert code == 0
        assert "total 23 ns" in out.splitlines()[0]

    def test_reference_flow_trace(self, capsys):
        code, out, _ = run_cli(
            capsys, "fsm", "trace", "--flow", "exit", "--variant", "C6"
        )
        assert code == 0
        assert "total 30000 ns" in out.splitlines()[0]

    def test_csv_output(self, capsys, tmp_path):
        csv_path = tmp_path / "steps.csv"
        code, out, _ = run_cli(
            capsys,
            "fsm", "trace", "--flow", "snoop", "--variant", "C6A",
            "--csv", str(csv_path),
        )
        assert code == 0
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "step,cycles,fixed_ns,cum_ns"
        assert len(lines) > 1

    def test_snoop_flow_for_reference_variant_rejected(self, capsys):
        code, _, err = run_cli(
            capsys, "fsm", "trace", "--flow", "snoop", "--variant", "C1"
        )
        assert code == 1
        assert "error:" in err


# ---------------------------------------------------------------------------
# validate


class TestValidateCli:
    def test_default_catalog_passes(self, capsys):
        code, out, _ = run_cli(capsys, "validate")
        assert code == 0
        assert "all checks passed" in out
        assert "FAIL" not in out
        assert out.count("PASS") >= 15

    def test_broken_catalog_fails_power_ordering(self, capsys, tmp_path):
        # Raise C6A above C1E so exactly the ordering check trips.
        broken = dumps_catalog(default_catalog()).replace(
            "power_w = 0.3\n", "power_w = 2.0\n"
        )
        assert "power_w = 2.0" in broken
        path = tmp_path / "broken.ini"
        path.write_text(broken)
        code, out, _ = run_cli(capsys, "validate", "--catalog", str(path))
        assert code == 1
        fails = [line for line in out.splitlines() if line.startswith("FAIL")]
        assert len(fails) == 1
        assert "power strictly decreasing" in fails[0]
        assert "1 failure(s)" in out


# ---------------------------------------------------------------------------
# parser plumbing


class TestParserPlumbing:
    @pytest.mark.parametrize(
        "argv",
        [
            ["--help"],
            ["model", "--help"],
            ["model", "upper-bound", "--help"],
            ["model", "estimate", "--help"],
            ["model", "estimate-aw", "--help"],
            ["sim", "--help"],
            ["sim", "run", "--help"],
            ["sim", "sweep", "--help"],
            ["sim", "demo", "--help"],
            ["fsm", "trace", "--help"],
            ["validate", "--help"],
        ],
    )
    def test_help_exits_zero(self, argv, capsys):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 0
        assert capsys.readouterr().out

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert capsys.readouterr().out.startswith("cstatesim ")

    def test_no_command_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_module_entry_point(self):
        import cstatesim.__main__  # noqa: F401 - import must succeed
