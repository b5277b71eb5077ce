"""Command-line interface: subcommands, exit codes, emitted files."""

import pytest

from dynaboost.harness.cli import (
    EXIT_CONFIG,
    EXIT_DIVERGED,
    EXIT_OK,
    build_parser,
    main,
)

TINY_YAML = """\
name: tiny
env:
  kind: lds
  k: 1
  d: 1
  rho: 0.7
disturbance:
  kind: iid_gaussian
  std: 0.1
T: 40
H: 3
N: 2
runs: 2
seed: 12345
baselines: [single, lqr, zero]
"""


def write_cfg(tmp_path, text=TINY_YAML, name="exp.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestParser:
    def test_subcommands_present(self):
        parser = build_parser()
        for argv in (
            ["run", "--config", "x.yaml"],
            ["sanity"],
            ["correlated"],
            ["pendulum"],
            ["overparam"],
            ["gradcheck"],
        ):
            args = parser.parse_args(argv)
            assert args.command == argv[0]

    def test_run_requires_config(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["run"])

    def test_missing_command_rejected(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])


class TestExitCodes:
    def test_missing_config_file(self, tmp_path, capsys):
        code = main(["run", "--config", str(tmp_path / "nope.yaml")])
        assert code == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_invalid_config_contents(self, tmp_path, capsys):
        p = write_cfg(tmp_path, "T: -5\n")
        code = main(["run", "--config", str(p)])
        assert code == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "T" in err and str(p) in err

    def test_successful_run(self, tmp_path, capsys):
        p = write_cfg(tmp_path)
        out = tmp_path / "results"
        code = main(["run", "--config", str(p), "--out", str(out)])
        assert code == EXIT_OK
        stdout = capsys.readouterr().out
        assert stdout.startswith("tiny:")
        for alg in ("boosted", "single", "lqr", "zero"):
            assert alg in stdout
        for suffix in ("tiny_raw.csv", "tiny_aggregate.csv", "tiny.svg", "tiny_manifest.json"):
            assert (out / suffix).exists()

    def test_divergence_exit_code(self, tmp_path, capsys):
        text = TINY_YAML + "divergence_threshold: 0.05\n"
        p = write_cfg(tmp_path, text)
        code = main(["run", "--config", str(p), "--out", str(tmp_path / "r")])
        assert code == EXIT_DIVERGED
        assert "diverged" in capsys.readouterr().err

    def test_unwritable_output(self, tmp_path, capsys):
        p = write_cfg(tmp_path)
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        code = main(["run", "--config", str(p), "--out", str(blocker / "sub")])
        assert code == EXIT_CONFIG
        assert "not writable" in capsys.readouterr().err

    def test_gradcheck_passes(self, capsys):
        code = main(["gradcheck"])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 6
        assert all(line.startswith("ok") for line in lines)


class TestOverrides:
    def test_seed_and_runs_override(self, tmp_path):
        p = write_cfg(tmp_path)
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(["run", "--config", str(p), "--out", str(out_a), "--runs", "1"]) == EXIT_OK
        assert (
            main(
                ["run", "--config", str(p), "--out", str(out_b), "--runs", "1", "--seed", "777"]
            )
            == EXIT_OK
        )
        raw_a = (out_a / "tiny_raw.csv").read_text()
        raw_b = (out_b / "tiny_raw.csv").read_text()
        assert raw_a != raw_b  # different seed draws a different system
        assert raw_a.count("\n") == raw_b.count("\n")

    def test_identical_invocations_byte_identical(self, tmp_path):
        import json

        p = write_cfg(tmp_path)
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        for out in (out_a, out_b):
            assert main(["run", "--config", str(p), "--out", str(out)]) == EXIT_OK
        for fname in ("tiny_raw.csv", "tiny_aggregate.csv", "tiny.svg"):
            assert (out_a / fname).read_bytes() == (out_b / fname).read_bytes()
        manifests = []
        for out in (out_a, out_b):
            m = json.loads((out / "tiny_manifest.json").read_text())
            m["config"].pop("out")
            manifests.append(m)
        assert manifests[0] == manifests[1]

    def test_parallel_run_matches_serial(self, tmp_path):
        p = write_cfg(tmp_path)
        out_s = tmp_path / "serial"
        out_p = tmp_path / "parallel"
        assert main(["run", "--config", str(p), "--out", str(out_s)]) == EXIT_OK
        assert (
            main(["run", "--config", str(p), "--out", str(out_p), "--parallel", "2"]) == EXIT_OK
        )
        assert (out_s / "tiny_raw.csv").read_bytes() == (out_p / "tiny_raw.csv").read_bytes()

    def test_suite_flags_respected(self, tmp_path, capsys):
        code = main(
            [
                "correlated",
                "--runs",
                "1",
                "--t",
                "30",
                "--out",
                str(tmp_path / "c"),
            ]
        )
        assert code == EXIT_OK
        out = capsys.readouterr().out
        for name in ("walk_gpc", "sine_gpc", "walk_rnn"):
            assert name in out
            assert (tmp_path / "c" / f"{name}_raw.csv").exists()
