import csv
import io
from contextlib import redirect_stdout

import pytest

from gtlab import __version__
from gtlab.cli import build_parser, main


def run_cli(argv):
    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = main(argv)
    return code, buffer.getvalue()


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


def test_bounds_csv_shape(tmp_path):
    out = tmp_path / "bounds.csv"
    code, _ = run_cli(["bounds", "--model", "noise-free", "-N", "1000", "-K", "5",
                       "--out", str(out)])
    assert code == 0
    rows = read_rows(out)
    header, body = rows[0], rows[1:]
    assert header == ["kind", "N", "K", "p", "channel", "param", "i",
                      "numerator_bits", "mi_bits", "ratio_tests", "version"]
    assert len(body) == 6  # five per-i rows plus the i = -1 summary
    assert [r[6] for r in body] == ["1", "2", "3", "4", "5", "-1"]
    assert all(r[-1] == __version__ for r in body)
    # default p is recorded explicitly
    assert all(r[3] == "0.2" for r in body)


def test_bounds_both_kinds(tmp_path):
    out = tmp_path / "bounds.csv"
    code, _ = run_cli(["bounds", "--model", "dilution", "--u", "0.2", "-N", "50",
                       "-K", "3", "--kind", "both", "--out", str(out)])
    assert code == 0
    body = read_rows(out)[1:]
    assert [r[0] for r in body].count("achievable") == 4
    assert [r[0] for r in body].count("fano") == 4


def test_estimate_rerun_is_byte_identical(tmp_path):
    args = ["estimate", "--model", "additive", "--q", "0.2", "-N", "40", "-K", "2",
            "-T", "120", "--trials", "200", "--seed", "1"]
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli(args + ["--out", str(first)])[0] == 0
    assert run_cli(args + ["--out", str(second), "--threads", "4"])[0] == 0
    assert first.read_bytes() == second.read_bytes()
    assert b"\r" not in first.read_bytes()


def test_estimate_stdout_csv():
    code, text = run_cli(["estimate", "--model", "noise-free", "-N", "12", "-K", "2",
                          "-T", "30", "--trials", "50", "--seed", "2", "--format", "csv"])
    assert code == 0
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0][:4] == ["criterion", "N", "K", "T"]
    assert rows[1][0] == "average"


def test_profile_adds_an_i_column(tmp_path):
    out = tmp_path / "profile.csv"
    code, _ = run_cli(["estimate", "--model", "noise-free", "-N", "12", "-K", "2",
                       "-T", "6", "--trials", "100", "--seed", "2", "--profile",
                       "--out", str(out)])
    assert code == 0
    rows = read_rows(out)
    assert rows[0][-2:] == ["i", "version"]
    body = rows[1:]
    assert body[0][0] == "average"
    profile_rows = [r for r in body if r[0] == "profile"]
    assert [r[-2] for r in profile_rows] == ["0", "1", "2"]
    # profile error counts sum to the average error count
    assert sum(int(r[9]) for r in profile_rows) == int(body[0][9])


def test_sweep_emits_one_row_per_t(tmp_path):
    out = tmp_path / "sweep.csv"
    code, _ = run_cli(["sweep", "--model", "noise-free", "-N", "12", "-K", "2",
                       "--t-grid", "5:25:5", "--trials", "50", "--seed", "4",
                       "--out", str(out)])
    assert code == 0
    body = read_rows(out)[1:]
    assert [r[3] for r in body] == ["5", "10", "15", "20", "25"]


def test_minimal_t_reports_star(tmp_path):
    out = tmp_path / "mt.csv"
    code, text = run_cli(["minimal-t", "--model", "noise-free", "-N", "16", "-K", "1",
                          "--target", "0.2", "--t-grid", "1:40:6", "--trials", "100",
                          "--seed", "3", "--out", str(out)])
    assert code == 0
    assert "t_star = " in text
    assert len(read_rows(out)) >= 2


def test_seed_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("GT_LAB_SEED", "777")
    out = tmp_path / "est.csv"
    code, _ = run_cli(["estimate", "--model", "noise-free", "-N", "10", "-K", "1",
                       "-T", "20", "--trials", "20", "--out", str(out)])
    assert code == 0
    assert read_rows(out)[1][12] == "777"


@pytest.mark.parametrize(
    "argv",
    [
        ["estimate", "--model", "additive", "-N", "10", "-K", "2", "-T", "5", "--trials", "5"],
        ["estimate", "--model", "additive", "--q", "0.2", "--u", "0.1", "-N", "10", "-K", "2",
         "-T", "5", "--trials", "5"],
        ["estimate", "--model", "noise-free", "--q", "0.2", "-N", "10", "-K", "2", "-T", "5",
         "--trials", "5"],
        ["estimate", "--model", "noise-free", "-N", "10", "-K", "12", "-T", "5", "--trials", "5"],
        ["estimate", "--model", "noise-free", "-N", "10", "-K", "2", "-T", "5", "--trials", "5",
         "--criterion", "partial"],
        ["sweep", "--model", "noise-free", "-N", "10", "-K", "2", "--t-grid", "5:1:2",
         "--trials", "5"],
        ["bounds", "--model", "additive", "--q", "1.5", "-N", "10", "-K", "2"],
    ],
)
def test_validation_errors_exit_2(argv):
    assert main(argv) == 2


def test_capacity_errors_exit_3():
    assert main(["estimate", "--model", "noise-free", "-N", "80", "-K", "9", "-T", "5",
                 "--trials", "5"]) == 3


def test_help_lists_every_flag():
    parser = build_parser()
    text = ""
    for name, sub in parser._subparsers._group_actions[0].choices.items():
        text += sub.format_help()
    for flag in ("--model", "--q", "--u", "-N", "-K", "-T", "--p", "--alpha",
                 "--criterion", "--trials", "--seed", "--t-grid", "--target",
                 "--out", "--format", "--threads", "--kind", "--criteria", "--profile"):
        assert flag in text, flag
    # defaults are spelled out
    assert "default: noise-free" in text
    assert "default: 1/K" in text


def test_accept_subset_runs():
    code, text = run_cli(["accept", "--criteria", "1"])
    assert code == 0
    assert "PASS" in text and "criterion  1" in text
