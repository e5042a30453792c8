import csv
import io
import math

import pytest

from qsdistill.cli import build_parser, config_from_args, fmt, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def table(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    return rows


def test_fmt():
    assert fmt(0.0) == "0"
    assert fmt(-0.0) == "0"
    assert fmt(None) == ""
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(0.52) == "0.52"


def test_fig1_rows(capsys):
    code, out = run_cli(capsys, "fig1", "--points", "99")
    assert code == 0
    rows = {float(r["p1"]): r for r in table(out)}
    assert len(rows) == 99
    assert float(rows[0.5]["c_initial"]) == pytest.approx(0.5, abs=1e-12)
    assert float(rows[0.5]["c_distilled"]) == pytest.approx(0.5, abs=1e-12)
    assert float(rows[0.6]["c_distilled"]) == pytest.approx(0.36 / 0.52, abs=1e-11)
    assert float(rows[0.99]["c_distilled"]) > 0.9998


def test_fig2_rows(capsys):
    code, out = run_cli(capsys, "fig2", "--points", "99")
    assert code == 0
    rows = {float(r["p1"]): r for r in table(out)}
    assert float(rows[0.3]["p_strict"]) == pytest.approx(0.045, abs=1e-12)
    assert float(rows[0.3]["p_both"]) == pytest.approx(0.58, abs=1e-12)
    assert min(float(r["p_both"]) for r in rows.values()) == pytest.approx(0.5, abs=1e-12)
    assert float(rows[0.99]["p_strict"]) < 0.5


def test_fig3_initial_row_default_configuration(capsys):
    code, out = run_cli(capsys, "fig3", "--points", "11")
    assert code == 0
    first = table(out)[0]
    assert float(first["tau"]) == 0
    assert float(first["c_undistilled"]) == pytest.approx(1.0, abs=1e-12)
    # keeping both +- and -+ of a singlet pair accepts every branch
    assert float(first["p_success"]) == pytest.approx(1.0, abs=1e-12)


def test_fig3_initial_row_singlet_configuration(capsys):
    code, out = run_cli(capsys, "fig3", "--points", "11", "--policy", "strict-pm", "--not", "ancilla", "--sz")
    assert code == 0
    first = table(out)[0]
    assert float(first["p_success"]) == pytest.approx(0.5, abs=1e-12)
    assert float(first["c_distilled"]) == pytest.approx(1.0, abs=1e-12)


def test_fig3_zero_temperature_gain_iff_above_half(capsys):
    code, out = run_cli(capsys, "fig3", "--nbar", "0", "--points", "201")
    assert code == 0
    for r in table(out):
        cu, cd = float(r["c_undistilled"]), float(r["c_distilled"])
        if abs(cu - 0.5) < 1e-9:
            continue
        assert (cd >= cu) == (cu > 0.5)


def test_fig3_gain_interval_at_low_temperature(capsys):
    code, out = run_cli(capsys, "fig3", "--points", "101")
    assert code == 0
    gains = [float(r["tau"]) for r in table(out) if float(r["c_distilled"]) > float(r["c_undistilled"])]
    assert gains and min(gains) < 0.5


def test_evolve_concurrence_at_ln2(capsys):
    code, out = run_cli(capsys, "evolve", "--tmax", repr(2 * math.log(2)), "--points", "3")
    assert code == 0
    rows = table(out)
    assert len(rows[0]) == 1 + 32 + 1
    assert float(rows[1]["concurrence"]) == pytest.approx(0.5, abs=1e-12)


def test_evolve_rk4_matches_closed_form(capsys):
    _, closed = run_cli(capsys, "evolve", "--nbar", "0.01", "--tmax", "1", "--points", "3")
    _, rk4 = run_cli(capsys, "evolve", "--nbar", "0.01", "--tmax", "1", "--points", "3", "--dt", "1e-3")
    for a, b in zip(table(closed), table(rk4)):
        for key in a:
            assert float(a[key] or 0) == pytest.approx(float(b[key] or 0), abs=1e-9)


def test_distill_vacuum_singlet(capsys):
    code, out = run_cli(capsys, "distill", "--tmax", "1", "--not", "ancilla", "--sz")
    assert code == 0
    final = table(out)[-1]
    assert final["outcome"] == "distilled"
    assert float(final["prob"]) == pytest.approx(math.exp(-2) / 2, abs=1e-12)
    assert final["nearest_bell"] == "PhiMinus"
    assert float(final["fidelity"]) == pytest.approx(1.0, abs=1e-12)


def test_classify_rank2(capsys):
    code, out = run_cli(capsys, "classify", "--p1", "0.5")
    assert code == 0
    assert table(out) == [{"family": "Case1Rank2", "verdict": "NonQuasiSeparable", "witness": "none"}]


def test_classify_thermal_is_unclassified(capsys):
    code, out = run_cli(capsys, "classify", "--tmax", "1", "--nbar", "0.01")
    assert code == 0
    assert table(out)[0]["family"] == "Unclassified"


def test_output_file(tmp_path, capsys):
    path = tmp_path / "fig1.csv"
    assert main(["fig1", "--points", "5", "--out", str(path)]) == 0
    assert capsys.readouterr().out == ""
    text = path.read_bytes()
    assert text.startswith(b"p1,c_initial,c_distilled\n")
    assert b"\r" not in text


def test_unwritable_output(tmp_path, capsys):
    assert main(["fig1", "--points", "5", "--out", str(tmp_path / "missing" / "x.csv")]) != 0


@pytest.mark.parametrize(
    "argv",
    [
        ["fig1", "--points", "1"],
        ["fig3", "--tmax", "0"],
        ["fig3", "--nbar", "-1"],
        ["fig1", "--gamma", "abc"],
        ["fig1", "--bogus"],
        ["distill", "--p1", "1.5"],
        ["frobnicate"],
        ["fig1", "--policy", "maybe"],
    ],
)
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code != 0


def test_command_defaults():
    parser = build_parser()
    fig3 = config_from_args(parser.parse_args(["fig3"]))
    assert fig3.nbar == 0.001 and fig3.policy == "both"
    evolve = config_from_args(parser.parse_args(["evolve"]))
    assert evolve.nbar == 0.0 and evolve.points == 200 and evolve.t_max == 5.0


def test_audit_exits_zero_and_reports_divergence(capsys):
    code, out = run_cli(capsys, "audit")
    assert code == 0
    assert "[2]" in out and "[3]" in out
    assert "max |c1_published - c_wootters|" in out


def test_identical_runs_are_byte_identical(capsys):
    for argv in (["fig1", "--points", "20"], ["fig3", "--points", "15"], ["distill", "--p1", "0.7", "--policy", "both"]):
        _, a = run_cli(capsys, *argv)
        _, b = run_cli(capsys, *argv)
        assert a == b
