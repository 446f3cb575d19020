import csv
import io

import pytest

from cobweb.cli import main
from cobweb.packing import CSV_HEADER


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_optimize_row(capsys):
    code, out, _ = run(capsys, "optimize", "--u", "6", "--v", "6", "--w", "6", "--sites", "A2+E")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert out.splitlines()[0] == CSV_HEADER
    assert rows[0]["sites"] == "A2+E"
    assert float(rows[0]["r_opt"]) == pytest.approx(0.57941, abs=2e-4)


def test_optimize_records(capsys):
    code, out, _ = run(capsys, "optimize", "--u", "5", "--v", "4", "--w", "5", "--sites", "Q+F03",
                       "--format", "records")
    assert code == 0 and '"delta": "0.543' in out


def test_invalid_parameters(capsys):
    code, _, err = run(capsys, "optimize", "--u", "3", "--v", "3", "--w", "3", "--sites", "A2")
    assert code == 2
    assert err.startswith("HyperbolicityViolation:") and len(err.strip().splitlines()) == 1


def test_duplicate_site(capsys):
    code, _, err = run(capsys, "optimize", "--u", "4", "--v", "5", "--w", "4", "--sites", "A2+A2")
    assert code == 2 and err.startswith("DuplicateSite:")


def test_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["optimize", "--u", "4"])
    assert exc.value.code == 2
    assert capsys.readouterr().err.startswith("UsageError:")


def test_reproduce_single_table(capsys, tmp_path):
    out = tmp_path / "t16.csv"
    code, _, err = run(capsys, "reproduce", "--tables", "16", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == CSV_HEADER and len(lines) == 4
    assert "3/3 rows within tolerance" in err


def test_reproduce_flagged_table(capsys, tmp_path):
    out = tmp_path / "t12.csv"
    code, _, err = run(capsys, "reproduce", "--tables", "12", "--out", str(out))
    assert code == 4
    assert len(out.read_text().splitlines()) == 4
    assert err.count("flagged:") == 2


def test_reproduce_unknown_table(capsys):
    code, _, err = run(capsys, "reproduce", "--tables", "99")
    assert code == 2 and err.startswith("UnknownTable:")


def test_reproduce_io_error(capsys, tmp_path):
    code, _, err = run(capsys, "reproduce", "--tables", "16", "--out", str(tmp_path / "no" / "x.csv"))
    assert code == 5 and err.startswith("IOError:")


def test_reproduce_deterministic_across_jobs(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "reproduce", "--tables", "8,9,10", "--out", str(a))
    run(capsys, "reproduce", "--tables", "8,9,10", "--out", str(b), "--jobs", "3")
    assert a.read_bytes() == b.read_bytes()


def test_group_verify_w(capsys):
    code, out, _ = run(capsys, "group", "verify-w", "--u", "6", "--v", "6", "--w", "6")
    assert code == 0 and out.strip().splitlines()[-1].startswith("# PASS")


def test_group_presentation(capsys):
    code, out, _ = run(capsys, "group", "presentation", "--z", "5")
    assert code == 0
    assert out.startswith("# Cw(10) series=second z=5 q=1")


def test_group_verify_cw_second_series(capsys):
    code, _, err = run(capsys, "group", "verify-cw", "--z", "5")
    assert code == 2 and err.startswith("WrongSeries:")


def test_group_verify_cw_reports_residuals(capsys):
    code, out, _ = run(capsys, "group", "verify-cw", "--z", "3")
    # relators fail for the given words; the report still lists each one
    assert code == 4
    assert sum(1 for line in out.splitlines() if line.startswith("e")) == 6


def test_group_even_z(capsys):
    code, _, err = run(capsys, "group", "presentation", "--z", "4")
    assert code == 2 and err.startswith("EvenZ:")


def test_sites_and_volume(capsys):
    code, out, _ = run(capsys, "sites", "--u", "4", "--v", "5", "--w", "4")
    assert code == 0 and "A2,0.000000000,0.000000000,0.899453720,0.000000000,16" in out
    code, out, _ = run(capsys, "volume", "--u", "4", "--v", "5", "--w", "4", "--r", "0.51921")
    assert code == 0
    assert out.splitlines()[0] == "vol_O\t0.430620760073"
    assert out.splitlines()[2].startswith("ball(0.51921)\t0.6187")
