import csv
import io
import json
import math

import pytest

from qfiprotect.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_body(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


class TestExitCodes:
    def test_missing_subcommand(self, capsys):
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 1

    def test_bad_flag_value(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["qfi", "--n-total", "three"])
        assert info.value.code == 1

    def test_even_block(self, capsys):
        code, _, err = run(capsys, "qfi", "--block-size", "2")
        assert code == 1 and "odd" in err

    def test_negative_rate(self, capsys):
        assert run(capsys, "qfi", "--gamma-x", "-1")[0] == 1

    def test_oracle_cap(self, capsys):
        code, _, err = run(capsys, "qfi", "--n-total", "11", "--oracle")
        assert code == 2 and "numerical" in err

    def test_bad_pauli_reports_position(self, capsys):
        code, _, err = run(capsys, "check", "--errors", "ZII,IQI")
        assert code == 1 and "--errors:1:6" in err

    def test_mismatched_lengths(self, capsys):
        assert run(capsys, "check", "--errors", "ZII,ZI")[0] == 1

    def test_zero_trials(self, capsys):
        assert run(capsys, "montecarlo", "--trials", "0")[0] == 1

    def test_workers(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["qfi", "--workers", "0"])
        assert info.value.code == 1


class TestQfi:
    def test_noiseless_crb(self, capsys):
        code, out, _ = run(capsys, "qfi", "--n-total", "5", "--time", "2", "--omega", "0.1")
        assert code == 0
        (row,) = csv_body(out)
        assert float(row["crb_raw"]) == pytest.approx(1 / (5 * 2), rel=1e-12)
        assert float(row["qfi_raw"]) == pytest.approx(100, rel=1e-12)

    def test_header_and_precision(self, capsys):
        _, out, _ = run(capsys, "qfi", "--gamma-z", "0.1", "--time", "0.7")
        meta = [l for l in out.splitlines() if l.startswith("#")]
        assert any(l.startswith("# tool: qfiprotect") for l in meta)
        assert "# gamma_z: 0.10000000000000001" in meta
        row = csv_body(out)[0]
        assert float(row["qfi_raw"]) == pytest.approx(9 * 0.49 * (1 - 2 * 0.5 * (1 - math.exp(-0.07))) ** 6, rel=1e-14)

    def test_grid(self, capsys):
        _, out, _ = run(capsys, "qfi", "--t-min", "0.1", "--t-max", "1", "--points", "4", "--block-size", "1,3")
        rows = csv_body(out)
        assert len(rows) == 8 and {r["n"] for r in rows} == {"1", "3"}

    def test_oracle_columns(self, capsys):
        _, out, _ = run(capsys, "qfi", "--n-total", "3", "--gamma-x", "0.2", "--gamma-z", "0.1", "--oracle", "--block-size", "3")
        row = csv_body(out)[0]
        assert float(row["qfi_raw_oracle"]) == pytest.approx(float(row["qfi_raw"]), rel=1e-9)
        assert float(row["qfi_logical_oracle"]) == pytest.approx(float(row["qfi_logical"]), rel=1e-9)

    def test_json(self, capsys):
        _, out, _ = run(capsys, "qfi", "--format", "json")
        data = json.loads(out)
        assert data["columns"][0] == "t" and len(data["rows"]) == 1

    def test_output_file(self, capsys, tmp_path):
        target = tmp_path / "q.csv"
        code, out, _ = run(capsys, "qfi", "--output", str(target))
        assert code == 0 and out == "" and target.read_text().startswith("#")


class TestConfig:
    def test_config_values_and_override(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# scenario\nn-total = 5\ntime = 2\n")
        _, out, _ = run(capsys, "qfi", "--config", str(cfg))
        assert float(csv_body(out)[0]["crb_raw"]) == pytest.approx(1 / 10)
        _, out, _ = run(capsys, "qfi", "--config", str(cfg), "--time", "4")
        assert float(csv_body(out)[0]["crb_raw"]) == pytest.approx(1 / 20)

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("colour = red\n")
        code, _, err = run(capsys, "qfi", "--config", str(cfg))
        assert code == 1 and "colour" in err

    def test_malformed_line(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n-total 5\n")
        code, _, err = run(capsys, "qfi", "--config", str(cfg))
        assert code == 1 and ":1:" in err

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "qfi", "--config", str(tmp_path / "nope"))[0] == 1


class TestCheck:
    def test_immune_set(self, capsys):
        code, out, _ = run(capsys, "check", "--builder", "theorem3", "--errors", "ZII,IZI,IIZ,XXX")
        data = json.loads(out)
        assert code == 0 and data["preserved"] and data["errors"][0] == "III"
        assert data["qfi_after"] == pytest.approx(data["qfi_before"], rel=1e-9)

    def test_logical_error(self, capsys):
        _, out, _ = run(capsys, "check", "--builder", "theorem3", "--errors", "ZZZ")
        data = json.loads(out)
        assert not data["preserved"] and data["qfi_after"] == pytest.approx(0, abs=1e-9)

    def test_errors_file(self, capsys, tmp_path):
        f = tmp_path / "errs.txt"
        f.write_text("ZII\nIZI  # comment\nIIZ,XXX\n")
        _, out, _ = run(capsys, "check", "--builder", "theorem3", "--errors-file", str(f))
        assert json.loads(out)["preserved"]

    def test_custom_ghz(self, capsys):
        _, out, _ = run(capsys, "check", "--probe", "ghz", "--errors", "XII")
        assert json.loads(out)["preserved"]
        _, out, _ = run(capsys, "check", "--probe", "ghz", "--errors", "ZII")
        assert not json.loads(out)["preserved"]


class TestImmuneSet:
    def test_n1(self, capsys):
        _, out, _ = run(capsys, "immune-set", "1")
        assert sorted(out.split()) == ["I", "X"]

    def test_n3(self, capsys):
        _, out, _ = run(capsys, "immune-set", "3", "--format", "json")
        data = json.loads(out)
        assert data["t"] == 1 and len(data["errors"]) == 8

    def test_n5_every_string_passes(self, capsys):
        _, out, _ = run(capsys, "immune-set", "5")
        labels = out.split()
        assert len(labels) == 32
        _, out, _ = run(capsys, "check", "--builder", "theorem3", "--errors", ",".join(labels))
        assert json.loads(out)["preserved"]

    def test_even(self, capsys):
        assert run(capsys, "immune-set", "4")[0] == 1


class TestFigures:
    def test_figure3_series(self, capsys):
        _, out, _ = run(capsys, "figure", "3", "--points", "5")
        rows = csv_body(out)
        assert {r["n"] for r in rows} == {"1", "3", "5", "15"} and len(rows) == 20

    def test_figure4_rows(self, capsys):
        _, out, _ = run(capsys, "figure", "4", "--n-max", "30")
        rows = csv_body(out)
        assert sorted({int(r["N"]) for r in rows}) == [3, 9, 15, 21, 27]
        assert len(rows) == 5 * 4
        r = rows[0]
        assert float(r["inv_n"]) == pytest.approx(1 / 3) and float(r["3_over_n"]) == pytest.approx(1.0)

    def test_figure4_single_pair(self, capsys):
        _, out, _ = run(capsys, "figure", "4", "--n-max", "9", "--gamma-x", "0", "--gamma-z", "0")
        rows = csv_body(out)
        assert len(rows) == 2 * 2
        for r in rows:
            expected = 1 / int(r["N"]) if r["scenario"].startswith("raw") else 1 / (int(r["N"]) // 3)
            assert float(r["crb"]) == pytest.approx(expected, rel=1e-12)

    def test_workers_match(self, capsys):
        a = run(capsys, "figure", "3", "--points", "6")[1]
        b = run(capsys, "figure", "3", "--points", "6", "--workers", "3")[1]
        assert a == b


class TestMontecarlo:
    def test_repeatable(self, capsys):
        argv = ["montecarlo", "--trials", "20", "--nu", "200", "--seed", "5"]
        a = run(capsys, *argv)[1]
        assert a == run(capsys, *argv)[1]
        data = json.loads(a)
        assert data["rng"] == "numpy.random.PCG64" and data["trials"] == 20

    def test_immune(self, capsys):
        code, out, _ = run(capsys, "montecarlo", "--scheme", "immune", "--trials", "10", "--nu", "300")
        assert code == 0 and json.loads(out)["scenario"].startswith("immune-n3")

    def test_immune_theta_range(self, capsys):
        assert run(capsys, "montecarlo", "--scheme", "immune", "--theta", "2")[0] == 1
