import csv
import json

import pytest

from rara import cli


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestParseGrid:
    def test_comma_list(self):
        assert cli.parse_grid("0.4,0.8") == (0.4, 0.8)
        assert cli.parse_grid("1,5,10", int) == (1, 5, 10)

    def test_range(self):
        assert cli.parse_grid("1:5:1", int) == (1, 2, 3, 4, 5)
        grid = cli.parse_grid("0.1:0.5:0.1")
        assert grid == pytest.approx((0.1, 0.2, 0.3, 0.4, 0.5))

    def test_bad_range(self):
        with pytest.raises(ValueError):
            cli.parse_grid("1:5")
        with pytest.raises(ValueError):
            cli.parse_grid("1:5:0")


class TestValidateSpec:
    def base(self, **overrides):
        raw = {"mode": "theory", "lambda_grid": "0.8", "m_grid": "10",
               "output_path": "out.csv"}
        raw.update(overrides)
        return raw

    def test_defaults(self):
        spec = cli.validate_spec(self.base())
        assert spec.epsilon == 0.1
        assert spec.format == "csv"
        assert spec.n_sessions == 10**6
        assert spec.seed == 0

    def test_empty_lambda_grid(self):
        with pytest.raises(cli.SpecValidationError) as exc:
            cli.validate_spec(self.base(lambda_grid=""))
        assert any("lambda_grid" in p for p in exc.value.problems)

    def test_epsilon_out_of_range(self):
        with pytest.raises(cli.SpecValidationError) as exc:
            cli.validate_spec(self.base(epsilon=1.5))
        assert any("epsilon" in p and "(0, 1]" in p for p in exc.value.problems)

    def test_phy_requires_snr(self):
        with pytest.raises(cli.SpecValidationError) as exc:
            cli.validate_spec({"mode": "phy", "m_grid": "2",
                               "output_path": "out.csv"})
        assert any("snr_db" in p for p in exc.value.problems)

    def test_all_failures_reported_at_once(self):
        with pytest.raises(cli.SpecValidationError) as exc:
            cli.validate_spec({"mode": "bogus", "lambda_grid": "",
                               "m_grid": "", "epsilon": 3.0,
                               "output_path": ""})
        fields = " ".join(exc.value.problems)
        for name in ("mode", "lambda_grid", "m_grid", "epsilon", "output_path"):
            assert name in fields


class TestTheoryMode:
    def test_row_count_and_shape(self, tmp_path):
        out = tmp_path / "t.csv"
        rc = cli.main(["theory", "--lambda", "0.8", "--m", "1:30:1",
                       "--epsilon", "0.1", "--out", str(out)])
        assert rc == 0
        rows = read_csv(out)
        assert len(rows) == 30
        eta = [float(r["throughput_exact"]) for r in rows]
        assert eta[0] > eta[4] and eta[29] > eta[4]

    def test_zero_rate_all_zero(self, tmp_path):
        out = tmp_path / "z.csv"
        assert cli.main(["theory", "--lambda", "0", "--m", "3,7",
                         "--out", str(out)]) == 0
        for row in read_csv(out):
            for col in ("throughput_exact", "throughput_approx",
                        "outage_exact", "outage_approx"):
                assert float(row[col]) == 0.0

    def test_header_stable(self, tmp_path):
        out = tmp_path / "h.csv"
        cli.main(["theory", "--lambda", "0.8", "--m", "10", "--out", str(out)])
        header = out.read_text().splitlines()[0].split(",")
        assert header == cli.THEORY_COLUMNS

    def test_unit_load_flagged(self, tmp_path):
        out = tmp_path / "u.csv"
        cli.main(["theory", "--lambda", "0.8,1.0", "--m", "10", "--out", str(out)])
        rows = read_csv(out)
        assert rows[0]["u_discontinuity"] == "0"
        assert rows[1]["u_discontinuity"] == "1"
        assert float(rows[1]["asymptotic_throughput"]) == 0.5

    def test_round_trippable_floats(self, tmp_path):
        out = tmp_path / "r.csv"
        cli.main(["theory", "--lambda", "0.8", "--m", "10", "--out", str(out)])
        row = read_csv(out)[0]
        from rara import analytic as A
        met = A.throughput_exact(A.SystemParams(0.8, 10, 0.1))
        assert float(row["throughput_exact"]) == float(met.throughput)


class TestSimAndCompareModes:
    def test_compare_error_columns(self, tmp_path):
        out = tmp_path / "c.csv"
        rc = cli.main(["compare", "--lambda", "0.8", "--m", "10",
                       "--sessions", "200000", "--seed", "1", "--out", str(out)])
        assert rc == 0
        row = read_csv(out)[0]
        err = float(row["abs_err_throughput"])
        assert err == pytest.approx(abs(float(row["throughput_hat"])
                                        - float(row["throughput_exact"])))
        assert err < max(3 * float(row["stderr"]), 0.005)

    def test_sim_row_count(self, tmp_path):
        out = tmp_path / "s.csv"
        cli.main(["sim", "--lambda", "0.4,0.8", "--m", "5,10",
                  "--sessions", "5000", "--out", str(out)])
        rows = read_csv(out)
        assert len(rows) == 4
        assert all(r["sessions"] == "5000" for r in rows)

    def test_byte_identical_reruns(self, tmp_path):
        args = ["sim", "--lambda", "0.8", "--m", "10", "--sessions", "20000",
                "--seed", "3"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        cli.main(args + ["--out", str(a)])
        cli.main(args + ["--out", str(b)])
        assert a.read_bytes() == b.read_bytes()


class TestPhyMode:
    def test_rows_sweep_k(self, tmp_path):
        out = tmp_path / "p.csv"
        rc = cli.main(["phy", "--m", "2", "--snr-db", "20", "--sessions",
                       "2000", "--out", str(out)])
        assert rc == 0
        rows = read_csv(out)
        assert [int(r["k"]) for r in rows] == [1, 2, 3]
        assert all(0.0 <= float(r["ser"]) <= 1.0 for r in rows)


class TestJsonFormat:
    def test_mirrors_csv_schema(self, tmp_path):
        out = tmp_path / "t.json"
        cli.main(["theory", "--lambda", "0.8", "--m", "10", "--format", "json",
                  "--out", str(out)])
        payload = json.loads(out.read_text())
        assert payload["columns"] == cli.THEORY_COLUMNS
        assert len(payload["rows"]) == 1
        assert payload["rows"][0]["m"] == 10


class TestConfigAndErrors:
    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"lambda_grid": "0.4", "m_grid": "5",
                                   "epsilon": 0.2,
                                   "output_path": str(tmp_path / "x.csv")}))
        rc = cli.main(["theory", "--config", str(cfg), "--lambda", "0.8"])
        assert rc == 0
        row = read_csv(tmp_path / "x.csv")[0]
        assert float(row["lambda"]) == 0.8     # flag wins
        assert float(row["epsilon"]) == 0.2    # file value kept

    def test_validation_exit_code(self, capsys):
        rc = cli.main(["theory", "--lambda", "", "--m", "10", "--out", "x.csv"])
        assert rc == 2
        assert "lambda_grid" in capsys.readouterr().err

    def test_io_exit_code_no_partial_file(self, tmp_path):
        target = tmp_path / "missing" / "out.csv"
        rc = cli.main(["theory", "--lambda", "0.8", "--m", "10",
                       "--out", str(target)])
        assert rc == 3
        assert not target.exists()
