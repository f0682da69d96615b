"""End-to-end CLI behaviour: subcommands, config precedence, exit codes."""
import pytest

from qnnreg.cli import main
from qnnreg.data import load_samples


@pytest.fixture
def dataset(tmp_path):
    path = tmp_path / "data.csv"
    assert main(["generate", "--samples", "60", "--seed", "9", "--path", str(path)]) == 0
    return path


class TestGenerate:
    def test_deterministic_bytes(self, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["generate", "--samples", "81", "--seed", "4", "--path", str(p1)]) == 0
        assert main(["generate", "--samples", "81", "--seed", "4", "--path", str(p2)]) == 0
        assert p1.read_bytes() == p2.read_bytes()
        assert len(load_samples(p1)) == 81

    def test_missing_path_is_config_error(self):
        assert main(["generate", "--samples", "20"]) == 1


class TestTrain:
    def test_history_rows_and_artifacts(self, dataset, tmp_path):
        out = tmp_path / "run"
        rc = main(["train", "--data", str(dataset), "--architecture", "sequential",
                   "--ansatz", "A1", "--encoding", "amplitude",
                   "--epochs", "5", "--seed", "2", "--out", str(out)])
        assert rc == 0
        lines = (out / "history.csv").read_text().splitlines()
        assert len(lines) == 6  # header + 5 epochs
        assert (out / "checkpoint.txt").exists()

    def test_rerun_reproduces_rmse_columns(self, dataset, tmp_path):
        cols = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            main(["train", "--data", str(dataset), "--architecture", "sequential",
                  "--ansatz", "A3", "--encoding", "angle",
                  "--epochs", "6", "--seed", "5", "--out", str(out)])
            rows = (out / "history.csv").read_text().splitlines()[1:]
            cols.append([",".join(r.split(",")[:4]) for r in rows])  # drop elapsed_s
        assert cols[0] == cols[1]

    @pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
    @pytest.mark.filterwarnings("ignore:invalid value:RuntimeWarning")
    def test_divergence_exits_2_naming_epoch(self, dataset, tmp_path, capsys):
        rc = main(["train", "--data", str(dataset), "--architecture", "sequential",
                   "--ansatz", "A1", "--encoding", "amplitude",
                   "--epochs", "400", "--lr", "1e6", "--seed", "2",
                   "--out", str(tmp_path / "boom")])
        assert rc == 2
        assert "epoch" in capsys.readouterr().err

    def test_missing_dataset_exits_1(self, tmp_path):
        rc = main(["train", "--data", str(tmp_path / "nope.csv"), "--epochs", "2"])
        assert rc == 1


class TestInspect:
    def test_listing_line_count_equals_total_gates(self, capsys):
        assert main(["inspect-circuit", "--ansatz", "A1", "--encoding", "amplitude"]) == 0
        out = capsys.readouterr().out.splitlines()
        gate_lines = out[1:-1]  # header line, gates, metrics line
        assert len(gate_lines) == 17
        assert "gates=17 two_qubit=8 params=24" in out[-1]

    def test_a5_angle_metrics_line(self, capsys):
        assert main(["inspect-circuit", "--ansatz", "A5", "--encoding", "angle"]) == 0
        assert "gates=136 two_qubit=64 params=32" in capsys.readouterr().out

    def test_check_table1_passes_with_known_deviation(self, capsys):
        assert main(["inspect-circuit", "--check-table1"]) == 0
        out = capsys.readouterr().out
        assert out.count("KNOWN-DEVIATION") == 2  # the two A3 rows
        assert "MISMATCH" not in out
        assert out.strip().endswith("conformance: PASS")

    def test_needs_ansatz_without_check_flag(self):
        assert main(["inspect-circuit"]) == 1


class TestGradcheckCli:
    def test_single_seed_small_run_passes(self, capsys):
        rc = main(["gradcheck", "--seeds", "1", "--seed", "3"])
        assert rc == 0
        lines = [ln for ln in capsys.readouterr().out.splitlines() if ln]
        assert len(lines) == 30
        assert all(ln.endswith("PASS") for ln in lines)

    def test_zero_tolerance_fails_everything(self, capsys):
        rc = main(["gradcheck", "--seeds", "1", "--tolerance", "0"])
        assert rc == 3
        lines = [ln for ln in capsys.readouterr().out.splitlines() if ln]
        assert all(ln.endswith("FAIL") for ln in lines)


class TestGrid:
    def test_degenerate_grid_matches_train(self, dataset, tmp_path):
        out = tmp_path / "grid1"
        rc = main(["grid", "--data", str(dataset), "--architectures", "sequential",
                   "--ansatze", "A1", "--encodings", "amplitude",
                   "--epochs", "5", "--seed", "2", "--out", str(out)])
        assert rc == 0
        rows = (out / "grid_sequential.csv").read_text().splitlines()
        assert len(rows) == 2
        cells = rows[1].split(",")
        # same seed/config as TestTrain above: identical final train rmse
        run = tmp_path / "single"
        main(["train", "--data", str(dataset), "--architecture", "sequential",
              "--ansatz", "A1", "--encoding", "amplitude",
              "--epochs", "5", "--seed", "2", "--out", str(run)])
        last = (run / "history.csv").read_text().splitlines()[-1].split(",")
        assert cells[6] == last[1]  # train_rmse column, byte-equal

    def test_dry_run_emits_30_rows_with_exact_param_counts(self, tmp_path):
        out = tmp_path / "dry"
        rc = main(["grid", "--dry-run", "--out", str(out), "--seed", "0"])
        assert rc == 0
        counts = {}
        for arch in ("sequential", "parallel", "ensemble"):
            rows = (out / f"grid_{arch}.csv").read_text().splitlines()[1:]
            assert len(rows) == 10
            counts[arch] = [int(r.split(",")[-3]) for r in rows]
        assert sorted(set(counts["sequential"])) == [26, 29, 37, 61]
        assert sorted(set(counts["parallel"])) == [595, 601, 617, 665]
        assert sorted(set(counts["ensemble"])) == [234, 261, 333, 549]

    def test_eval_sets_and_summary(self, dataset, tmp_path):
        nbs = tmp_path / "nbs.csv"
        main(["generate", "--samples", "20", "--seed", "31", "--path", str(nbs)])
        out = tmp_path / "gridev"
        rc = main(["grid", "--data", str(dataset), "--eval", f"nbs={nbs}",
                   "--architectures", "sequential", "--ansatze", "A1,A3",
                   "--encodings", "amplitude", "--epochs", "4",
                   "--seed", "1", "--out", str(out)])
        assert rc == 0
        header = (out / "grid_sequential.csv").read_text().splitlines()[0]
        assert "nbs_rmse" in header
        summary = (out / "summary.csv").read_text().splitlines()
        assert summary[1].startswith("baseline,2.43,2.14,1.66")
        assert any(ln.startswith("sequential (") for ln in summary)

    def test_worker_count_does_not_change_results(self, dataset, tmp_path):
        outs = []
        for name, workers in (("w1", "1"), ("w2", "3")):
            out = tmp_path / name
            rc = main(["grid", "--data", str(dataset), "--architectures", "sequential",
                       "--ansatze", "A1,A2", "--encodings", "amplitude",
                       "--epochs", "3", "--seed", "4", "--out", str(out),
                       "--workers", workers])
            assert rc == 0
            lines = (out / "grid_sequential.csv").read_text().splitlines()
            header = lines[0].split(",")
            keep = [i for i, c in enumerate(header) if c != "train_seconds"]
            outs.append([",".join(r.split(",")[i] for i in keep) for r in lines])
        assert outs[0] == outs[1]

    @pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
    @pytest.mark.filterwarnings("ignore:invalid value:RuntimeWarning")
    def test_failed_variant_recorded_not_fatal(self, dataset, tmp_path):
        # huge lr diverges; other variants still complete and report
        out = tmp_path / "gridfail"
        rc = main(["grid", "--data", str(dataset), "--architectures", "sequential",
                   "--ansatze", "A1", "--encodings", "angle,amplitude",
                   "--epochs", "300", "--lr", "1e6", "--seed", "2", "--out", str(out)])
        assert rc == 2
        rows = (out / "grid_sequential.csv").read_text().splitlines()[1:]
        assert len(rows) == 2
        assert all(",failed," in r for r in rows)
        assert all("epoch" in r for r in rows)  # diagnostic names the epoch


class TestConfigFile:
    def test_config_supplies_defaults_and_flags_win(self, dataset, tmp_path):
        cfgfile = tmp_path / "exp.ini"
        cfgfile.write_text(
            "[train]\n"
            f"data = {dataset}\n"
            "architecture = sequential\n"
            "ansatz = A2\n"
            "encoding = amplitude\n"
            "epochs = 4\n"
            "seed = 6\n"
            f"out = {tmp_path / 'fromcfg'}\n")
        assert main(["train", "--config", str(cfgfile)]) == 0
        hist = (tmp_path / "fromcfg" / "history.csv").read_text().splitlines()
        assert len(hist) == 5  # config epochs=4

        assert main(["train", "--config", str(cfgfile), "--epochs", "2",
                     "--out", str(tmp_path / "flagwins")]) == 0
        hist = (tmp_path / "flagwins" / "history.csv").read_text().splitlines()
        assert len(hist) == 3  # flag epochs=2 wins

    def test_missing_config_file_exits_1(self):
        assert main(["train", "--config", "/nonexistent.ini"]) == 1


@pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
@pytest.mark.filterwarnings("ignore:invalid value:RuntimeWarning")
def test_exit_code_taxonomy(dataset, tmp_path):
    assert main(["generate", "--samples", "15", "--seed", "0",
                 "--path", str(tmp_path / "x.csv")]) == 0          # success
    assert main(["train", "--data", "missing.csv"]) == 1           # config error
    assert main(["train", "--data", str(dataset), "--epochs", "400",
                 "--lr", "1e6", "--out", str(tmp_path / "d")]) == 2  # numerical
    assert main(["gradcheck", "--seeds", "1", "--tolerance", "0"]) == 3  # conformance
