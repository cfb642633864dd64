import numpy as np
import pytest

from pilotgrav_plots import FigureSpec, SchemaError, render
from pilotgrav_plots.cli import main

TRAJ_HEADER = ("t,X1,X2,v1,v2,norm1,norm2,residual1,residual2,"
               "net_gain,overlap,distance")


def write_witness_csv(path, n=50, gammas=(0.05, 0.1, 0.2)):
    r = np.linspace(0.4, 4.0, n)
    header = ["R"] + [f"W_gamma{g:g}" for g in gammas] + ["threshold"]
    rows = [",".join(header)]
    for i in range(n):
        w = [0.5 * g / 0.2 * (1 + np.cos(3 * r[i])) for g in gammas]
        rows.append(",".join(repr(float(v)) for v in [r[i], *w, 1.0]))
    path.write_text("\n".join(rows) + "\n")
    return path


def write_trajectory_csv(path, seed, n=200):
    rng = np.random.default_rng(seed)
    t = np.arange(1, n + 1) * 0.01
    x1 = -0.5 + 0.1 * np.sin(t) + 0.02 * rng.standard_normal()
    x2 = 0.5 - 0.1 * np.sin(t) + 0.02 * rng.standard_normal()
    rows = [TRAJ_HEADER]
    for i in range(n):
        vals = [t[i], x1[i], x2[i], 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.9,
                abs(x2[i] - x1[i])]
        rows.append(",".join(repr(float(v)) for v in vals))
    path.write_text("\n".join(rows) + "\n")
    return path


class TestWitnessFigure:
    def test_renders_curves_and_threshold(self, tmp_path):
        csv = write_witness_csv(tmp_path / "witness.csv")
        out = render(FigureSpec(kind="witness", inputs=(csv,),
                                output=str(tmp_path / "w.png")))
        data = out.read_bytes()
        assert data[:8] == b"\x89PNG\r\n\x1a\n"
        assert len(data) > 10_000

    def test_byte_stable_across_renders(self, tmp_path):
        csv = write_witness_csv(tmp_path / "witness.csv")
        spec1 = FigureSpec(kind="witness", inputs=(csv,),
                           output=str(tmp_path / "w1.png"))
        spec2 = FigureSpec(kind="witness", inputs=(csv,),
                           output=str(tmp_path / "w2.png"))
        assert render(spec1).read_bytes() == render(spec2).read_bytes()

    def test_empty_csv_is_schema_error(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(SchemaError, match="empty"):
            render(FigureSpec(kind="witness", inputs=(empty,),
                              output=str(tmp_path / "x.png")))

    def test_schema_error_names_columns(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("A,B\n1,2\n")
        with pytest.raises(SchemaError, match="'R'|threshold"):
            render(FigureSpec(kind="witness", inputs=(bad,),
                              output=str(tmp_path / "x.png")))

    def test_missing_file_reported(self, tmp_path):
        with pytest.raises(SchemaError, match="missing input files"):
            FigureSpec(kind="witness", inputs=(tmp_path / "nope.csv",),
                       output=str(tmp_path / "x.png"))


class TestTrajectoriesFigure:
    def test_ensemble_band(self, tmp_path):
        csvs = [write_trajectory_csv(tmp_path / f"run{i}.csv", seed=i)
                for i in range(4)]
        out = render(FigureSpec(kind="trajectories", inputs=tuple(csvs),
                                output=str(tmp_path / "traj.png")))
        assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_single_run_renders_without_band(self, tmp_path):
        csv = write_trajectory_csv(tmp_path / "run.csv", seed=0)
        out = render(FigureSpec(kind="trajectories", inputs=(csv,),
                                output=str(tmp_path / "one.png")))
        assert out.exists()

    def test_byte_stable(self, tmp_path):
        csvs = [write_trajectory_csv(tmp_path / f"r{i}.csv", seed=i)
                for i in range(3)]
        a = render(FigureSpec(kind="trajectories", inputs=tuple(csvs),
                              output=str(tmp_path / "a.png")))
        b = render(FigureSpec(kind="trajectories", inputs=tuple(csvs),
                              output=str(tmp_path / "b.png")))
        assert a.read_bytes() == b.read_bytes()

    def test_missing_position_column_is_schema_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,Y\n0.1,2\n")
        with pytest.raises(SchemaError, match="'X1'"):
            render(FigureSpec(kind="trajectories", inputs=(bad,),
                              output=str(tmp_path / "x.png")))


class TestCli:
    def test_witness_invocation(self, tmp_path, capsys):
        csv = write_witness_csv(tmp_path / "w.csv")
        out = tmp_path / "fig.png"
        assert main(["--kind", "witness", "--in", str(csv),
                     "--out", str(out)]) == 0
        assert out.exists()

    def test_trajectories_invocation_multiple_inputs(self, tmp_path):
        csvs = [str(write_trajectory_csv(tmp_path / f"r{i}.csv", seed=i))
                for i in range(2)]
        out = tmp_path / "band.png"
        assert main(["--kind", "trajectories", "--in", *csvs,
                     "--out", str(out)]) == 0
        assert out.exists()

    def test_schema_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("A,B\n1,2\n")
        assert main(["--kind", "witness", "--in", str(bad),
                     "--out", str(tmp_path / "x.png")]) == 2
