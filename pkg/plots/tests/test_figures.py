import numpy as np
import pytest

from patchsim_plots import (EmptyInputError, FigureSpec, SchemaError,
                            load_grid, render)
from patchsim_plots.cli import main


def spec(kind, inputs, out, **kw):
    return FigureSpec(kind=kind, inputs=tuple(str(p) for p in inputs),
                      output=str(out), **kw)


class TestRenderKinds:
    def test_heatmap_from_sweep_grid(self, result_csvs, tmp_path):
        out = tmp_path / "heatmap.png"
        data = render(spec("heatmap", [result_csvs["grid"]], out, title="sweep"))
        assert out.stat().st_size > 0
        assert data.matrix.shape == (3, 3)
        assert data.patch_times == (0.0, 400.0, 800.0)
        assert data.fractions == (10.0, 50.0, 90.0)

    def test_diff_heatmap_from_compare_csv(self, result_csvs, tmp_path):
        out = tmp_path / "diff.png"
        data = render(spec("diff", [result_csvs["diff"]], out))
        assert out.stat().st_size > 0
        assert data.matrix.shape == (3, 3)

    def test_optimal_curve(self, result_csvs, tmp_path):
        out = tmp_path / "optimal.pdf"
        data = render(spec("optimal", [result_csvs["optimal"]], out))
        assert out.stat().st_size > 0
        assert len(data.fractions) == 3
        assert len(data.best_times) == 3 and len(data.best_means) == 3

    def test_series(self, result_csvs, tmp_path):
        out = tmp_path / "series.png"
        data = render(spec("series", [result_csvs["series"]], out))
        assert out.stat().st_size > 0
        assert len(data.groups) == 9  # one line per grid cell
        assert all(len(times) == 100 for _, times, _ in data.groups)

    def test_single_cell_grid_renders(self, result_csvs, tmp_path):
        out = tmp_path / "cell.png"
        data = render(spec("heatmap", [result_csvs["cell"]], out))
        assert data.matrix.shape == (1, 1)
        assert out.stat().st_size > 0

    def test_optimal_curve_with_five_fractions(self, tmp_path):
        path = tmp_path / "opt.csv"
        rows = ["fraction,best_patch_time,best_mean_fraction"] + [
            f"{f}.0,{f * 4}.0,0.{f}" for f in (1, 2, 3, 4, 5)]
        path.write_text("\n".join(rows) + "\n")
        data = render(spec("optimal", [path], tmp_path / "opt.png"))
        assert len(data.fractions) == 5
        assert len(data.best_times) == 5
        assert len(data.best_means) == 5


class TestDiffSemantics:
    def test_diff_of_identical_grids_is_zero(self, result_csvs, tmp_path):
        out = tmp_path / "zero.png"
        data = render(spec("diff", [result_csvs["grid"], result_csvs["grid"]], out))
        assert np.all(data.matrix == 0.0)
        assert out.stat().st_size > 0

    def test_diff_axis_mismatch_rejected(self, result_csvs, tmp_path):
        other = tmp_path / "other.csv"
        other.write_text("policy,patch_time,fraction,trials,mean_fraction,stderr\n"
                         "none,7.0,10.0,5,0.5,0.0\n")
        with pytest.raises(ValueError, match="axes"):
            render(spec("diff", [result_csvs["grid"], other], tmp_path / "x.png"))


class TestPurity:
    def test_same_csv_gives_same_arrays(self, result_csvs, tmp_path):
        a = render(spec("heatmap", [result_csvs["grid"]], tmp_path / "a.png"))
        b = render(spec("heatmap", [result_csvs["grid"]], tmp_path / "b.png"))
        assert a == b

    def test_series_purity(self, result_csvs, tmp_path):
        a = render(spec("series", [result_csvs["series"]], tmp_path / "a.png"))
        b = render(spec("series", [result_csvs["series"]], tmp_path / "b.png"))
        assert a == b


class TestSchemaValidation:
    def test_missing_column_named(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("policy,patch_time,fraction,trials,stderr\n"
                       "none,0.0,10.0,5,0.0\n")
        with pytest.raises(SchemaError, match="missing column.*mean_fraction"):
            render(spec("heatmap", [bad], tmp_path / "x.png"))

    def test_unexpected_column_named(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("policy,patch_time,fraction,trials,mean_fraction,stderr,bogus\n"
                       "none,0.0,10.0,5,0.1,0.0,1\n")
        with pytest.raises(SchemaError, match="unexpected column.*bogus"):
            render(spec("heatmap", [bad], tmp_path / "x.png"))

    def test_wrong_schema_for_kind(self, result_csvs, tmp_path):
        with pytest.raises(SchemaError):
            render(spec("optimal", [result_csvs["grid"]], tmp_path / "x.png"))

    def test_reordered_columns_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("patch_time,policy,fraction,trials,mean_fraction,stderr\n"
                       "0.0,none,10.0,5,0.1,0.0\n")
        with pytest.raises(SchemaError, match="column order"):
            render(spec("heatmap", [bad], tmp_path / "x.png"))

    def test_empty_input_rejected(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("policy,patch_time,fraction,trials,mean_fraction,stderr\n")
        with pytest.raises(EmptyInputError, match="no data rows"):
            render(spec("heatmap", [empty], tmp_path / "x.png"))

    def test_headerless_file_rejected(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(EmptyInputError):
            render(spec("heatmap", [empty], tmp_path / "x.png"))


class TestSpecValidation:
    def test_kind_aliases_accepted(self, tmp_path):
        s = FigureSpec("diff-heatmap", ("a.csv",), "x.png")
        assert s.kind == "diff"
        assert FigureSpec("optimal-curve", ("a.csv",), "x.png").kind == "optimal"

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown figure kind"):
            FigureSpec("pie", ("a.csv",), "x.png")

    def test_second_input_only_for_diff(self):
        with pytest.raises(ValueError, match="second input"):
            FigureSpec("heatmap", ("a.csv", "b.csv"), "x.png")


class TestLoadGrid:
    def test_incomplete_grid_rejected(self, tmp_path):
        bad = tmp_path / "holes.csv"
        bad.write_text("policy,patch_time,fraction,trials,mean_fraction,stderr\n"
                       "none,0.0,10.0,5,0.1,0.0\n"
                       "none,1.0,20.0,5,0.2,0.0\n")
        with pytest.raises(ValueError, match="missing cells"):
            load_grid(str(bad))


class TestCli:
    def test_renders_all_kinds(self, result_csvs, tmp_path, capsys):
        jobs = [("heatmap", "grid"), ("diff", "diff"),
                ("optimal", "optimal"), ("series", "series")]
        for kind, csv_name in jobs:
            out = tmp_path / f"{kind}.png"
            code = main(["--kind", kind, "--in", str(result_csvs[csv_name]),
                         "--out", str(out), "--title", f"{kind} demo"])
            assert code == 0, capsys.readouterr().err
            assert out.stat().st_size > 0

    def test_two_input_diff(self, result_csvs, tmp_path):
        out = tmp_path / "d.png"
        code = main(["--kind", "diff", "--in", str(result_csvs["grid"]),
                     "--in2", str(result_csvs["grid"]), "--out", str(out)])
        assert code == 0

    def test_schema_mismatch_is_data_error(self, result_csvs, tmp_path, capsys):
        code = main(["--kind", "optimal", "--in", str(result_csvs["grid"]),
                     "--out", str(tmp_path / "x.png")])
        assert code == 2
        err = capsys.readouterr().err
        assert "best_patch_time" in err  # offending column is named

    def test_missing_input_is_usage_error(self, tmp_path, capsys):
        code = main(["--kind", "heatmap", "--in", "/no/such.csv",
                     "--out", str(tmp_path / "x.png")])
        assert code == 1
        assert "/no/such.csv" in capsys.readouterr().err

    def test_in2_rejected_for_heatmap(self, result_csvs, tmp_path):
        code = main(["--kind", "heatmap", "--in", str(result_csvs["grid"]),
                     "--in2", str(result_csvs["grid"]),
                     "--out", str(tmp_path / "x.png")])
        assert code == 1
