"""Figure structure: one series per cell, correct panels, stable output."""

import pytest

from parapack_plots import (
    PlotDataError,
    branch_current_figure,
    estimator_error_figure,
    load_ocv_curve,
    load_trace,
    ocv_figure,
    ocv_slope_figure,
    save_figure,
)

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def cell_lines(ax):
    return [l for l in ax.lines if l.get_label().startswith("cell ")]


def test_branch_current_series_match_cells(plain_trace_csv):
    trace = load_trace(plain_trace_csv)
    fig = branch_current_figure(trace)
    ax = fig.axes[0]
    lines = cell_lines(ax)
    assert len(lines) == trace.n
    assert [l.get_label() for l in lines] == ["cell 1", "cell 2", "cell 3"]
    x, y = lines[0].get_data()
    assert x.shape == trace.t.shape
    assert y[0] == pytest.approx(trace.currents[0, 0])
    save_figure(fig, plain_trace_csv.with_suffix(".png"))


def test_estimator_error_two_panels(estimator_trace_csv):
    trace = load_trace(estimator_trace_csv)
    fig = estimator_error_figure(trace)
    assert len(fig.axes) == 2
    for ax in fig.axes:
        assert len(cell_lines(ax)) == trace.n
    soc_line = cell_lines(fig.axes[0])[0]
    assert soc_line.get_data()[1][0] == pytest.approx(
        trace.soc[0, 0] - trace.est_soc[0, 0])
    relax_line = cell_lines(fig.axes[1])[2]
    assert relax_line.get_data()[1][-1] == pytest.approx(
        trace.relax[-1, 2] - trace.est_relax[-1, 2])
    save_figure(fig, estimator_trace_csv.with_suffix(".png"))


def test_estimator_figure_requires_estimates(plain_trace_csv):
    trace = load_trace(plain_trace_csv)
    with pytest.raises(PlotDataError, match="no estimator columns"):
        estimator_error_figure(trace)


def test_ocv_figures(ocv_curve_csv):
    curve = load_ocv_curve(ocv_curve_csv)
    fig = ocv_figure(curve)
    assert len(fig.axes) == 1
    assert len(fig.axes[0].lines) == 1
    save_figure(fig, ocv_curve_csv.parent / "ocv.png")

    fig = ocv_slope_figure(curve)
    labels = [l.get_label() for l in fig.axes[0].lines]
    assert any(l.startswith("min") for l in labels)
    assert any(l.startswith("max") for l in labels)
    save_figure(fig, ocv_curve_csv.parent / "slope.png")


def test_save_writes_png(tmp_path, plain_trace_csv):
    trace = load_trace(plain_trace_csv)
    out = tmp_path / "fig.png"
    save_figure(branch_current_figure(trace), out)
    data = out.read_bytes()
    assert data.startswith(PNG_MAGIC)
    assert len(data) > 1000


def test_rendering_is_deterministic(tmp_path, plain_trace_csv):
    trace = load_trace(plain_trace_csv)
    out_a = tmp_path / "a.png"
    out_b = tmp_path / "b.png"
    save_figure(branch_current_figure(trace), out_a)
    save_figure(branch_current_figure(trace), out_b)
    assert out_a.read_bytes() == out_b.read_bytes()
