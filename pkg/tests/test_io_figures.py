import warnings
from fractions import Fraction

import numpy as np
import pytest

from wavemap_lab import figures, io
from wavemap_lab import regions as rg


def test_jsonable():
    d = io.to_jsonable({"a": np.arange(3), "b": 1 + 2j, "c": Fraction(1, 3), "d": np.float64("nan"),
                        "e": (np.bool_(True), np.int64(4))})
    assert d == {"a": [0, 1, 2], "b": {"re": 1.0, "im": 2.0}, "c": "1/3", "d": "nan", "e": [True, 4]}


def test_csv_roundtrip(tmp_path):
    rows = io.columns_to_rows(x=[0.1, 0.2], y=[1, 2])
    p = io.write_csv(tmp_path / "t.csv", rows)
    assert p.read_text() == "x,y\n0.1,1\n0.2,2\n"


def test_empty_phase_portrait_warns(tmp_path):
    with pytest.warns(UserWarning):
        assert figures.phase_portrait(tmp_path / "p.svg", {"manifolds": []}) is None
    assert not (tmp_path / "p.svg").exists()
    with pytest.warns(UserWarning):
        assert figures.line_plot(tmp_path / "l.svg", []) is None


def test_svg_is_byte_stable(tmp_path):
    reg = rg.omega_minus1_region()
    data = {"manifolds": [{"label": "a", "x": np.linspace(0, 1, 50), "y": np.sin(np.linspace(0, 1, 50))}],
            "regions": [{"name": "Sigma", "polygons": [figures.slab_polygon(s) for s in reg.slabs]}],
            "equilibria": [{"x": 0.0, "kind": "saddle"}, {"x": -0.87, "kind": "sink"}]}
    a = figures.phase_portrait(tmp_path / "a.svg", data).read_bytes()
    b = figures.phase_portrait(tmp_path / "b.svg", data).read_bytes()
    assert a == b
    assert b"<svg" in a


def test_slab_polygon_orientation():
    reg = rg.omega_minus1_region()
    px, py = figures.slab_polygon(reg.slabs[1])
    # y-slab: the parameter runs along the second coordinate
    assert py.min() == pytest.approx(float(reg.slabs[1].lo))


def test_emit_figures_skips_missing(tmp_path):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        paths = figures.emit_figures({"evolve": {"series": [{"x": [0, 1], "y": [1, 2]}]}, "phase": {}}, tmp_path)
    assert [p.name for p in paths] == ["evolve.svg"]
