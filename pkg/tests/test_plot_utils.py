import numpy as np
import pytest

from utils.errors import PlotDimensionError
from utils.extract_utils import load_interpolant, parse_interpolant
from utils.plot_utils import mask_rectangles, plot_axes, rasterize_regions, render_svg


@pytest.fixture
def disc_grid(disc_instance):
    h = parse_interpolant("h := 2 - x^2 - y^2;", disc_instance)
    return rasterize_regions(disc_instance, h, (-3.0, 3.0), 30)


def test_rasterize_disc(disc_grid):
    assert disc_grid.phi.shape == (30, 30)
    assert disc_grid.axes == ("x", "y")
    assert disc_grid.phi[15, 15]
    assert not disc_grid.psi[15, 15]
    assert disc_grid.psi[0, 0]
    assert disc_grid.h_pos[15, 15]
    assert disc_grid.h_neg[0, 0]
    # the interpolant separates the two regions cell by cell
    assert not np.any(disc_grid.phi & disc_grid.h_neg)
    assert not np.any(disc_grid.psi & disc_grid.h_pos)


def test_render_svg_layers(tmp_path, disc_grid):
    path = tmp_path / "disc.svg"
    render_svg(disc_grid, str(path), (-3.0, 3.0))
    text = path.read_text()
    for gid in ("h_neg", "h_pos", "phi", "psi"):
        assert f'id="{gid}"' in text


def test_single_cell(disc_instance):
    h = parse_interpolant("h := 1;", disc_instance)
    grid = rasterize_regions(disc_instance, h, (-0.5, 0.5), 1)
    assert grid.phi.shape == (1, 1)
    assert grid.phi[0, 0]
    assert grid.h_pos[0, 0]


def test_private_variables_are_drawn(torus_instance, data_dir):
    hp = load_interpolant(str(data_dir / "torus_hp.interp"), torus_instance)
    z = torus_instance.shared[2]
    grid = rasterize_regions(torus_instance, hp, (-8.0, 8.0), 16, fixed={z: 0.0}, seed=1)
    assert grid.axes == ("x", "y")
    # cell centered at (5.5, 0.5) lies on the tube for most radii
    assert grid.psi[8, 13]
    assert not grid.psi[8, 8]


def test_plot_dimension_errors(interval_instance, torus_instance, disc_instance):
    with pytest.raises(PlotDimensionError):
        plot_axes(interval_instance, {})
    with pytest.raises(PlotDimensionError):
        plot_axes(torus_instance, {})
    h = parse_interpolant("h := 1;", disc_instance)
    with pytest.raises(PlotDimensionError):
        rasterize_regions(disc_instance, h, (1.0, -1.0), 10)
    with pytest.raises(PlotDimensionError):
        rasterize_regions(disc_instance, h, (-1.0, 1.0), 0)


def test_mask_rectangles_merge_runs():
    mask = np.array([[True, True, False, True], [False, False, False, False]])
    rects = mask_rectangles(mask, 0.0, 1.0)
    assert [(r.get_x(), r.get_width()) for r in rects] == [(0.0, 2.0), (3.0, 1.0)]
