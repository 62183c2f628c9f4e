import matplotlib

matplotlib.use("Agg")

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import PatchCollection
from matplotlib.patches import Rectangle

from utils.errors import PlotDimensionError
from utils.formula_utils import PHI, PSI, SIDES, ProblemInstance
from utils.logger_utils import log
from utils.poly_utils import VarId
from utils.sample_utils import clause_box

DEFAULT_COLORS = {
    "phi": "green",
    "psi": "red",
    "polynomial": "lightblue",
    "semialgebraic": "yellow",
    "negative": "white",
}


@dataclass
class RegionGrid:
    xs: np.ndarray
    ys: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    h: np.ndarray
    axes: Tuple[str, str]
    kind: str

    @property
    def h_pos(self) -> np.ndarray:
        return self.h > 0

    @property
    def h_neg(self) -> np.ndarray:
        return self.h < 0


def plot_axes(instance: ProblemInstance, fixed: Dict[VarId, float]) -> Tuple[VarId, VarId]:
    """The two shared variables left free by `fixed`."""
    free = [v for v in instance.shared if v not in fixed]
    if len(instance.shared) < 2 or len(free) != 2:
        raise PlotDimensionError(
            f"portraits need exactly two free shared variables; {len(instance.shared)} shared, "
            f"{len(instance.shared) - len(free)} fixed"
        )
    return free[0], free[1]


def rasterize_regions(
    instance: ProblemInstance,
    interp,
    box: Tuple[float, float],
    resolution: int,
    fixed: Optional[Dict[VarId, float]] = None,
    private_draws: int = 64,
    seed: int = 0,
) -> RegionGrid:
    """
    Evaluates phi, psi and the interpolant at the cell centers of a
    resolution x resolution grid over box x box.

    A cell belongs to the projection of a formula when some private assignment
    satisfies it: fixed private values are used as given, the others are drawn
    (private_draws per cell) from the clause's sampling box.
    """
    fixed = dict(fixed or {})
    lo, hi = map(float, box)
    if not lo < hi:
        raise PlotDimensionError(f"empty plot box [{lo}, {hi}]")
    if resolution < 1:
        raise PlotDimensionError(f"resolution must be positive, got {resolution}")
    ax, ay = plot_axes(instance, fixed)

    step = (hi - lo) / resolution
    centers = lo + (np.arange(resolution) + 0.5) * step
    gx, gy = np.meshgrid(centers, centers)
    cells = gx.size
    base = np.zeros((cells, len(instance.vartable)))
    base[:, ax] = gx.ravel()
    base[:, ay] = gy.ravel()
    for v, value in fixed.items():
        base[:, v] = value

    rng = np.random.default_rng(seed)
    masks = {}
    for side in SIDES:
        mask = np.zeros(cells, dtype=bool)
        unfixed = [v for v in instance.private(side) if v not in fixed]
        for clause in instance.formula(side).clauses:
            draws = private_draws if unfixed else 1
            cbox = clause_box(clause, unfixed)
            for _ in range(draws):
                pts = base.copy()
                for v in unfixed:
                    pts[:, v] = rng.uniform(cbox[v][0], cbox[v][1])
                ok = np.ones(cells, dtype=bool)
                for atom in clause.atoms:
                    ok &= atom.poly.evaluate_many(pts) >= 0.0
                mask |= ok
        masks[side] = mask.reshape(gx.shape)

    h = interp.evaluate_many(base[:, list(instance.shared)]).reshape(gx.shape)
    names = instance.vartable.names
    return RegionGrid(centers, centers, masks[PHI], masks[PSI], h, (names[ax], names[ay]), interp.kind.value)


def mask_rectangles(mask: np.ndarray, lo: float, step: float) -> List[Rectangle]:
    """One rectangle per horizontal run of set cells."""
    rects = []
    for row in range(mask.shape[0]):
        cols = np.flatnonzero(mask[row])
        if cols.size == 0:
            continue
        breaks = np.flatnonzero(np.diff(cols) > 1)
        starts = np.concatenate([[cols[0]], cols[breaks + 1]])
        ends = np.concatenate([cols[breaks], [cols[-1]]])
        for a, b in zip(starts, ends):
            rects.append(Rectangle((lo + a * step, lo + row * step), (b - a + 1) * step, step))
    return rects


def render_svg(
    grid: RegionGrid,
    filename: str,
    box: Tuple[float, float],
    colors: Optional[Dict[str, str]] = None,
) -> None:
    """
    Writes a layered SVG: the h < 0 and h > 0 regions underneath, phi and psi on
    top. Layers are SVG groups with ids h_neg, h_pos, phi and psi.
    """
    colors = {**DEFAULT_COLORS, **(colors or {})}
    lo, hi = map(float, box)
    step = (hi - lo) / grid.phi.shape[0]

    fig, ax = plt.subplots(figsize=(6, 6))
    layers = [
        ("h_neg", grid.h_neg, colors["negative"], 1.0),
        ("h_pos", grid.h_pos, colors[grid.kind], 1.0),
        ("phi", grid.phi, colors["phi"], 0.8),
        ("psi", grid.psi, colors["psi"], 0.8),
    ]
    for z, (gid, mask, color, alpha) in enumerate(layers):
        collection = PatchCollection(
            mask_rectangles(mask, lo, step), facecolor=color, edgecolor="none", alpha=alpha, zorder=z
        )
        collection.set_gid(gid)
        ax.add_collection(collection)
    ax.set_xlim(lo, hi)
    ax.set_ylim(lo, hi)
    ax.set_aspect("equal")
    ax.set_xlabel(grid.axes[0])
    ax.set_ylabel(grid.axes[1])
    ax.set_title(f"{grid.kind} interpolant")
    fig.savefig(filename, format="svg")
    plt.close(fig)
    log(f"Region portrait saved to {filename}")
