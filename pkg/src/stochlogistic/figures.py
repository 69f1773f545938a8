"""Parameter sets and initial conditions of the five published trajectory figures."""
from __future__ import annotations

from dataclasses import dataclass

from .engine import NoiseStream, Scheme, SimGrid, simulate_path
from .model import ModelParams, band_endpoints


class CaptionMismatch(AssertionError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    figure_id: int
    params: ModelParams
    # (label, x0, n_paths); x0 may be "x1"/"x2" to start exactly on a band endpoint
    groups: tuple
    caption_x1: float
    caption_x2: float
    x1_tol: float = 0.0

    def initial_state(self, x0):
        if isinstance(x0, str):
            return getattr(band_endpoints(self.params), x0)
        return float(x0)


FIGURES = {
    1: FigureSpec(1, ModelParams(1.5, 1.0, 0.25), (("blue", 2.3, 10), ("green", 0.65, 10)), 1.28, 1.72),
    # caption prints 1.47 where the formula rounds to 1.48
    2: FigureSpec(2, ModelParams(1.5, 1.0, 0.025), (("blue", 2.3, 10), ("green", 0.65, 10)), 1.47, 1.52, 0.01),
    3: FigureSpec(3, ModelParams(2.5, 1.0, 1.5), (("blue", 2.0, 1), ("green", 0.1, 1)), 0.82, 4.18),
    4: FigureSpec(4, ModelParams(1.5, 1.0, 0.5), (("green", "x1", 1), ("blue", "x2", 1)), 1.07, 1.93),
    5: FigureSpec(5, ModelParams(1.0, 1.0, 2.45), (("blue", 1.75, 1),), 0.0, 2.73),
}


def get_figure(figure_id: int) -> FigureSpec:
    try:
        return FIGURES[int(figure_id)]
    except (KeyError, ValueError):
        raise ValueError(f"unknown figure {figure_id!r}; choose from 1-5") from None


def check_caption(fig: FigureSpec) -> dict:
    """Compare computed endpoints with the caption values at 2-decimal rounding."""
    band = band_endpoints(fig.params)
    rows = {
        "x1": (band.x1, fig.caption_x1, fig.x1_tol),
        "x2": (band.x2, fig.caption_x2, 0.0),
    }
    report = {}
    for name, (computed, caption, tol) in rows.items():
        shown = round(computed, 2)
        ok = abs(shown - caption) <= tol + 1e-9
        report[name] = {"computed": computed, "rounded": shown, "caption": caption, "tolerance": tol, "passed": ok}
        if not ok:
            raise CaptionMismatch(
                f"figure {fig.figure_id}: {name}={computed:.4f} rounds to {shown:.2f}, caption says {caption:.2f}"
            )
    return report


def figure_paths(fig: FigureSpec, grid: SimGrid, seed: int = 42, scheme=Scheme.MILSTEIN):
    """Simulate every trajectory of a figure; path indices run across groups."""
    paths, extras = [], []
    idx = 0
    for label, x0, n in fig.groups:
        start = fig.initial_state(x0)
        for _ in range(n):
            paths.append(simulate_path(fig.params, start, grid, scheme, NoiseStream(seed, idx)))
            extras.append({"group": label})
            idx += 1
    return paths, extras
