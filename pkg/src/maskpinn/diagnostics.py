"""Evaluation metrics and feature-distribution diagnostics.

Relative L2 error over an evaluation grid is the accuracy metric; per-layer
pre-activation statistics (moments plus fixed-bin histograms) trace how the
feature distributions drift during training; the width sweep aggregates final
errors across (width, seed) cells.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

HIST_LO, HIST_HI = -10.0, 10.0
HIST_INTERIOR = 64  # plus one outlier bin on each end -> 66 counts

_EDGES = np.concatenate(([-np.inf], np.linspace(HIST_LO, HIST_HI, HIST_INTERIOR + 1), [np.inf]))


def relative_l2(pred, exact) -> float:
    """||pred - exact||_2 / ||exact||_2 over flattened fields."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    exact = np.asarray(exact, dtype=np.float64).ravel()
    if pred.shape != exact.shape:
        raise ValueError("pred and exact must have the same length")
    if pred.size < 1:
        raise ValueError("empty fields")
    denom = np.linalg.norm(exact)
    if denom == 0.0:
        raise ValueError("exact field has zero norm")
    return float(np.linalg.norm(pred - exact) / denom)


@dataclass
class PreActRow:
    iteration: int
    layer: int
    mean: float
    var: float
    min: float
    max: float
    hist: np.ndarray  # 66 counts; sums to the number of captured values


def preact_snapshot(captures: list, iteration: int) -> list[PreActRow]:
    """Per-layer statistics of captured pre-activation batches.

    Population variance (deterministic, and the same normalization batchnorm
    uses). Histogram counts include the two outlier bins, so total mass always
    equals batch size times layer width.
    """
    rows = []
    for layer, z in enumerate(captures or []):
        z = np.asarray(z, dtype=np.float64).ravel()
        counts, _ = np.histogram(z, bins=_EDGES)
        rows.append(PreActRow(
            iteration=iteration,
            layer=layer,
            mean=float(z.mean()),
            var=float(z.var()),
            min=float(z.min()),
            max=float(z.max()),
            hist=counts,
        ))
    return rows


@dataclass
class SweepCell:
    width: int
    variant: str
    activation: str
    seed: int
    final_rel_l2: float
    status: str


@dataclass
class WidthSweepResult:
    cells: list  # one SweepCell per (width, seed) run

    def mean_errors(self) -> dict[int, float]:
        """Mean final error per width over non-diverged runs; diverged runs
        are counted but excluded from the mean."""
        out: dict[int, float] = {}
        for w in sorted({c.width for c in self.cells}):
            ok = [c.final_rel_l2 for c in self.cells if c.width == w and c.status == "converged"]
            out[w] = float(np.mean(ok)) if ok else float("nan")
        return out


def sweep_arch(variant: str, activation: str, width: int, depth: int = 3):
    """Depth-3 architecture for the width sweep.

    The mask variant pairs layers into blocks, so the nearest configuration
    with parameter parity to a 3-hidden-layer plain stack is a single block
    (two gated layers plus the linear stem): both carry two width-by-width
    weight matrices.
    """
    from .nn import Architecture

    if variant == "mask":
        return Architecture(variant, depth=depth - 1, width=width, activation=activation)
    return Architecture(variant, depth=depth, width=width, activation=activation)


def width_sweep(problem, variant: str, activation: str, widths, seeds, cfg) -> WidthSweepResult:
    """Train one run per (width, seed) and collect final relative L2 errors."""
    from .train import train

    if not widths:
        raise ValueError("widths must be nonempty")
    if sorted(widths) != list(widths):
        raise ValueError("widths must be strictly increasing")
    cells = []
    for width in widths:
        arch = sweep_arch(variant, activation, width)
        for seed in seeds:
            result = train(problem, arch, replace(cfg, seed=seed))
            cells.append(SweepCell(
                width=width, variant=variant, activation=activation, seed=seed,
                final_rel_l2=result.final_rel_l2, status=result.status,
            ))
    return WidthSweepResult(cells)
