"""Evaluation: MSE, Dice overlap, and method comparison tables."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Array = np.ndarray


def mse(x: Array, truth: Array, region: Array | None = None) -> float:
    """Mean squared error, optionally restricted to a boolean region."""
    x = np.asarray(x, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if x.shape != truth.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {truth.shape}")
    if region is None:
        return float(np.mean((x - truth) ** 2))
    region = np.asarray(region, dtype=bool)
    if region.shape != x.shape:
        raise ValueError(f"region shape {region.shape} does not match {x.shape}")
    if not region.any():
        raise ValueError("evaluation region is empty")
    return float(np.mean((x[region] - truth[region]) ** 2))


def dice(a: Array, b: Array) -> float:
    """Dice overlap 2|a&b| / (|a| + |b|); 1.0 when both masks are empty."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    denom = int(a.sum()) + int(b.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int((a & b).sum()) / denom


@dataclass
class EvalReport:
    method: str
    magnitude_mse: list[float] = field(default_factory=list)  # per channel
    phase_mse: list[float] = field(default_factory=list)  # per channel
    velocity_mse: float = 0.0  # fluid region
    velocity_mse_full: float = 0.0  # whole domain
    segmentation_dice: float | None = None

    COLUMNS = ("u1", "u2", "u3", "u4", "phi1", "phi2", "phi3", "phi4", "velocity", "dice")

    def row(self) -> list[float | None]:
        vals: list[float | None] = list(self.magnitude_mse) + list(self.phase_mse)
        vals.append(self.velocity_mse)
        vals.append(self.segmentation_dice)
        return vals

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "magnitude_mse": self.magnitude_mse,
            "phase_mse": self.phase_mse,
            "velocity_mse": self.velocity_mse,
            "velocity_mse_full": self.velocity_mse_full,
            "segmentation_dice": self.segmentation_dice,
        }


def evaluate(
    method: str,
    magnitudes: list[Array],
    phases: list[Array],
    velocity: Array,
    truth_magnitude: Array,
    truth_phases: list[Array],
    truth_velocity: Array,
    truth_labels: Array,
    labels: Array | None = None,
) -> EvalReport:
    """Score one reconstruction against ground truth.

    Phases and velocity are evaluated over the fluid region (truth labels
    mark the bubble interior): phase is physically meaningful only where the
    magnitude is appreciable, and the velocity field vanishes inside the
    bubble by construction. Magnitudes are scored on the whole domain.
    The ``labels`` argument, when given, is the estimated bubble mask.
    """
    fluid = ~np.asarray(truth_labels, dtype=bool)
    return EvalReport(
        method=method,
        magnitude_mse=[mse(m, truth_magnitude) for m in magnitudes],
        phase_mse=[mse(p, t, region=fluid) for p, t in zip(phases, truth_phases)],
        velocity_mse=mse(velocity, truth_velocity, region=fluid),
        velocity_mse_full=mse(velocity, truth_velocity),
        segmentation_dice=(
            dice(labels, truth_labels) if labels is not None else None
        ),
    )


def compare_methods(reports: list[EvalReport]) -> str:
    """Aligned text table (methods x metrics) with the per-column best
    starred. Dice is best-highest; every other column best-lowest."""
    if not reports:
        raise ValueError("no reports to compare")
    cols = EvalReport.COLUMNS
    rows = [r.row() for r in reports]
    best = []
    for c, name in enumerate(cols):
        vals = [row[c] for row in rows if row[c] is not None]
        if not vals:
            best.append(None)
        elif name == "dice":
            best.append(max(vals))
        else:
            best.append(min(vals))

    header = ["method"] + list(cols)
    lines = []
    for rep, row in zip(reports, rows):
        cells = [rep.method]
        for c, val in enumerate(row):
            if val is None:
                cells.append("-")
            else:
                mark = "*" if best[c] is not None and val == best[c] else " "
                cells.append(f"{val:.6g}{mark}")
        lines.append(cells)
    widths = [max(len(h), *(len(line[i]) for line in lines)) for i, h in enumerate(header)]
    out = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    for line in lines:
        out.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)))
    return "\n".join(out)


def reports_to_csv(reports: list[EvalReport]) -> str:
    if not reports:
        raise ValueError("no reports to compare")
    cols = EvalReport.COLUMNS
    lines = ["method," + ",".join(cols)]
    for rep in reports:
        cells = [rep.method] + [
            "" if v is None else f"{v:.12g}" for v in rep.row()
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
