"""Batch figure rendering from patchsim experiment CSVs.

Reads only the simulator's published CSV files (grid, optimal-curve,
series); there is no coupling to the simulator itself. Four figure kinds:

- ``heatmap``: mean compromised fraction over patch time (x) and patched
  AP percentage (y), from a grid CSV.
- ``diff``: the same layout on a diverging color scale centered at 0,
  from a pre-differenced grid CSV or computed from two grid CSVs.
- ``optimal``: best patch time and the mean fraction it achieves versus
  patched percentage, on dual y axes.
- ``series``: mean compromised fraction over time, one line per
  (policy, patch time, fraction) group.

Input headers must match the published schemas exactly; mismatches are
rejected naming the offending columns.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

GRID_SCHEMA = ["policy", "patch_time", "fraction", "trials", "mean_fraction", "stderr"]
OPTIMAL_SCHEMA = ["fraction", "best_patch_time", "best_mean_fraction"]
SERIES_SCHEMA = ["policy", "patch_time", "fraction", "bin_time", "mean_fraction"]

KINDS = ("heatmap", "diff", "optimal", "series")
_KIND_ALIASES = {"diff-heatmap": "diff", "optimal-curve": "optimal"}


class SchemaError(ValueError):
    """Input CSV header does not match the published schema."""


class EmptyInputError(ValueError):
    """Input CSV has a header but no data rows."""


@dataclass(frozen=True)
class FigureSpec:
    """What to render: inputs, figure kind, output image, presentation."""

    kind: str
    inputs: tuple[str, ...]
    output: str
    title: str | None = None
    vmin: float | None = None
    vmax: float | None = None

    def __post_init__(self):
        kind = _KIND_ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        if len(self.inputs) > 1 and kind != "diff":
            raise ValueError("a second input is only meaningful for diff figures")


@dataclass(frozen=True)
class RenderData:
    """The arrays a figure was drawn from (render is pure in these)."""

    kind: str
    patch_times: tuple[float, ...] = ()
    fractions: tuple[float, ...] = ()
    matrix: np.ndarray | None = None          # heatmap/diff: [fraction][time]
    best_times: tuple[float, ...] = ()        # optimal
    best_means: tuple[float, ...] = ()
    groups: tuple = ()                        # series: (label, times, means)

    def __eq__(self, other):
        if not isinstance(other, RenderData):
            return NotImplemented
        same_matrix = ((self.matrix is None and other.matrix is None)
                       or (self.matrix is not None and other.matrix is not None
                           and np.array_equal(self.matrix, other.matrix)))
        return (self.kind == other.kind and same_matrix
                and self.patch_times == other.patch_times
                and self.fractions == other.fractions
                and self.best_times == other.best_times
                and self.best_means == other.best_means
                and self.groups == other.groups)


def read_rows(path: str, schema: list[str]) -> list[dict]:
    """Read a CSV, strictly validating the header against a schema."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyInputError(f"{path}: empty input, expected header "
                                  f"{','.join(schema)}")
        if header != schema:
            missing = [c for c in schema if c not in header]
            unexpected = [c for c in header if c not in schema]
            parts = [f"{path}: schema mismatch"]
            if missing:
                parts.append(f"missing column(s): {', '.join(missing)}")
            if unexpected:
                parts.append(f"unexpected column(s): {', '.join(unexpected)}")
            if not missing and not unexpected:
                parts.append(f"column order must be {','.join(schema)}")
            raise SchemaError("; ".join(parts))
        rows = [dict(zip(schema, row)) for row in reader if row]
    if not rows:
        raise EmptyInputError(f"{path}: empty input, no data rows")
    return rows


def _ordered_unique(values):
    seen = {}
    for v in values:
        seen.setdefault(v, None)
    return list(seen)


def load_grid(path: str):
    """Pivot a grid CSV into (patch_times, fractions, mean matrix)."""
    rows = read_rows(path, GRID_SCHEMA)
    times = _ordered_unique(float(r["patch_time"]) for r in rows)
    fractions = _ordered_unique(float(r["fraction"]) for r in rows)
    matrix = np.full((len(fractions), len(times)), np.nan)
    for r in rows:
        i = fractions.index(float(r["fraction"]))
        j = times.index(float(r["patch_time"]))
        matrix[i, j] = float(r["mean_fraction"])
    if np.isnan(matrix).any():
        raise ValueError(f"{path}: grid is missing cells")
    return tuple(times), tuple(fractions), matrix


def _axis_ticks(ax, times, fractions):
    ax.set_xticks(range(len(times)), [f"{t:g}" for t in times])
    ax.set_yticks(range(len(fractions)), [f"{f:g}" for f in fractions])
    ax.set_xlabel("patch time (s)")
    ax.set_ylabel("patched APs (%)")


def render(spec: FigureSpec) -> RenderData:
    """Render one figure to ``spec.output``; returns the plotted arrays.

    Pure with respect to the CSV content: the same input bytes always
    yield an equal :class:`RenderData`.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.8))
    try:
        if spec.kind in ("heatmap", "diff"):
            times, fractions, matrix = load_grid(spec.inputs[0])
            if len(spec.inputs) > 1:
                times2, fractions2, matrix2 = load_grid(spec.inputs[1])
                if times2 != times or fractions2 != fractions:
                    raise ValueError("diff inputs have different grid axes")
                matrix = matrix - matrix2
            if spec.kind == "diff":
                bound = max(float(np.max(np.abs(matrix))), 1e-12)
                vmin = spec.vmin if spec.vmin is not None else -bound
                vmax = spec.vmax if spec.vmax is not None else bound
                cmap = "RdBu_r"
            else:
                vmin, vmax = spec.vmin, spec.vmax
                cmap = "viridis"
            im = ax.imshow(matrix, origin="lower", aspect="auto", cmap=cmap,
                           vmin=vmin, vmax=vmax)
            _axis_ticks(ax, times, fractions)
            label = ("difference in mean compromised fraction"
                     if spec.kind == "diff" else "mean compromised fraction")
            fig.colorbar(im, ax=ax, label=label)
            data = RenderData(kind=spec.kind, patch_times=times,
                              fractions=fractions, matrix=matrix)

        elif spec.kind == "optimal":
            rows = read_rows(spec.inputs[0], OPTIMAL_SCHEMA)
            fractions = tuple(float(r["fraction"]) for r in rows)
            best_times = tuple(float(r["best_patch_time"]) for r in rows)
            best_means = tuple(float(r["best_mean_fraction"]) for r in rows)
            ax.plot(fractions, best_times, "o-", color="tab:blue",
                    label="optimal patch time")
            ax.set_xlabel("patched APs (%)")
            ax.set_ylabel("optimal patch time (s)", color="tab:blue")
            ax.tick_params(axis="y", labelcolor="tab:blue")
            ax2 = ax.twinx()
            ax2.plot(fractions, best_means, "s--", color="tab:red",
                     label="mean compromised fraction")
            ax2.set_ylabel("mean compromised fraction at optimum",
                           color="tab:red")
            ax2.tick_params(axis="y", labelcolor="tab:red")
            data = RenderData(kind=spec.kind, fractions=fractions,
                              best_times=best_times, best_means=best_means)

        else:  # series
            rows = read_rows(spec.inputs[0], SERIES_SCHEMA)
            keys = _ordered_unique((r["policy"], r["patch_time"], r["fraction"])
                                   for r in rows)
            groups = []
            for policy, t, f in keys:
                pts = [(float(r["bin_time"]), float(r["mean_fraction"]))
                       for r in rows
                       if (r["policy"], r["patch_time"], r["fraction"]) == (policy, t, f)]
                times = tuple(p[0] for p in pts)
                means = tuple(p[1] for p in pts)
                label = f"{policy} t_p={float(t):g} p={float(f):g}%"
                ax.plot(times, means, label=label)
                groups.append((label, times, means))
            ax.set_xlabel("time (s)")
            ax.set_ylabel("mean compromised fraction")
            ax.legend(fontsize=8)
            data = RenderData(kind=spec.kind, groups=tuple(groups))

        if spec.title:
            ax.set_title(spec.title)
        fig.savefig(spec.output, dpi=150, bbox_inches="tight")
    finally:
        plt.close(fig)
    return data
