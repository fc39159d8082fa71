"""Scenario report output: JSON, per-frame CSV, and summary figures.

The run command always writes the JSON report plus frames.csv, plan.png
and progress.png next to it, so a run can be reviewed without re-executing
anything.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Polygon

from .bento import BentoPlan
from .domino import DominoPlan
from .render import png_bytes


def report_json_bytes(report: dict) -> bytes:
    return (json.dumps(report, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _frame_rows(report: dict):
    for ev in report["events"]:
        if ev["op"] == "frame" and not ev["state"].get("dropped"):
            yield ev["state"]


def write_frames_csv(report: dict, path: Path) -> None:
    """One row per processed frame with the task's headline numbers."""
    task = report["task"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if task == "domino":
            writer.writerow(["frame", "phase", "matched", "targets", "mean_distance_mm", "complete"])
            for st in _frame_rows(report):
                g = st["guidance"]
                dists = [t["distance_mm"] for t in g["targets"] if t["matched"]]
                mean_d = round(float(np.mean(dists)), 3) if dists else ""
                writer.writerow(
                    [st["frame"], st["phase"], g["matched_count"], len(g["targets"]),
                     mean_d, g["complete"]]
                )
        else:
            writer.writerow(["frame", "phase", "active_index", "active_fill", "spill", "completed", "all_complete"])
            for st in _frame_rows(report):
                g = st["guidance"]
                idx = g["active_index"]
                fill = g["subtasks"][idx]["fill"] if idx is not None else ""
                done = sum(1 for s in g["subtasks"] if s["status"] == "complete")
                writer.writerow(
                    [st["frame"], st["phase"], idx if idx is not None else "",
                     fill, g["spill"], done, g["all_complete"]]
                )


def render_plan_figure(plan, path: Path) -> None:
    """Draw the plan geometry: footprints for dominoes, masks for bento."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if isinstance(plan, DominoPlan):
        centers = np.array([[t.x, t.y] for t in plan.targets])
        ax.plot(centers[:, 0], centers[:, 1], "-", color="0.7", lw=1, zorder=1)
        for i, rect in enumerate(plan.footprints()):
            ax.add_patch(Polygon(rect.corners(), closed=True, fill=False, ec="C0", lw=1.2))
            ax.annotate(str(i), centers[i], ha="center", va="center", fontsize=7)
        ax.set_xlabel("x (mm)")
        ax.set_ylabel("y (mm)")
        ax.set_title(f"{len(plan.targets)} block targets")
        ax.set_aspect("equal")
        ax.invert_yaxis()
    elif isinstance(plan, BentoPlan):
        h, w = plan.box_mask.shape
        img = np.zeros((h, w, 3), dtype=np.uint8)
        img[plan.box_mask] = (235, 235, 235)
        for s in plan.subtasks:
            img[s.target_mask] = s.rgb
        ax.imshow(img)
        ax.set_title(
            "subtasks: " + ", ".join(f"{s.ingredient} ({s.area_px} px)" for s in plan.subtasks)
        )
        ax.set_xlabel("camera x (px)")
        ax.set_ylabel("camera y (px)")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_progress_figure(report: dict, path: Path) -> None:
    """Per-frame progression curves."""
    frames = list(_frame_rows(report))
    fig, ax = plt.subplots(figsize=(7, 4))
    xs = [st["frame"] for st in frames]
    if report["task"] == "domino":
        matched = [st["guidance"]["matched_count"] for st in frames]
        ax.plot(xs, matched, "o-", label="matched blocks")
        ax.set_ylabel("matched blocks")
        ax2 = ax.twinx()
        means = []
        for st in frames:
            d = [t["distance_mm"] for t in st["guidance"]["targets"] if t["matched"]]
            means.append(float(np.mean(d)) if d else np.nan)
        ax2.plot(xs, means, "s--", color="C1", label="mean distance")
        ax2.set_ylabel("mean distance (mm)")
    else:
        fills = [
            st["guidance"]["subtasks"][st["guidance"]["active_index"]]["fill"]
            if st["guidance"]["active_index"] is not None
            else 1.0
            for st in frames
        ]
        spills = [st["guidance"]["spill"] for st in frames]
        done = [
            sum(1 for s in st["guidance"]["subtasks"] if s["status"] == "complete")
            for st in frames
        ]
        ax.plot(xs, fills, "o-", label="active fill")
        ax.plot(xs, spills, "s--", label="spill")
        ax.plot(xs, done, "^:", label="completed subtasks")
        ax.legend()
    ax.set_xlabel("frame")
    ax.set_title(f'{report["task"]} progression')
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_run_outputs(
    report: dict,
    plan,
    overlays,
    out_path: Path,
    overlay_dir: Path | None = None,
) -> dict:
    """Write report.json + frames.csv + figures + overlay PNGs.

    Returns a manifest of written paths.
    """
    out_path = Path(out_path)
    out_dir = out_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    if overlay_dir is None:
        overlay_dir = out_dir / "overlays"
    overlay_dir = Path(overlay_dir)
    overlay_dir.mkdir(parents=True, exist_ok=True)

    overlay_files = []
    for name, rgba in overlays:
        p = overlay_dir / name
        with open(p, "wb") as fh:
            fh.write(png_bytes(rgba))
        overlay_files.append(str(p))

    with open(out_path, "wb") as fh:
        fh.write(report_json_bytes(report))
    csv_path = out_dir / "frames.csv"
    write_frames_csv(report, csv_path)
    plan_fig = out_dir / "plan.png"
    render_plan_figure(plan, plan_fig)
    progress_fig = out_dir / "progress.png"
    render_progress_figure(report, progress_fig)
    return {
        "report": str(out_path),
        "frames_csv": str(csv_path),
        "plan_figure": str(plan_fig),
        "progress_figure": str(progress_fig),
        "overlays": overlay_files,
    }
