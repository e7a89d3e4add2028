"""
Kasamawashi — Вывод результатов
CSV (17 значащих цифр), JSON и детерминированный SVG.
"""
import csv
import json
from pathlib import Path
from typing import Any, Optional

import matplotlib
matplotlib.use("SVG")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from loguru import logger  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402
from matplotlib.patches import Patch  # noqa: E402

from src.analysis.atlas import SweepGrid  # noqa: E402
from src.mechanics.integrator import Trajectory  # noqa: E402

plt.rcParams["svg.hashsalt"] = "kasamawashi"

TRAJECTORY_COLUMNS = ["t", "x1", "x2", "v1", "v2", "omega_z", "E"]
ATTITUDE_COLUMNS = [f"r{i}{j}" for i in range(1, 4) for j in range(1, 4)]

SPECTRUM_COLORS = {
    "ZZZZ": "#7f7f7f",
    "ZZCC": "#9edae5",
    "CCCC": "#2ca02c",
    "F+F+F-F-": "#d62728",
    "R+R+R-R-": "#ff7f0e",
    "R+R-CC": "#9467bd",
}
OTHER_COLOR = "#000000"


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def _json_default(obj: Any):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def dumps_json(data: Any) -> str:
    return json.dumps(data, indent=2, default=_json_default) + "\n"


def write_json(data: Any, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(data), encoding="utf-8")
    logger.debug(f"JSON written: {path}")
    return path


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    """t, x1, x2, v1, v2, omega_z, E (пусто при α ≠ 0), r11..r33 при наличии ориентации"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    energy = traj.diagnostics.get("energy")
    header = TRAJECTORY_COLUMNS + (ATTITUDE_COLUMNS if traj.attitudes else [])

    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, (t, st) in enumerate(zip(traj.times, traj.states)):
            row = [fmt(t), fmt(st.x[0]), fmt(st.x[1]), fmt(st.v[0]), fmt(st.v[1]),
                   fmt(st.omega_z), fmt(energy[i]) if energy else ""]
            if traj.attitudes:
                row.extend(fmt(r) for r in np.asarray(traj.attitudes[i]).ravel())
            writer.writerow(row)

    logger.debug(f"Trajectory CSV written: {path} ({len(traj.times)} rows)")
    return path


def _cell_label(cell) -> str:
    if isinstance(cell, bool):
        return "stable" if cell else "unstable"
    return str(cell)


def write_grid_csv(grid: SweepGrid, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["omega_z", "Omega", "label"])
        for wz, Om, cell in grid.iter_cells():
            writer.writerow([fmt(wz), fmt(Om), _cell_label(cell)])
    logger.debug(f"Grid CSV written: {path}")
    return path


def _save_svg(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.debug(f"SVG written: {path}")
    return path


def _cell_edges(values: list[float]) -> np.ndarray:
    v = np.asarray(values)
    half = 0.5 * (v[1] - v[0])
    return np.concatenate([v - half, [v[-1] + half]])


def write_grid_svg(grid: SweepGrid, path, title: Optional[str] = None) -> Path:
    """Ячейки — закрашенные прямоугольники; точки p, q и асимптоты поверх"""
    omegas = grid.omega_z_axis.values()
    Omegas = grid.Omega_axis.values()

    labels = sorted({_cell_label(c) for _, _, c in grid.iter_cells()})
    index = {label: i for i, label in enumerate(labels)}
    if grid.kind == "vertex":
        colors = [SPECTRUM_COLORS.get(label, OTHER_COLOR) for label in labels]
    else:
        palette = {"stable": "#2ca02c", "unstable": "#d9d9d9"}
        colors = [palette[label] for label in labels]

    values = np.array([[index[_cell_label(c)] for c in row] for row in grid.cells])
    fig, ax = plt.subplots(figsize=(7, 6))
    ax.pcolormesh(
        _cell_edges(omegas), _cell_edges(Omegas), values,
        cmap=ListedColormap(colors), vmin=-0.5, vmax=len(labels) - 0.5, shading="flat",
    )

    summary = grid.summary
    for name in ("p", "q"):
        if name in summary:
            x, y = summary[name]
            ax.plot([x], [y], "o", markerfacecolor="none", markeredgecolor="black")
            ax.annotate(name, (x, y), textcoords="offset points", xytext=(6, 6))

    asymptote = summary.get("asymptote")
    if asymptote:
        xs = np.array([omegas[0], omegas[-1]])
        ax.plot(xs, asymptote["expected_slope"] * xs, "k--", linewidth=1.0)
        ax.plot(xs, [0.0, 0.0], "k--", linewidth=1.0)
    for x in summary.get("axis_intercepts") or []:
        ax.plot([x], [0.0], "o", markerfacecolor="none", markeredgecolor="black")

    ax.set_xlim(omegas[0], omegas[-1])
    ax.set_ylim(Omegas[0], Omegas[-1])
    ax.set_xlabel("omega_z")
    ax.set_ylabel("Omega")
    if title:
        ax.set_title(title)
    ax.legend(
        handles=[Patch(facecolor=colors[i], label=label) for i, label in enumerate(labels)],
        loc="upper right", fontsize="small",
    )
    return _save_svg(fig, Path(path))


def write_trajectory_svg(traj: Trajectory, path, title: Optional[str] = None) -> Path:
    """Путь центра шара в плоскости (x₁, x₂)"""
    xs = [st.x[0] for st in traj.states]
    ys = [st.x[1] for st in traj.states]
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot(xs, ys, linewidth=1.0)
    ax.plot([xs[0]], [ys[0]], "o", markersize=4)
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    if title:
        ax.set_title(title)
    return _save_svg(fig, Path(path))


def format_table(rows: list[tuple[str, bool, str]]) -> str:
    """Таблица результатов verify: имя, статус, подробности"""
    width = max((len(name) for name, _, _ in rows), default=4)
    lines = [f"{'suite'.ljust(width)}  status  details"]
    for name, ok, details in rows:
        lines.append(f"{name.ljust(width)}  {'PASS' if ok else 'FAIL':6}  {details}")
    passed = sum(1 for _, ok, _ in rows if ok)
    lines.append(f"{passed}/{len(rows)} suites passed")
    return "\n".join(lines)
