"""
CSV and JSON writers for run results.

Floats are written with ``repr``, the shortest decimal string that reads back
to the same binary64 value.
"""

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

from .assembly import State
from .experiments import ConvergenceRow
from .mesh import AdmissibleMesh, mesh_to_json
from .problem import DiscreteProblem
from .solver import TimeLoopResult
from .steady import LongTimeGap, SteadySolution


def _cell(value: float | int | None) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def _write_rows(
    path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]
) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def write_trace(path: Path, run: TimeLoopResult) -> None:
    """``step,time,H,D,mass_1..mass_I,newton_iters`` for every step."""
    n_species = run.problem.n_species
    header = ["step", "time", "H", "D"]
    header += [f"mass_{i}" for i in range(1, n_species + 1)]
    header.append("newton_iters")
    iterations = (0,) + run.newton_iterations
    rows = (
        [
            _cell(step),
            _cell(float(run.times[step])),
            _cell(report.total),
            _cell(report.dissipation),
            *(_cell(m) for m in report.masses[1:]),
            _cell(iterations[step]),
        ]
        for step, report in enumerate(run.energies)
    )
    _write_rows(path, header, rows)


def write_snapshot(path: Path, problem: DiscreteProblem, state: State) -> None:
    """``x(,y),u_0..u_I,phi`` per cell center."""
    mesh = problem.mesh
    coords = ["x", "y"][: mesh.dimension]
    header = coords + [f"u_{i}" for i in range(problem.n_species + 1)] + ["phi"]
    fractions = state.all_fractions()
    rows = (
        [
            *(_cell(float(c)) for c in mesh.cell_centers[k]),
            *(_cell(float(u)) for u in fractions[:, k]),
            _cell(float(state.potential[k])),
        ]
        for k in range(mesh.n_cells)
    )
    _write_rows(path, header, rows)


def write_snapshots(directory: Path, run: TimeLoopResult) -> list[Path]:
    paths: list[Path] = []
    for snap in run.snapshots:
        path = directory / f"snapshot_{snap.step}.csv"
        write_snapshot(path, run.problem, snap.state)
        paths.append(path)
    return paths


def write_convergence(path: Path, rows: Sequence[ConvergenceRow]) -> None:
    _write_rows(
        path,
        ["n_cells", "error", "observed_order"],
        ([_cell(r.n_cells), _cell(r.error), _cell(r.observed_order)] for r in rows),
    )


def write_relative_energy(path: Path, gap: LongTimeGap) -> None:
    _write_rows(
        path,
        ["time", "H_rel", "U_gap_inf"],
        (
            [_cell(t), _cell(h), _cell(g)]
            for t, h, g in zip(gap.times, gap.relative_energy, gap.fraction_gap)
        ),
    )


def steady_summary(solution: SteadySolution) -> dict[str, object]:
    return {
        "mu": [float(m) for m in solution.mu],
        "psi_value": solution.psi_value,
        "kkt_residual": solution.kkt_residual,
        "mass_residual": solution.mass_residual,
        "iterations": solution.iterations,
    }


def write_json(path: Path, data: object) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    _ = path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def write_mesh(path: Path, mesh: AdmissibleMesh) -> None:
    write_json(path, mesh_to_json(mesh))
