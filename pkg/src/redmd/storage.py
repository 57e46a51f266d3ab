"""File formats shared by the CLI and external tooling.

Trajectory CSV: header ``x1,...,xN``, one state per row, consecutive rows form
snapshot pairs. All floats are printed with 17 significant digits so a
write/read round trip reproduces the doubles exactly.
"""

from __future__ import annotations

import csv

import numpy as np


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_trajectory_csv(path, trajectory) -> None:
    trajectory = np.asarray(trajectory, dtype=float)
    if trajectory.ndim != 2:
        raise ValueError("trajectory must be an (N, L) matrix")
    n = trajectory.shape[0]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(n)])
        for col in trajectory.T:
            writer.writerow([fmt(v) for v in col])


def read_trajectory_csv(path) -> tuple[np.ndarray, list[int]]:
    """Parse a trajectory CSV into an (N, rows) matrix.

    Malformed rows (wrong width or unparseable numbers) become NaN columns and
    their 1-based line numbers are returned so the caller can report and skip
    them; the streaming layer rejects NaN pairs without mutating state.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        n = len(header)
        if n == 0 or not all(h.strip() for h in header):
            raise ValueError(f"{path}: malformed header")
        columns = []
        bad_lines = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                values = [float(v) for v in row]
            except ValueError:
                values = None
            if values is None or len(values) != n:
                bad_lines.append(line_no)
                columns.append([float("nan")] * n)
            else:
                columns.append(values)
    if not columns:
        raise ValueError(f"{path}: no data rows")
    return np.asarray(columns, dtype=float).T, bad_lines


def write_spectrum_csv(path, spectrum) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "re", "im", "magnitude"])
        for idx, value in enumerate(spectrum.eigenvalues):
            writer.writerow([idx, fmt(value.real), fmt(value.imag), fmt(abs(value))])


def write_eigen_history_csv(path, rows) -> None:
    """Eigenvalue trajectory rows (sample_count, index, re, im)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_count", "index", "re", "im"])
        for count, idx, value in rows:
            writer.writerow([count, idx, fmt(value.real), fmt(value.imag)])


def write_horizon_csv(path, results) -> None:
    """Fig-4-style rows (train_size, state_index, mse, mean_mse)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["train_size", "state_index", "mse", "mean_mse"])
        for result in results:
            for idx, value in enumerate(result.per_state_mse):
                writer.writerow([result.train_size, idx, fmt(value), fmt(result.mean_mse)])


def write_sweep_csv(path, rows, best_delta: float) -> None:
    """Validation-error table rows (delta, mean_mse, selected)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta", "mean_mse", "selected"])
        for delta, mean_mse in rows:
            writer.writerow([fmt(delta), fmt(mean_mse), int(delta == best_delta)])


def write_bench_csv(path, rows) -> None:
    header = [
        "checkpoint",
        "stream_cumulative_s",
        "stream_eig_s",
        "batch_fit_s",
        "batch_eig_s",
        "batch_over_stream_ratio",
        "every_step_recompute_extrapolated_s",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([row[0]] + [fmt(v) for v in row[1:]])


def write_update_times_csv(path, times) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["update_index", "seconds"])
        for idx, seconds in enumerate(times, start=1):
            writer.writerow([idx, fmt(seconds)])
