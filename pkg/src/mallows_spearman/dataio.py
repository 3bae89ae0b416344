"""File formats: rankings CSV, covariates CSV, trace export, run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import DataValidationError
from .inference import McmcTrace, TraceSummary
from .perm import Ranking, RankingSample


def load_rankings_csv(path) -> tuple[RankingSample, int]:
    """Read a rankings CSV: header item_1..item_n, one assessor per row.

    Returns (sample, n); the item count comes from the header so an empty
    sample still carries its dimension.  Every row must be a permutation
    of 1..n; bad rows are rejected with their line numbers, never repaired.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{path}: empty file") from None
        n = len(header)
        expected = [f"item_{i}" for i in range(1, n + 1)]
        if [h.strip() for h in header] != expected:
            raise DataValidationError(
                f"{path}: header must be {','.join(expected)}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != n:
                raise DataValidationError(
                    f"{path}: line {lineno}: expected {n} fields, got {len(row)}"
                )
            try:
                ranks = tuple(int(v) for v in row)
            except ValueError:
                raise DataValidationError(
                    f"{path}: line {lineno}: non-integer rank in {row}"
                ) from None
            try:
                rows.append(Ranking(ranks))
            except ValueError as exc:
                raise DataValidationError(
                    f"{path}: line {lineno}: {exc}"
                ) from None
    return RankingSample(tuple(rows)), n


def save_rankings_csv(sample: RankingSample, path) -> Path:
    path = Path(path)
    n = sample.n
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"item_{i}" for i in range(1, n + 1)])
        for r in sample.rows:
            writer.writerow(list(r.ranks))
    return path


def load_covariates_csv(path) -> tuple[list[str], list[str], list[list[float]]]:
    """Read a covariates CSV: header of names, first column item labels.

    Returns (item labels, covariate names, item-by-covariate matrix);
    missing or non-numeric cells are errors.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{path}: empty file") from None
        if len(header) < 2:
            raise DataValidationError(f"{path}: need at least one covariate column")
        names = [h.strip() for h in header[1:]]
        items: list[str] = []
        matrix: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise DataValidationError(
                    f"{path}: line {lineno}: expected {len(header)} fields"
                )
            items.append(row[0].strip())
            vals = []
            for name, cell in zip(names, row[1:]):
                cell = cell.strip()
                if not cell:
                    raise DataValidationError(
                        f"{path}: line {lineno}: missing value for {name!r}"
                    )
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataValidationError(
                        f"{path}: line {lineno}: non-numeric value {cell!r}"
                    ) from None
            matrix.append(vals)
    if not matrix:
        raise DataValidationError(f"{path}: no data rows")
    return items, names, matrix


def trace_to_csv(trace: McmcTrace, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "rho", "theta"])
        for i, (r, t) in enumerate(zip(trace.rho_states, trace.theta_states), 1):
            writer.writerow([i, " ".join(str(v) for v in r.ranks), repr(t)])
    return path


def format_number(x) -> str:
    """Render integral values without a decimal point: 10 -> '10', 3.5 -> '3.5'."""
    xf = float(x)
    return str(int(xf)) if xf == int(xf) else str(xf)


def summary_to_dict(summary: TraceSummary, trace: McmcTrace) -> dict:
    return {
        "epp": {" ".join(map(str, r.ranks)): p for r, p in summary.epp.items()},
        "map_ranking": " ".join(map(str, summary.map_ranking.ranks)),
        "map_tied": summary.map_tied,
        "theta_mean": summary.theta_mean,
        "theta_ci": list(summary.theta_ci),
        "accept_rho": trace.accept_rho,
        "accept_theta": trace.accept_theta,
        "kept_states": len(trace),
    }


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Everything needed to re-run a command bit-identically."""

    command: list[str]
    config: dict
    seed: int | None
    inputs: dict = field(default_factory=dict)   # path -> sha256
    outputs: list[str] = field(default_factory=list)
    wall_time_s: float = 0.0

    def write(self, path) -> Path:
        return write_json(asdict(self), path)


def read_manifest(path) -> RunManifest:
    data = json.loads(Path(path).read_text())
    return RunManifest(**data)
