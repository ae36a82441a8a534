"""Block-coverage model for pseudo-random memory-checksum attestation.

A checksum pass reads a uniform random subset of memory blocks; an injected
payload is detected iff the pass touches at least one modified block.  That
makes the detection probability hypergeometric:

    P(detect) = 1 - C(N-k, b) / C(N, b)

for N total blocks, k modified, b covered.  For a single modified block the
probability collapses to exactly b/N, the proportional relationship between
coverage and detection rate observed on real devices.  Linear fits of
measured (coverage, detection rate, running time) points turn a coverage
choice into an attestation method with a detection rate and a running cost.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import CalibrationError, ValidationError
from .model import AttestationMethod


@dataclass(frozen=True)
class MemoryLayout:
    """Program memory as checksum blocks."""

    total_blocks: int
    block_size_bytes: int = 500

    def __post_init__(self):
        if self.total_blocks < 1:
            raise ValidationError(f"total_blocks must be >= 1, got {self.total_blocks}")
        if self.block_size_bytes < 1:
            raise ValidationError(
                f"block_size_bytes must be >= 1, got {self.block_size_bytes}"
            )


def _check_counts(layout: MemoryLayout, modified_blocks: int, covered_blocks: int) -> None:
    n = layout.total_blocks
    if not 0 <= modified_blocks <= n:
        raise ValidationError(
            f"modified_blocks {modified_blocks} outside [0, {n}]"
        )
    if not 0 <= covered_blocks <= n:
        raise ValidationError(
            f"covered_blocks {covered_blocks} outside [0, {n}]"
        )


def checksum_detection_probability(
    layout: MemoryLayout, modified_blocks: int, covered_blocks: int
) -> float:
    """Probability a uniform random covered-block subset hits a modified block.

    The miss probability C(N-k, b) / C(N, b) telescopes to the k-factor
    product of (N-b-i) / (N-i), i.e. the chance that every modified block
    falls outside the covered set.  Both products are kept as exact integers
    and divided once, so no large factorials appear and the k=1 case rounds
    to exactly b/N.
    """
    _check_counts(layout, modified_blocks, covered_blocks)
    n = layout.total_blocks
    k = modified_blocks
    b = covered_blocks
    if k == 0 or b == 0:
        return 0.0
    if b > n - k:
        return 1.0
    miss_numer = 1
    miss_denom = 1
    for i in range(k):
        miss_numer *= n - b - i
        miss_denom *= n - i
    return (miss_denom - miss_numer) / miss_denom


def simulate_attestation(
    layout: MemoryLayout,
    modified_blocks: int,
    covered_blocks: int,
    trials: int,
    seed: int,
) -> float:
    """Empirical detection rate over independently drawn random coverings.

    Each trial draws the number of modified blocks in a without-replacement
    sample of `covered_blocks` blocks; detection means at least one.
    Deterministic given the seed.
    """
    _check_counts(layout, modified_blocks, covered_blocks)
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    n = layout.total_blocks
    k = modified_blocks
    b = covered_blocks
    if k == 0 or b == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    hits = rng.hypergeometric(k, n - k, b, size=trials)
    return float(np.count_nonzero(hits) / trials)


@dataclass(frozen=True)
class CoverageCalibration:
    """Linear maps from coverage fraction to detection rate and running time
    (milliseconds), with the root-mean-square residual of each fit."""

    detection_slope: float
    detection_intercept: float
    cost_slope: float
    cost_intercept: float
    detection_residual: float = 0.0
    cost_residual: float = 0.0

    def detection_rate(self, coverage: float) -> float:
        raw = self.detection_slope * coverage + self.detection_intercept
        return min(1.0, max(0.0, raw))

    def runtime_ms(self, coverage: float) -> float:
        return max(0.0, self.cost_slope * coverage + self.cost_intercept)


# Synthetic default when no measurements are supplied: detection rate equal
# to coverage, one millisecond per unit coverage.
IDENTITY_CALIBRATION = CoverageCalibration(
    detection_slope=1.0,
    detection_intercept=0.0,
    cost_slope=1.0,
    cost_intercept=0.0,
)


def _fit_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), residual


def calibrate(measurements: Sequence[tuple[float, float, float]]) -> CoverageCalibration:
    """Least-squares linear fits of detection rate and running time against
    coverage fraction.  Needs at least two distinct coverage values."""
    if len(measurements) < 2:
        raise CalibrationError("need at least 2 measurements to fit a line")
    x = np.array([m[0] for m in measurements], dtype=np.float64)
    det = np.array([m[1] for m in measurements], dtype=np.float64)
    rt = np.array([m[2] for m in measurements], dtype=np.float64)
    if len(np.unique(x)) < 2:
        raise CalibrationError("need at least 2 distinct coverage values to fit a line")
    ds, di, dr = _fit_line(x, det)
    cs, ci, cr = _fit_line(x, rt)
    return CoverageCalibration(
        detection_slope=ds,
        detection_intercept=di,
        cost_slope=cs,
        cost_intercept=ci,
        detection_residual=dr,
        cost_residual=cr,
    )


MEASUREMENTS_HEADER = ("coverage", "detection_rate", "runtime_ms")


def load_measurements_csv(source: str | Path) -> list[tuple[float, float, float]]:
    """Read calibration measurements from a CSV with header
    coverage,detection_rate,runtime_ms (coverage as a fraction in [0, 1])."""
    path = Path(source)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CalibrationError(f"{path}: empty calibration file") from None
        if tuple(h.strip() for h in header) != MEASUREMENTS_HEADER:
            raise CalibrationError(
                f"{path}: expected header {','.join(MEASUREMENTS_HEADER)}, "
                f"got {','.join(header)}"
            )
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                coverage, det, rt = (float(v) for v in row)
            except ValueError:
                raise CalibrationError(f"{path}:{lineno}: non-numeric row {row}") from None
            if not 0.0 <= coverage <= 1.0:
                raise CalibrationError(
                    f"{path}:{lineno}: coverage {coverage} outside [0, 1]"
                )
            out.append((coverage, det, rt))
    return out


def method_from_coverage(
    coverage: float,
    calibration: CoverageCalibration,
    cost_scale: float = 1.0,
    method_id: str | None = None,
) -> AttestationMethod:
    """Build an attestation method for a given checksum coverage fraction:
    detection rate from the detection fit (clamped to [0, 1]), running cost
    from the runtime fit times `cost_scale` (floored at 0)."""
    if not 0.0 <= coverage <= 1.0:
        raise ValidationError(f"coverage {coverage} outside [0, 1]")
    return AttestationMethod(
        id=method_id if method_id is not None else f"checksum-{coverage:g}",
        detection_rate=calibration.detection_rate(coverage),
        run_cost=calibration.runtime_ms(coverage) * cost_scale,
    )
