"""Seeded, batch-parallel simulation of measurement trials.

Stream derivation
-----------------
``run_trials`` splits ``n`` trials into consecutive batches of ``batch_size``
(the last one may be shorter).  Batch ``i`` draws from

    numpy.random.Generator(PCG64(SeedSequence(seed, spawn_key=(i,))))

so each batch is an independent, reproducible work unit.  Batch counts are
merged by addition, which makes the result independent of the order in
which batches finish and of the number of worker threads.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .models import (
    OUTCOME_PAIRS,
    JointDist,
    LambdaLaw,
    QuantumModel,
    reduce_angle,
)

DEFAULT_BATCH_SIZE = 1 << 18


def substream(seed: int, batch_index: int) -> np.random.Generator:
    """Generator for batch ``batch_index`` of a run seeded with ``seed``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(batch_index),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class TrialRecord:
    a: float
    b: float
    lam: float
    A: int
    B: int


@dataclass(frozen=True)
class EmpiricalJoint:
    """Outcome-pair counts, in the cell order ++, +-, -+, --."""

    counts: tuple[int, int, int, int]
    n_total: int

    def __post_init__(self):
        if sum(self.counts) != self.n_total or min(self.counts) < 0:
            raise ValueError(f"counts {self.counts} do not add up to {self.n_total}")

    @property
    def frequencies(self) -> np.ndarray:
        return np.array(self.counts, dtype=float) / self.n_total

    @property
    def std_errors(self) -> np.ndarray:
        p = self.frequencies
        return np.sqrt(p * (1 - p) / self.n_total)

    def marginal(self, wing: str) -> float:
        f = self.frequencies
        return float(f[0] + f[1]) if wing == "A" else float(f[0] + f[2])

    def z_scores(self, exact: JointDist) -> np.ndarray:
        """(observed - exact) / standard error per cell; 0 where both are degenerate."""
        diff = self.frequencies - exact.as_array()
        se = self.std_errors
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, diff / se, np.where(diff == 0, 0.0, np.inf))
        return z

    def chi_square(self, exact: JointDist) -> tuple[float, float]:
        """Pearson chi-square statistic and p-value against ``exact``.

        Cells with zero exact probability are dropped; any count in such a
        cell is an outright failure (p-value 0).
        """
        expected = exact.as_array() * self.n_total
        observed = np.array(self.counts, dtype=float)
        live = expected > 0
        if np.any(observed[~live] > 0):
            return math.inf, 0.0
        if live.sum() < 2:
            return 0.0, 1.0
        obs, exp = observed[live], expected[live]
        exp = exp * obs.sum() / exp.sum()
        stat, pvalue = stats.chisquare(obs, exp)
        return float(stat), float(pvalue)


def sample_lambda(law: LambdaLaw, rng: np.random.Generator, size=None):
    """Draw lambda from ``law``: atom by weight, or inverse CDF over segments."""
    if law.kind == "atomic":
        pos = np.array([p for p, _ in law.atoms])
        w = np.array([w for _, w in law.atoms])
        idx = rng.choice(len(pos), size=size, p=w / w.sum())
        return pos[idx] if size is not None else float(pos[idx])
    edges = law.edges()
    masses = np.array([s.density * s.length for s in law.segments])
    cdf = np.cumsum(masses)
    cdf /= cdf[-1]
    u = rng.random(size)
    seg = np.minimum(np.searchsorted(cdf, u, side="right"), len(masses) - 1)
    lo = np.where(seg > 0, cdf[seg - 1], 0.0)
    frac = (u - lo) / (cdf[seg] - lo)
    lam = edges[seg] + frac * (edges[seg + 1] - edges[seg])
    lam = np.minimum(lam, np.nextafter(math.pi, 0))
    return lam if size is not None else float(lam)


def _simulate(model, a: float, b: float, n: int, rng: np.random.Generator):
    """Vectorised trials; returns (lambda, A, B) arrays."""
    if isinstance(model, QuantumModel):
        probs = model.joint(a, b).as_array()
        cell = rng.choice(4, size=n, p=probs)
        pairs = np.array(OUTCOME_PAIRS)
        return np.full(n, np.nan), pairs[cell, 0], pairs[cell, 1]
    lam = sample_lambda(model.law(a, b), rng, size=n)
    u = rng.random((2, n))
    A = np.where(u[0] < model.response_A(a, lam), 1, -1)
    B = np.where(u[1] < model.response_B(b, lam), 1, -1)
    return lam, A, B


def sample_outcomes(model, a: float, b: float, rng: np.random.Generator) -> TrialRecord:
    """One trial: draw lambda, then A and B independently given lambda."""
    a, b = reduce_angle(a), reduce_angle(b)
    lam, A, B = _simulate(model, a, b, 1, rng)
    return TrialRecord(a, b, float(lam[0]), int(A[0]), int(B[0]))


def _count(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    idx = 2 * (A == -1) + (B == -1)
    return np.bincount(idx, minlength=4)


def _batches(n: int, batch_size: int):
    return [(i, min(batch_size, n - start)) for i, start in enumerate(range(0, n, batch_size))]


def run_trials(model, a: float, b: float, n: int, seed: int,
               batch_size: int = DEFAULT_BATCH_SIZE, workers: int = 1) -> EmpiricalJoint:
    """Simulate ``n`` trials and tally the outcome pairs.

    The result is a deterministic function of all arguments except
    ``workers``, which only changes how batches are scheduled.
    """
    if n < 1:
        raise ValueError("need at least one trial")
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    a, b = reduce_angle(a), reduce_angle(b)

    def one(batch):
        i, size = batch
        _, A, B = _simulate(model, a, b, size, substream(seed, i))
        return _count(A, B)

    batches = _batches(n, batch_size)
    if workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(one, batches))
    else:
        parts = [one(bt) for bt in batches]
    counts = np.sum(parts, axis=0)
    return EmpiricalJoint(tuple(int(c) for c in counts), n)


def simulate_records(model, a: float, b: float, n: int, seed: int,
                     batch_size: int = DEFAULT_BATCH_SIZE) -> list[TrialRecord]:
    """The individual trials behind ``run_trials`` (same streams, same order)."""
    a, b = reduce_angle(a), reduce_angle(b)
    out: list[TrialRecord] = []
    for i, size in _batches(n, batch_size):
        lam, A, B = _simulate(model, a, b, size, substream(seed, i))
        out.extend(TrialRecord(a, b, float(l), int(x), int(y)) for l, x, y in zip(lam, A, B))
    return out


LOG_COLUMNS = ("a", "b", "lambda", "A", "B")


def write_trial_log(path, records) -> None:
    """One trial per line: ``a,b,lambda,A,B`` as decimal text, no header."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for r in records:
            w.writerow([format(r.a, ".17g"), format(r.b, ".17g"), format(r.lam, ".17g"), r.A, r.B])


def read_trial_log(path) -> list[TrialRecord]:
    with open(Path(path), newline="") as fh:
        return [TrialRecord(float(a), float(b), float(lam), int(A), int(B))
                for a, b, lam, A, B in csv.reader(fh)]
