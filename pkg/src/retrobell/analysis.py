"""CHSH values and their maximisation, no-signaling deviations, and the
information the hidden variable carries about the settings."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .evaluator import combine, correlator, marginal
from .models import (
    PI,
    POSITION_TOL,
    QuantumModel,
    angular_distance,
    collect_breakpoints,
    reduce_angle,
)

GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class ChshSettings:
    a: float
    a_prime: float
    b: float
    b_prime: float

    def __post_init__(self):
        for name in ("a", "a_prime", "b", "b_prime"):
            object.__setattr__(self, name, reduce_angle(getattr(self, name)))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a, self.a_prime, self.b, self.b_prime)


def _E(model, a, b) -> float:
    return correlator(combine(model, a, b))


def chsh(model, s: ChshSettings) -> float:
    """S = E(a,b) - E(a,b') + E(a',b) + E(a',b')."""
    return (_E(model, s.a, s.b) - _E(model, s.a, s.b_prime)
            + _E(model, s.a_prime, s.b) + _E(model, s.a_prime, s.b_prime))


def _golden_max(f, lo: float, hi: float, tol: float = 1e-10) -> tuple[float, float]:
    """Golden-section search for a maximum of ``f`` on [lo, hi]."""
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def chsh_scan(model, grid_n: int = 16, refine_iters: int = 200,
              tol: float = 1e-9) -> tuple[float, ChshSettings]:
    """Maximise |S| over all four settings.

    A full grid of ``grid_n`` points per axis is searched first.  Since S only
    needs correlators at (a_i, b_j) pairs, the grid costs ``grid_n**2``
    evaluations.  The best grid point is then refined by coordinate-wise
    golden-section passes until a pass gains less than ``tol``.
    """
    if grid_n < 8:
        raise ValueError("grid_n must be at least 8")
    g = np.arange(grid_n) * (PI / grid_n)
    E = np.array([[_E(model, x, y) for y in g] for x in g])
    # S[i, i', j, j'] = E[i,j] - E[i,j'] + E[i',j] + E[i',j']
    S = (E[:, None, :, None] - E[:, None, None, :]
         + E[None, :, :, None] + E[None, :, None, :])
    flat = int(np.argmax(np.abs(S)))
    i, ip, j, jp = np.unravel_index(flat, S.shape)
    x = [g[i], g[ip], g[j], g[jp]]
    best = abs(float(S[i, ip, j, jp]))

    def value(v):
        return abs(chsh(model, ChshSettings(*v)))

    width = PI / grid_n
    for _ in range(refine_iters):
        start = best
        for k in range(4):
            def along(t, k=k):
                trial = list(x)
                trial[k] = t
                return value(trial)

            t, val = _golden_max(along, x[k] - width, x[k] + width)
            if val > best:
                best, x[k] = val, t
        if best - start < tol:
            break
    return best, ChshSettings(*x)


def no_signaling_deviation(model, probe_settings: Sequence[float]) -> float:
    """Largest change of a local marginal as the remote setting varies over the probes."""
    probes = [reduce_angle(p) for p in probe_settings]
    if not probes:
        raise ValueError("need at least one probe setting")
    worst = 0.0
    for s in probes:
        ma = [marginal(combine(model, s, r), "A") for r in probes]
        mb = [marginal(combine(model, r, s), "B") for r in probes]
        worst = max(worst, max(ma) - min(ma), max(mb) - min(mb))
    return worst


# ---------------------------------------------------------------------------
# mutual information

@dataclass(frozen=True)
class SettingsEnsemble:
    """A prior over setting pairs: ``((a, b), weight)`` entries."""

    members: tuple[tuple[tuple[float, float], float], ...]

    def __post_init__(self):
        w = np.array([wt for _, wt in self.members], dtype=float)
        if len(w) == 0 or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError("ensemble weights must be nonnegative and sum to 1")

    @classmethod
    def uniform(cls, pairs: Iterable[tuple[float, float]]) -> "SettingsEnsemble":
        pairs = [(reduce_angle(a), reduce_angle(b)) for a, b in pairs]
        return cls(tuple((p, 1 / len(pairs)) for p in pairs))

    @classmethod
    def grid(cls, n: int) -> "SettingsEnsemble":
        """Uniform over the n x n grid of settings k*pi/n."""
        g = [k * PI / n for k in range(n)]
        return cls.uniform([(a, b) for a in g for b in g])

    @classmethod
    def chsh_quadruple(cls) -> "SettingsEnsemble":
        """The four pairs of the standard Tsirelson-saturating settings."""
        a, ap, b, bp = 0.0, PI / 4, PI / 8, 3 * PI / 8
        return cls.uniform([(a, b), (a, bp), (ap, b), (ap, bp)])

    @property
    def pairs(self):
        return [p for p, _ in self.members]

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.members])


def _kl_terms(cond: np.ndarray, w: np.ndarray, cell: np.ndarray) -> float:
    """sum_s w_s sum_k cell_k p_s(k) log2(p_s(k)/pbar(k)) for tabulated p_s."""
    pbar = w @ cond
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(cond > 0, cond / pbar, 1.0)
        terms = np.where(cond > 0, cond * np.log2(ratio), 0.0)
    return max(0.0, float(w @ (terms @ cell)))


def _tabulate(model, ensemble: SettingsEnsemble) -> tuple[np.ndarray, np.ndarray]:
    """Rows p(lambda | s) on a common support, plus the per-column measure.

    Atomic laws are tabulated over the merged alphabet of atom positions
    (column measure 1).  Piecewise laws are tabulated on the common
    refinement of all segment edges (column measure = interval length).
    """
    if isinstance(model, QuantumModel):
        raise ValueError("the quantum model has no hidden variable")
    laws = [model.law(a, b) for a, b in ensemble.pairs]
    kinds = {law.kind for law in laws}
    if len(kinds) != 1:
        raise ValueError("mixed atomic/piecewise ensembles have no common information measure")
    if kinds == {"atomic"}:
        alphabet: list[float] = []
        for law in laws:
            for pos, _ in law.atoms:
                if not any(angular_distance(pos, q) <= POSITION_TOL for q in alphabet):
                    alphabet.append(pos)
        cond = np.zeros((len(laws), len(alphabet)))
        for r, law in enumerate(laws):
            for pos, wt in law.atoms:
                c = next(i for i, q in enumerate(alphabet) if angular_distance(pos, q) <= POSITION_TOL)
                cond[r, c] += wt
        return cond, np.ones(len(alphabet))
    edges = np.array(collect_breakpoints([e for law in laws for e in law.edges()]))
    mids = 0.5 * (edges[:-1] + edges[1:])
    cond = np.array([law.density(mids) for law in laws])
    return cond, np.diff(edges)


def mutual_information(model, ensemble: SettingsEnsemble) -> float:
    """I(lambda; (a, b)) in bits under the settings prior ``ensemble``."""
    cond, cell = _tabulate(model, ensemble)
    return _kl_terms(cond, ensemble.weights, cell)


def mutual_information_by_wing(model, ensemble: SettingsEnsemble) -> dict[str, float]:
    """I(lambda; (a,b)) together with I(lambda; a) and I(lambda; b) separately."""
    cond, cell = _tabulate(model, ensemble)
    w = ensemble.weights
    out = {"joint": _kl_terms(cond, w, cell)}
    for wing, idx in (("a", 0), ("b", 1)):
        keys = sorted({p[idx] for p in ensemble.pairs})
        wk = np.zeros(len(keys))
        rows = np.zeros((len(keys), cond.shape[1]))
        for (pair, wt), row in zip(ensemble.members, cond):
            k = keys.index(pair[idx])
            wk[k] += wt
            rows[k] += wt * row
        nz = wk > 0
        out[wing] = _kl_terms(rows[nz] / wk[nz, None], wk[nz], cell)
    return out
