"""Angles, outcome distributions, hidden-variable laws and the built-in models.

All angles are polarizer orientations or polarizations and therefore live on
the circle of circumference pi.  They are stored as plain floats reduced into
[0, pi); doubling (2a, 2b, 2*lambda) only happens inside formulas.

Four models are provided:

``qm``
    The singlet-state photon probabilities, ``1/4 [1 + AB cos(2a - 2b)]``.
``simplistic``
    A retrocausal model: lambda sits on one of four point masses attached to
    the two settings, and each photon then obeys Malus' law.
``hall``
    A deterministic model with a piecewise-constant, setting-dependent
    lambda density and outcomes fixed by the sign of ``cos(2s - 2lambda)``.
``baseline``
    Uniform, setting-independent lambda with the same deterministic
    responses as ``hall``.  It is Bell-local and measurement independent, and
    so cannot reproduce the quantum correlations.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

PI = math.pi
QUARTER_PI = math.pi / 4

# Atom positions / breakpoints closer than this are treated as identical.
POSITION_TOL = 1e-12
BREAKPOINT_TOL = 1e-14


# ---------------------------------------------------------------------------
# angles and outcomes

def reduce_angle(x):
    """Reduce ``x`` (radians) to its representative in ``[0, pi)``.

    Works on scalars and numpy arrays.  Non-finite input raises ``ValueError``.
    """
    if isinstance(x, (float, int)):
        if not math.isfinite(x):
            raise ValueError(f"angle must be finite, got {x!r}")
        r = x % PI
        return 0.0 if r >= PI else float(r)
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"angle must be finite, got {x!r}")
    r = np.mod(arr, PI)
    # np.mod can round up to exactly pi for tiny negative inputs
    r = np.where(r >= PI, 0.0, r)
    if r.ndim == 0:
        return float(r)
    return r


def angular_distance(a, b):
    """Distance between two orientations on the mod-pi circle, in ``[0, pi/2]``."""
    if isinstance(a, (float, int)) and isinstance(b, (float, int)):
        d = abs(a - b) % PI
        return min(d, PI - d)
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    d = np.mod(d, PI)
    d = np.minimum(d, PI - d)
    if d.ndim == 0:
        return float(d)
    return d


def check_outcome(outcome: int) -> int:
    if outcome not in (1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome!r}")
    return int(outcome)


# ---------------------------------------------------------------------------
# joint distributions

OUTCOME_PAIRS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class JointDist:
    """Probabilities of the four outcome pairs (A, B) in the order ++, +-, -+, --."""

    p_pp: float
    p_pm: float
    p_mp: float
    p_mm: float

    def __post_init__(self):
        probs = self.as_array()
        if np.any(probs < 0) or np.any(probs > 1) or not np.all(np.isfinite(probs)):
            raise ValueError(f"joint probabilities out of range: {probs}")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"joint probabilities sum to {probs.sum()!r}, not 1")

    @classmethod
    def from_array(cls, probs) -> "JointDist":
        p = [float(x) for x in probs]
        return cls(*p)

    @classmethod
    def from_raw(cls, probs, clamp_tol: float = 1e-14) -> "JointDist":
        """Build from integrated cell masses, clamping rounding-level negatives."""
        p = np.asarray(probs, dtype=float)
        if np.any(p < -clamp_tol):
            raise ValueError(f"negative cell probability {p.min()!r}")
        p = np.clip(p, 0.0, None)
        return cls.from_array(p / p.sum())

    def as_array(self) -> np.ndarray:
        return np.array([self.p_pp, self.p_pm, self.p_mp, self.p_mm])

    def prob(self, A: int, B: int) -> float:
        return float(self.as_array()[OUTCOME_PAIRS.index((check_outcome(A), check_outcome(B)))])

    def swapped(self) -> "JointDist":
        """The same distribution with the roles of the two wings exchanged."""
        return JointDist(self.p_pp, self.p_mp, self.p_pm, self.p_mm)


def qm_joint(a: float, b: float) -> JointDist:
    """Quantum prediction for a photon pair in the singlet state."""
    c = math.cos(2 * a - 2 * b)
    same = 0.25 * (1 + c)
    diff = 0.25 * (1 - c)
    return JointDist(same, diff, diff, same)


# ---------------------------------------------------------------------------
# lambda laws

@dataclass(frozen=True)
class Segment:
    left: float
    right: float
    density: float

    @property
    def length(self) -> float:
        return self.right - self.left


@dataclass(frozen=True)
class LambdaLaw:
    """A distribution of the hidden angle lambda over ``[0, pi)``.

    Either ``atoms`` (``(position, weight)`` point masses) or ``segments``
    (a partition of ``[0, pi)`` with a constant density per piece) is
    populated, never both.
    """

    atoms: tuple[tuple[float, float], ...] = ()
    segments: tuple[Segment, ...] = ()

    def __post_init__(self):
        if bool(self.atoms) == bool(self.segments):
            raise ValueError("exactly one of atoms/segments must be populated")
        if self.atoms:
            weights = np.array([w for _, w in self.atoms])
            if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
                raise ValueError(f"atom weights must be >= 0 and sum to 1: {weights}")
            for pos, _ in self.atoms:
                if not 0 <= pos < PI:
                    raise ValueError(f"atom position {pos!r} not canonical")
        else:
            segs = self.segments
            if abs(segs[0].left) > BREAKPOINT_TOL or abs(segs[-1].right - PI) > BREAKPOINT_TOL:
                raise ValueError("segments must cover [0, pi)")
            for s0, s1 in zip(segs, segs[1:]):
                if s0.right != s1.left:
                    raise ValueError("segments must be contiguous")
            if any(s.density < 0 or s.length <= 0 for s in segs):
                raise ValueError("segments need positive length and nonnegative density")
            if abs(self.mass() - 1) > 1e-10:
                raise ValueError(f"piecewise density has mass {self.mass()!r}")

    @property
    def kind(self) -> str:
        return "atomic" if self.atoms else "piecewise"

    @classmethod
    def atomic(cls, atoms) -> "LambdaLaw":
        """Point masses; positions are reduced and coinciding atoms merged."""
        merged: list[list[float]] = []
        for pos, w in atoms:
            pos = reduce_angle(pos)
            for entry in merged:
                if angular_distance(entry[0], pos) <= POSITION_TOL:
                    entry[1] += w
                    break
            else:
                merged.append([pos, float(w)])
        merged.sort()
        return cls(atoms=tuple((p, w) for p, w in merged))

    @classmethod
    def piecewise(cls, breakpoints, density_at: Callable[[float], float]) -> "LambdaLaw":
        """Piecewise-constant density with pieces split at ``breakpoints``.

        ``density_at`` is evaluated at each piece's midpoint.  Neighbouring
        pieces with identical density are merged.
        """
        edges = collect_breakpoints(breakpoints)
        segs: list[Segment] = []
        for left, right in zip(edges[:-1], edges[1:]):
            rho = float(density_at(0.5 * (left + right)))
            if segs and segs[-1].density == rho:
                segs[-1] = Segment(segs[-1].left, right, rho)
            else:
                segs.append(Segment(left, right, rho))
        return cls(segments=tuple(segs))

    @classmethod
    def uniform(cls) -> "LambdaLaw":
        return cls(segments=(Segment(0.0, PI, 1 / PI),))

    def mass(self) -> float:
        if self.atoms:
            return math.fsum(w for _, w in self.atoms)
        return math.fsum(s.density * s.length for s in self.segments)

    @property
    def edges_list(self) -> list[float]:
        return [s.left for s in self.segments] + [self.segments[-1].right]

    def edges(self) -> np.ndarray:
        """Segment boundaries, from 0 to pi inclusive (piecewise laws only)."""
        return np.array([s.left for s in self.segments] + [self.segments[-1].right])

    def density(self, lam):
        """Evaluate the piecewise density at canonical angle(s) ``lam``."""
        if self.atoms:
            raise TypeError("an atomic law has no density")
        if isinstance(lam, (float, int)):
            i = bisect.bisect_right(self.edges_list, lam) - 1
            return self.segments[min(max(i, 0), len(self.segments) - 1)].density
        edges = self.edges()
        rho = np.array([s.density for s in self.segments])
        idx = np.clip(np.searchsorted(edges, lam, side="right") - 1, 0, len(rho) - 1)
        out = rho[idx]
        return float(out) if np.ndim(out) == 0 else out


def collect_breakpoints(points) -> list[float]:
    """Sorted, deduplicated breakpoints in ``[0, pi]`` always including 0 and pi."""
    pts = sorted([0.0, PI] + [reduce_angle(p) for p in points])
    out = [pts[0]]
    for p in pts[1:]:
        if p - out[-1] > BREAKPOINT_TOL:
            out.append(p)
    out[-1] = PI
    return out


def simplistic_lambda_law(a: float, b: float) -> LambdaLaw:
    """Four equal point masses at a, a + pi/2, b, b + pi/2."""
    return LambdaLaw.atomic([(a, 0.25), (a + PI / 2, 0.25), (b, 0.25), (b + PI / 2, 0.25)])


def hall_Ahat(setting, lam):
    """Deterministic outcome ``sign[cos(2 setting - 2 lambda)]`` with sign(0) = +1."""
    d = angular_distance(setting, lam)
    if isinstance(d, float):
        return 1 if d <= QUARTER_PI + 1e-15 else -1
    # boundary distance pi/4 maps to +1; allow for rounding in the mod-pi reduction
    out = np.where(d <= QUARTER_PI + 1e-15, 1, -1)
    return int(out) if out.ndim == 0 else out


def hall_z(a: float, b: float) -> float:
    """``(2/pi) |2a - 2b|`` with ``|2a - 2b|`` read on the 2-pi circle, in ``[0, 2]``."""
    return (2 / PI) * (2 * angular_distance(a, b))


def hall_lambda_law(a: float, b: float) -> LambdaLaw:
    """Setting-dependent lambda density of Hall's deterministic model."""
    c = math.cos(2 * a - 2 * b)
    z = hall_z(a, b)

    def density_at(lam: float) -> float:
        ab = hall_Ahat(a, lam) * hall_Ahat(b, lam)
        return (1 + ab * c) / (1 + ab * (1 - z)) / PI

    points = [a + QUARTER_PI, a - QUARTER_PI, b + QUARTER_PI, b - QUARTER_PI]
    return LambdaLaw.piecewise(points, density_at)


# ---------------------------------------------------------------------------
# responses

def malus_prob(setting, lam, outcome: int):
    """Malus' law: ``cos^2`` to pass (outcome +1), ``sin^2`` to be reflected."""
    p_plus = 0.5 * (1 + np.cos(2 * (np.asarray(lam) - setting)))
    p = p_plus if check_outcome(outcome) == 1 else 1 - p_plus
    return float(p) if np.ndim(p) == 0 else p


def hall_response(setting, lam, outcome: int):
    """Deterministic response: probability 1 for the outcome ``hall_Ahat`` selects."""
    p = (np.asarray(hall_Ahat(setting, lam)) == check_outcome(outcome)).astype(float)
    return float(p) if p.ndim == 0 else p


class Response:
    """Probability of outcome +1 on one wing, given the local setting and lambda.

    Besides point evaluation, a response describes itself on any lambda
    interval free of its breakpoints as ``c0 + c1 cos(2 lambda - 2 setting)``;
    the exact evaluator integrates that form in closed form.
    """

    name = "response"

    def __call__(self, setting, lam):
        raise NotImplementedError

    def breakpoints(self, setting: float) -> list[float]:
        return []

    def trig_form(self, setting: float, lam_mid: float) -> tuple[float, float]:
        raise NotImplementedError


class MalusResponse(Response):
    name = "malus"

    def __call__(self, setting, lam):
        return malus_prob(setting, lam, 1)

    def trig_form(self, setting, lam_mid):
        return 0.5, 0.5


class SignResponse(Response):
    name = "sign"

    def __call__(self, setting, lam):
        return hall_response(setting, lam, 1)

    def breakpoints(self, setting):
        return [setting + QUARTER_PI, setting - QUARTER_PI]

    def trig_form(self, setting, lam_mid):
        return float(hall_Ahat(setting, lam_mid) == 1), 0.0


@dataclass(frozen=True)
class HiddenVariableModel:
    """A lambda law conditioned on the settings plus one response rule per wing."""

    name: str
    lambda_law: Callable[[float, float], LambdaLaw]
    response_A: Response
    response_B: Response
    measurement_independent: bool = False
    description: str = field(default="", compare=False)

    def law(self, a: float, b: float) -> LambdaLaw:
        return self.lambda_law(reduce_angle(a), reduce_angle(b))


@dataclass(frozen=True)
class QuantumModel:
    """The quantum prediction itself, with no hidden variable."""

    name: str = "qm"
    measurement_independent: bool = False
    description: str = "singlet-state quantum probabilities"

    def joint(self, a: float, b: float) -> JointDist:
        return qm_joint(reduce_angle(a), reduce_angle(b))


def _uniform_law(a, b):
    return LambdaLaw.uniform()


def _pinned_to_b(a, b):
    return LambdaLaw.atomic([(b, 1.0)])


def simplistic_model() -> HiddenVariableModel:
    return HiddenVariableModel(
        "simplistic", simplistic_lambda_law, MalusResponse(), MalusResponse(),
        description="four point masses at the settings, Malus responses",
    )


def hall_model() -> HiddenVariableModel:
    return HiddenVariableModel(
        "hall", hall_lambda_law, SignResponse(), SignResponse(),
        description="setting-dependent piecewise density, deterministic responses",
    )


def baseline_local_model() -> HiddenVariableModel:
    return HiddenVariableModel(
        "baseline", _uniform_law, SignResponse(), SignResponse(),
        measurement_independent=True,
        description="uniform lambda, deterministic responses (Bell-local)",
    )


def signaling_test_model() -> HiddenVariableModel:
    """A model that signals: wing A's statistics follow the remote setting b.

    lambda is pinned to b and wing A applies Malus' law to it, so
    ``P(A=+1) = cos^2(a - b)``.  Used to show the no-signaling check fires.
    """
    return HiddenVariableModel(
        "signaling", _pinned_to_b, MalusResponse(), MalusResponse(),
        description="lambda copies the remote setting; deliberately signaling",
    )


def quantum_model() -> QuantumModel:
    return QuantumModel()


MODEL_FACTORIES = {
    "qm": quantum_model,
    "simplistic": simplistic_model,
    "hall": hall_model,
    "baseline": baseline_local_model,
    "signaling": signaling_test_model,
}

BUILTIN_MODELS = ("qm", "simplistic", "hall", "baseline")


def get_model(name: str):
    try:
        return MODEL_FACTORIES[name]()
    except KeyError:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(MODEL_FACTORIES)}") from None
