"""Exact evaluation of the combination integral

    p_ab(A, B) = integral dlambda  p_ab(lambda) p_a,lambda(A) p_b,lambda(B)

for every built-in model.  Atomic laws reduce to a weighted sum.  For a
piecewise-constant density the circle is cut at the density's segment edges
and at the responses' sign boundaries; on each resulting interval both
responses are of the form ``c0 + c1 cos(2 lambda - 2 s)`` and the integral
has an elementary antiderivative.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .models import (
    OUTCOME_PAIRS,
    HiddenVariableModel,
    JointDist,
    LambdaLaw,
    QuantumModel,
    collect_breakpoints,
    reduce_angle,
)


def _int_cos2(s: float, left: float, right: float) -> float:
    """Integral of cos(2 lambda - 2 s) over [left, right]."""
    return 0.5 * (math.sin(2 * right - 2 * s) - math.sin(2 * left - 2 * s))


def _int_cos2_cos2(a: float, b: float, left: float, right: float) -> float:
    """Integral of cos(2 lambda - 2a) cos(2 lambda - 2b) over [left, right]."""
    phase = 2 * a + 2 * b
    oscillating = 0.25 * (math.sin(4 * right - phase) - math.sin(4 * left - phase))
    return 0.5 * ((right - left) * math.cos(2 * a - 2 * b) + oscillating)


def breakpoints(model: HiddenVariableModel, a: float, b: float, law: LambdaLaw | None = None) -> list[float]:
    """Interval edges in ``[0, pi]`` on which the combination integrand is smooth."""
    law = law if law is not None else model.law(a, b)
    pts = list(law.edges()) if law.kind == "piecewise" else []
    pts += model.response_A.breakpoints(a) + model.response_B.breakpoints(b)
    return collect_breakpoints(pts)


def _combine_atomic(model, law, a, b) -> np.ndarray:
    cells = np.zeros(4)
    for pos, w in law.atoms:
        pa = float(model.response_A(a, pos))
        pb = float(model.response_B(b, pos))
        cells += w * np.array([pa * pb, pa * (1 - pb), (1 - pa) * pb, (1 - pa) * (1 - pb)])
    return cells


def _combine_piecewise(model, law, a, b) -> np.ndarray:
    cells = np.zeros(4)
    edges = breakpoints(model, a, b, law)
    for left, right in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (left + right)
        rho = law.density(mid)
        if rho == 0:
            continue
        length = right - left
        ia = _int_cos2(a, left, right)
        ib = _int_cos2(b, left, right)
        iab = _int_cos2_cos2(a, b, left, right)
        a0, a1 = model.response_A.trig_form(a, mid)
        b0, b1 = model.response_B.trig_form(b, mid)
        for k, (A, B) in enumerate(OUTCOME_PAIRS):
            # P(-1) = (1 - c0) - c1 cos(...)
            x0, x1 = (a0, a1) if A == 1 else (1 - a0, -a1)
            y0, y1 = (b0, b1) if B == 1 else (1 - b0, -b1)
            cells[k] += rho * (x0 * y0 * length + x0 * y1 * ib + x1 * y0 * ia + x1 * y1 * iab)
    return cells


def combine(model, a: float, b: float) -> JointDist:
    """Joint outcome distribution of ``model`` at settings (a, b), in closed form."""
    a, b = reduce_angle(a), reduce_angle(b)
    if isinstance(model, QuantumModel):
        return model.joint(a, b)
    law = model.law(a, b)
    if not isinstance(law, LambdaLaw):
        raise ValueError(f"model {model.name!r} produced an unsupported lambda law: {law!r}")
    if law.kind == "atomic":
        cells = _combine_atomic(model, law, a, b)
    else:
        cells = _combine_piecewise(model, law, a, b)
    return JointDist.from_raw(cells)


def combine_quadrature(model: HiddenVariableModel, a: float, b: float, epsabs: float = 1e-13) -> JointDist:
    """Adaptive-quadrature evaluation of the same integral; a cross-check only.

    Uses point evaluation of the density and the responses, integrated piece
    by piece between the breakpoints.
    """
    a, b = reduce_angle(a), reduce_angle(b)
    law = model.law(a, b)
    if law.kind == "atomic":
        raise ValueError("quadrature needs a density; atomic laws are summed exactly")
    edges = breakpoints(model, a, b, law)
    cells = np.zeros(4)
    for k, (A, B) in enumerate(OUTCOME_PAIRS):
        def integrand(lam, A=A, B=B):
            pa = model.response_A(a, lam)
            pb = model.response_B(b, lam)
            pa = pa if A == 1 else 1 - pa
            pb = pb if B == 1 else 1 - pb
            return law.density(lam) * pa * pb

        for left, right in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(integrand, left, right, epsabs=epsabs, epsrel=1e-12, limit=200)
            cells[k] += val
    return JointDist.from_raw(cells, clamp_tol=1e-12)


def correlator(j: JointDist) -> float:
    """Expectation of the product A*B."""
    return j.p_pp - j.p_pm - j.p_mp + j.p_mm


def marginal(j: JointDist, wing: str) -> float:
    """Probability of +1 on wing ``"A"`` or ``"B"``."""
    if wing == "A":
        return j.p_pp + j.p_pm
    if wing == "B":
        return j.p_pp + j.p_mp
    raise ValueError(f"wing must be 'A' or 'B', got {wing!r}")


def tv_distance(j1: JointDist, j2: JointDist) -> float:
    return 0.5 * float(np.abs(j1.as_array() - j2.as_array()).sum())
