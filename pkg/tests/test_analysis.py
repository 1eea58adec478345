import math
from collections import defaultdict
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from retrobell.analysis import (
    ChshSettings,
    SettingsEnsemble,
    chsh,
    chsh_scan,
    mutual_information,
    mutual_information_by_wing,
    no_signaling_deviation,
)
from retrobell.models import PI, get_model, signaling_test_model

TSIRELSON = 2 * math.sqrt(2)
STANDARD = ChshSettings(0, PI / 4, PI / 8, 3 * PI / 8)
PROBES = [0.05 + k * PI / 16 for k in range(16)]


def test_chsh_qm_standard_settings():
    # E = cos(2a - 2b): 0.7071 - (-0.7071) + 0.7071 + 0.7071
    e = lambda a, b: math.cos(2 * a - 2 * b)
    oracle = e(0, PI / 8) - e(0, 3 * PI / 8) + e(PI / 4, PI / 8) + e(PI / 4, 3 * PI / 8)
    assert chsh(get_model("qm"), STANDARD) == pytest.approx(oracle, abs=1e-12)
    assert chsh(get_model("qm"), STANDARD) == pytest.approx(TSIRELSON, abs=1e-12)


def test_chsh_baseline_standard_settings():
    assert chsh(get_model("baseline"), STANDARD) == pytest.approx(0.5 + 0.5 + 0.5 + 0.5, abs=1e-12)


@pytest.mark.parametrize("name", ["qm", "simplistic", "hall", "baseline"])
def test_chsh_degenerate_settings(name):
    s = ChshSettings(0.3, 0.3, 1.0, 1.0)
    val = chsh(get_model(name), s)
    assert abs(val) <= 2 + 1e-12


@pytest.mark.parametrize("name,target", [("qm", TSIRELSON), ("simplistic", TSIRELSON),
                                         ("hall", TSIRELSON), ("baseline", 2.0)])
def test_chsh_scan_default(name, target):
    best, arg = chsh_scan(get_model(name))
    assert best == pytest.approx(target, abs=1e-6)
    assert abs(chsh(get_model(name), arg)) == pytest.approx(best, abs=1e-12)


@pytest.mark.parametrize("grid_n", [9, 11, 13])
def test_chsh_scan_refines_off_grid(grid_n):
    # these grids miss the optimal pi/8 spacing, so refinement has work to do
    best, _ = chsh_scan(get_model("qm"), grid_n=grid_n)
    assert best == pytest.approx(TSIRELSON, abs=1e-6)


def test_chsh_scan_rejects_small_grid():
    with pytest.raises(ValueError):
        chsh_scan(get_model("qm"), grid_n=4)


@pytest.mark.parametrize("name", ["qm", "hall", "baseline"])
def test_scan_dominates_point_queries(name):
    m = get_model(name)
    best, _ = chsh_scan(m, grid_n=10)
    rng = np.random.default_rng(3)
    for x in rng.uniform(0, PI, size=(25, 4)):
        assert abs(chsh(m, ChshSettings(*x))) <= best + 1e-9


@pytest.mark.parametrize("name", ["qm", "simplistic", "hall", "baseline"])
@settings(max_examples=25, deadline=None)
@given(x=st.lists(st.floats(0, 3.14), min_size=4, max_size=4), theta=st.floats(-5, 5))
def test_chsh_rotation_invariance(name, x, theta):
    m = get_model(name)
    s0 = ChshSettings(*x)
    s1 = ChshSettings(*[v + theta for v in x])
    assert chsh(m, s0) == pytest.approx(chsh(m, s1), abs=1e-9)


def test_no_signaling_qm():
    assert no_signaling_deviation(get_model("qm"), [0.0, 0.4, 1.9]) <= 1e-12


@pytest.mark.parametrize("name", ["simplistic", "hall", "baseline"])
def test_no_signaling_models(name):
    assert no_signaling_deviation(get_model(name), PROBES) <= 1e-10


def test_no_signaling_detector_fires():
    assert no_signaling_deviation(signaling_test_model(), PROBES) > 0.01


def test_no_signaling_needs_probes():
    with pytest.raises(ValueError):
        no_signaling_deviation(get_model("qm"), [])


# --- mutual information ----------------------------------------------------

def test_mi_single_pair_is_zero():
    ens = SettingsEnsemble.uniform([(0.3, 1.2)])
    for name in ("simplistic", "hall", "baseline"):
        assert mutual_information(get_model(name), ens) == pytest.approx(0, abs=1e-15)


def hall_density_pointwise(a, b, lam):
    """Independent evaluation of the Hall density straight from its formula."""
    Ah = np.where(np.cos(2 * a - 2 * lam) >= 0, 1.0, -1.0)
    Bh = np.where(np.cos(2 * b - 2 * lam) >= 0, 1.0, -1.0)
    d = abs(a - b) % PI
    d = min(d, PI - d)
    z = (2 / PI) * 2 * d
    return (1 + Ah * Bh * np.cos(2 * a - 2 * b)) / (1 + Ah * Bh * (1 - z)) / PI


def fine_grid_mi(pairs, bins=100_000):
    lam = (np.arange(bins) + 0.5) * PI / bins
    dens = np.array([hall_density_pointwise(a, b, lam) for a, b in pairs])
    pbar = dens.mean(axis=0)
    return float(np.mean(np.sum(dens * np.log2(dens / pbar), axis=1)) * PI / bins)


CHSH_PAIRS = [(0, PI / 8), (0, 3 * PI / 8), (PI / 4, PI / 8), (PI / 4, 3 * PI / 8)]


def test_hall_mi_chsh_quadruple_matches_fine_grid():
    exact = mutual_information(get_model("hall"), SettingsEnsemble.chsh_quadruple())
    oracle = fine_grid_mi(CHSH_PAIRS)
    assert exact == pytest.approx(oracle, abs=1e-6)
    assert exact == pytest.approx(0.0462738, abs=1e-6)
    assert exact <= 0.07


def test_hall_mi_grid16_matches_fine_grid():
    g = [k * PI / 16 for k in range(16)]
    pairs = [(a, b) for a in g for b in g]
    exact = mutual_information(get_model("hall"), SettingsEnsemble.grid(16))
    assert exact == pytest.approx(fine_grid_mi(pairs), abs=1e-6)
    assert exact == pytest.approx(0.0315912, abs=1e-6)
    assert exact <= 0.07


def discrete_mi_oracle(pairs):
    """Simplistic-model MI with atoms indexed by integer multiples of pi/16."""
    cond = []
    for a, b in pairs:
        row = defaultdict(Fraction)
        for pos in (a, a + PI / 2, b, b + PI / 2):
            row[round(pos * 16 / PI) % 16] += Fraction(1, 4)
        cond.append(row)
    w = Fraction(1, len(pairs))
    keys = set().union(*cond)
    pbar = {k: sum(w * r[k] for r in cond) for k in keys}
    return sum(float(w * p) * math.log2(p / pbar[k]) for r in cond for k, p in r.items() if p)


def test_simplistic_mi_exceeds_hall():
    ens = SettingsEnsemble.chsh_quadruple()
    mi_s = mutual_information(get_model("simplistic"), ens)
    assert mi_s == pytest.approx(discrete_mi_oracle(CHSH_PAIRS), abs=1e-12)
    assert mi_s == pytest.approx(1.0, abs=1e-12)
    assert mi_s > mutual_information(get_model("hall"), ens)


def test_simplistic_mi_grid_oracle():
    g = [k * PI / 16 for k in range(16)]
    pairs = [(a, b) for a in g for b in g]
    mi = mutual_information(get_model("simplistic"), SettingsEnsemble.grid(16))
    assert mi == pytest.approx(discrete_mi_oracle(pairs), abs=1e-12)


def test_mi_zero_for_measurement_independent_model():
    assert mutual_information(get_model("baseline"), SettingsEnsemble.grid(8)) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 3.14), st.floats(0, 3.14)), min_size=1, max_size=6))
def test_mi_nonnegative(pairs):
    ens = SettingsEnsemble.uniform(pairs)
    for name in ("simplistic", "hall"):
        assert mutual_information(get_model(name), ens) >= 0


def test_mi_rejects_mixed_and_quantum():
    from retrobell.models import HiddenVariableModel, LambdaLaw, MalusResponse

    def law(a, b):
        return LambdaLaw.uniform() if a < 1 else LambdaLaw.atomic([(a, 1.0)])

    mixed = HiddenVariableModel("mixed", law, MalusResponse(), MalusResponse())
    with pytest.raises(ValueError):
        mutual_information(mixed, SettingsEnsemble.uniform([(0.5, 0.5), (2.0, 0.5)]))
    with pytest.raises(ValueError):
        mutual_information(get_model("qm"), SettingsEnsemble.chsh_quadruple())


def test_mi_by_wing():
    out = mutual_information_by_wing(get_model("simplistic"), SettingsEnsemble.chsh_quadruple())
    assert out["joint"] == pytest.approx(1.0)
    assert out["a"] == pytest.approx(0.5) and out["b"] == pytest.approx(0.5)
    hall = mutual_information_by_wing(get_model("hall"), SettingsEnsemble.chsh_quadruple())
    assert 0 <= hall["a"] <= hall["joint"] and 0 <= hall["b"] <= hall["joint"]


def test_ensemble_validation():
    with pytest.raises(ValueError):
        SettingsEnsemble((((0.0, 0.0), 0.5),))
    with pytest.raises(ValueError):
        SettingsEnsemble(())
