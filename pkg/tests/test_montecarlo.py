import numpy as np
import pytest
from scipy import stats

from retrobell.evaluator import combine
from retrobell.models import (
    PI,
    HiddenVariableModel,
    LambdaLaw,
    MalusResponse,
    get_model,
    hall_Ahat,
    hall_lambda_law,
    simplistic_lambda_law,
)
from retrobell.montecarlo import (
    EmpiricalJoint,
    read_trial_log,
    run_trials,
    sample_lambda,
    sample_outcomes,
    simulate_records,
    substream,
    write_trial_log,
)

MODELS = ["qm", "simplistic", "hall", "baseline"]


def test_sample_lambda_single_atom():
    law = LambdaLaw.atomic([(0.0, 1.0)])
    rng = substream(1, 0)
    assert sample_lambda(law, rng) == 0.0
    assert np.all(sample_lambda(law, rng, size=100) == 0.0)


def test_sample_lambda_simplistic_atom_frequencies():
    law = simplistic_lambda_law(0, PI / 8)
    n = 10**6
    draws = sample_lambda(law, substream(2, 0), size=n)
    sigma = np.sqrt(0.25 * 0.75 / n)
    for pos, w in law.atoms:
        freq = np.mean(draws == pos)
        assert abs(freq - 0.25) <= 3 * sigma


def test_sample_lambda_hall_equal_settings_is_uniform():
    draws = sample_lambda(hall_lambda_law(0, 0), substream(3, 0), size=10**5)
    res = stats.kstest(draws / PI, "uniform")
    critical_1pct = 1.63 / np.sqrt(len(draws))
    assert res.statistic < critical_1pct


def test_sample_lambda_hall_matches_piecewise_cdf():
    law = hall_lambda_law(0.2, 0.9)
    edges = law.edges()
    cum = np.concatenate([[0.0], np.cumsum([s.density * s.length for s in law.segments])])

    def cdf(x):
        return np.interp(x, edges, cum)

    draws = sample_lambda(law, substream(4, 0), size=10**5)
    assert np.all((draws >= 0) & (draws < PI))
    assert stats.kstest(draws, cdf).pvalue > 0.01


def test_hall_records_follow_deterministic_response():
    m = get_model("hall")
    rng = substream(5, 0)
    for _ in range(500):
        r = sample_outcomes(m, 0.3, 1.1, rng)
        assert r.A == hall_Ahat(0.3, r.lam)
        assert r.B == hall_Ahat(1.1, r.lam)


def test_malus_aligned_lambda_always_passes():
    m = HiddenVariableModel("pinned_a", lambda a, b: LambdaLaw.atomic([(a, 1.0)]),
                            MalusResponse(), MalusResponse())
    rng = substream(6, 0)
    assert all(sample_outcomes(m, 0.7, 0.2, rng).A == 1 for _ in range(200))


def test_simulated_lambda_in_simplistic_support():
    recs = simulate_records(get_model("simplistic"), 0.2, 1.0, 2000, seed=7)
    support = {p for p, _ in simplistic_lambda_law(0.2, 1.0).atoms}
    assert {r.lam for r in recs} <= support


@pytest.mark.parametrize("name", MODELS)
def test_empirical_joint_within_three_sigma(name):
    m = get_model(name)
    a, b = 0.4, 1.3
    emp = run_trials(m, a, b, 10**6, seed=8)
    assert np.max(np.abs(emp.z_scores(combine(m, a, b)))) <= 3
    assert emp.chi_square(combine(m, a, b))[1] >= 1e-3


def test_run_trials_deterministic():
    m = get_model("hall")
    assert run_trials(m, 0.1, 0.5, 12345, seed=9) == run_trials(m, 0.1, 0.5, 12345, seed=9)
    assert run_trials(m, 0.1, 0.5, 12345, seed=9) != run_trials(m, 0.1, 0.5, 12345, seed=10)


def test_run_trials_worker_count_does_not_matter():
    m = get_model("simplistic")
    one = run_trials(m, 0.1, 0.5, 50_000, seed=9, batch_size=4096)
    many = run_trials(m, 0.1, 0.5, 50_000, seed=9, batch_size=4096, workers=4)
    assert one == many


def test_run_trials_batch_partition_keeps_expectation():
    m = get_model("hall")
    exact = combine(m, 0.1, 0.5)
    for bs in (1000, 65536, 10**6):
        emp = run_trials(m, 0.1, 0.5, 10**6, seed=12, batch_size=bs)
        assert np.max(np.abs(emp.z_scores(exact))) <= 3.5


def test_records_agree_with_counts():
    m = get_model("baseline")
    recs = simulate_records(m, 0.3, 0.9, 3000, seed=13, batch_size=1000)
    emp = run_trials(m, 0.3, 0.9, 3000, seed=13, batch_size=1000)
    counts = [sum(1 for r in recs if (r.A, r.B) == cell) for cell in ((1, 1), (1, -1), (-1, 1), (-1, -1))]
    assert tuple(counts) == emp.counts


@pytest.mark.parametrize("name", ["qm", "simplistic", "hall"])
def test_qm_equivalent_models_plus_plus_frequency(name):
    emp = run_trials(get_model(name), 0, PI / 8, 10**6, seed=14)
    assert abs(emp.frequencies[0] - 0.4267767) <= 0.0015


def test_baseline_equal_settings_only_equal_outcomes():
    emp = run_trials(get_model("baseline"), 0.0, 0.0, 20_000, seed=15)
    assert emp.counts[1] == 0 and emp.counts[2] == 0
    assert emp.counts[0] + emp.counts[3] == 20_000


def test_run_trials_rejects_zero():
    with pytest.raises(ValueError):
        run_trials(get_model("qm"), 0, 0, 0, seed=1)


@pytest.mark.parametrize("name", MODELS)
def test_empirical_marginals_are_half(name):
    m = get_model(name)
    for k, (a, b) in enumerate([(0.0, 0.5), (1.2, 2.9), (2.2, 0.1)]):
        emp = run_trials(m, a, b, 200_000, seed=100 + k)
        sigma = np.sqrt(0.25 / emp.n_total)
        assert abs(emp.marginal("A") - 0.5) <= 3 * sigma
        assert abs(emp.marginal("B") - 0.5) <= 3 * sigma


def test_empirical_joint_invariants():
    with pytest.raises(ValueError):
        EmpiricalJoint((1, 2, 3, 4), 11)
    emp = EmpiricalJoint((50, 0, 0, 50), 100)
    assert emp.std_errors[1] == 0
    exact = combine(get_model("baseline"), 0, 0)
    assert np.all(emp.z_scores(exact) == 0)
    assert emp.chi_square(exact) == (0.0, 1.0)
    assert EmpiricalJoint((50, 1, 0, 49), 100).chi_square(exact)[1] == 0.0


def test_trial_log_round_trip(tmp_path):
    recs = simulate_records(get_model("hall"), 0.25, 1.5, 50, seed=16)
    path = tmp_path / "trials.csv"
    write_trial_log(path, recs)
    lines = path.read_text().splitlines()
    assert len(lines) == 50
    a, b, lam, A, B = lines[0].split(",")
    assert float(a) == 0.25 and int(A) in (1, -1)
    assert read_trial_log(path) == recs


def test_substreams_differ_per_batch():
    x = substream(42, 0).random(4)
    y = substream(42, 1).random(4)
    assert not np.array_equal(x, y)
    assert np.array_equal(x, substream(42, 0).random(4))
