"""
Simulated trials against exact probabilities
============================================

Each model is sampled trial by trial (lambda first, then both outcomes given
lambda), and the tallies are compared with the closed-form joint.
"""
from retrobell import combine, get_model, run_trials

a, b, n = 0.4, 1.3, 10**6
for name in ("qm", "simplistic", "hall", "baseline"):
    model = get_model(name)
    emp = run_trials(model, a, b, n, seed=2018, workers=4)
    exact = combine(model, a, b)
    stat, p = emp.chi_square(exact)
    z = ", ".join(f"{x:+.2f}" for x in emp.z_scores(exact))
    print(f"{name:<10} freq={emp.frequencies.round(5)}  z=[{z}]  chi2 p={p:.3f}")
