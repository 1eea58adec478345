"""Task execution: every CLI subcommand turns into a manifest and runs here."""
from __future__ import annotations

import csv
import io
import math
import time

import numpy as np

from .analysis import (
    ChshSettings,
    SettingsEnsemble,
    chsh,
    chsh_scan,
    mutual_information,
    mutual_information_by_wing,
    no_signaling_deviation,
)
from .evaluator import combine, correlator, marginal, tv_distance
from .manifest import Check, ExperimentManifest, ManifestError, ResultRecord
from .models import BUILTIN_MODELS, PI, hall_lambda_law, qm_joint, reduce_angle, signaling_test_model
from .montecarlo import run_trials, simulate_records, write_trial_log

TSIRELSON = 2 * math.sqrt(2)
QM_EQUIVALENT = ("qm", "simplistic", "hall")

DEFAULT_OPTIONS = {
    "equivalence_grid": 64,
    "normalization_grid": 100,
    "probes": 16,
    "scan_grid": 16,
    "refine_iters": 200,
    "mc_pairs": 20,
    "mi_grid": 16,
    "batch_size": 1 << 18,
}
DEFAULT_TRIALS = 10**6


def _opt(m: ExperimentManifest, key: str):
    return m.options.get(key, DEFAULT_OPTIONS.get(key))


def _joint_dict(j) -> dict:
    return {"++": j.p_pp, "+-": j.p_pm, "-+": j.p_mp, "--": j.p_mm}


def _probe_axis(count: int) -> list[float]:
    # offset keeps the probes off the symmetric points 0, pi/4, pi/2
    return [0.05 + k * PI / count for k in range(count)]


def derive_seed(seed: int, *path: int) -> int:
    """Child seed for a sub-experiment, e.g. (model index, pair index)."""
    return int(np.random.SeedSequence([seed, *path]).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# single-purpose tasks

def cmd_joint(m: ExperimentManifest) -> ResultRecord:
    """Exact joint distribution; with trials > 0 also the empirical one."""
    model = m.model.build()
    pairs = m.setting_pairs() or [(0.0, 0.0)]
    rows = []
    for k, (a, b) in enumerate(pairs):
        a, b = reduce_angle(a), reduce_angle(b)
        j = combine(model, a, b)
        tv = tv_distance(j, qm_joint(a, b))
        row = {"a": a, "b": b, "joint": _joint_dict(j), "correlator": correlator(j),
               "marginal_A": marginal(j, "A"), "marginal_B": marginal(j, "B"),
               "tv_to_qm": tv, "qm_equivalent": tv <= m.tolerance("equivalence_hall")}
        if m.trials:
            emp = run_trials(model, a, b, m.trials, derive_seed(m.seed, k),
                             batch_size=_opt(m, "batch_size"))
            row["empirical"] = {"counts": list(emp.counts), "frequencies": emp.frequencies.tolist(),
                                "z_scores": emp.z_scores(j).tolist()}
        rows.append(row)
    return ResultRecord(m.digest(), m.task, {"model": m.model.name}, {"results": rows})


def _chsh_settings(m: ExperimentManifest) -> ChshSettings:
    o = m.options
    try:
        vals = [o["a"], o["a_prime"], o["b"], o["b_prime"]]
    except KeyError as exc:
        raise ManifestError(f"chsh needs option {exc.args[0]!r}") from None
    return ChshSettings(*[m._angle(v) for v in vals])


def cmd_chsh(m: ExperimentManifest) -> ResultRecord:
    s = _chsh_settings(m)
    vals = {}
    for spec in m.models:
        vals[spec.name] = chsh(spec.build(), s)
    return ResultRecord(m.digest(), m.task, {"settings": list(s.as_tuple())}, {"S": vals})


def cmd_scan(m: ExperimentManifest) -> ResultRecord:
    out = {}
    for spec in m.models:
        best, arg = chsh_scan(spec.build(), _opt(m, "scan_grid"), _opt(m, "refine_iters"))
        out[spec.name] = {"max_abs_S": best, "argmax": list(arg.as_tuple())}
    return ResultRecord(m.digest(), m.task,
                        {"grid_n": _opt(m, "scan_grid"), "refine_iters": _opt(m, "refine_iters")}, out)


def _ensemble(m: ExperimentManifest) -> SettingsEnsemble:
    kind = m.options.get("ensemble", "pairs" if "pairs" in m.settings else "chsh")
    if kind == "chsh":
        return SettingsEnsemble.chsh_quadruple()
    if kind == "grid":
        return SettingsEnsemble.grid(_opt(m, "mi_grid"))
    if kind == "pairs":
        return SettingsEnsemble.uniform(m.setting_pairs())
    raise ManifestError(f"unknown ensemble {kind!r}")


def cmd_mi(m: ExperimentManifest) -> ResultRecord:
    ens = _ensemble(m)
    out = {}
    for spec in m.models:
        try:
            out[spec.name] = mutual_information_by_wing(spec.build(), ens)
        except ValueError as exc:
            raise ManifestError(str(exc)) from None
    return ResultRecord(m.digest(), m.task, {"ensemble_size": len(ens.members)}, {"bits": out})


def cmd_nosignal(m: ExperimentManifest) -> ResultRecord:
    probes = m.axis() if "grid" in m.settings else _probe_axis(_opt(m, "probes"))
    out = {spec.name: no_signaling_deviation(spec.build(), probes) for spec in m.models}
    return ResultRecord(m.digest(), m.task, {"probes": probes}, {"deviation": out})


def cmd_sample(m: ExperimentManifest) -> ResultRecord:
    model = m.model.build()
    pairs = m.setting_pairs() or [(0.0, 0.0)]
    a, b = reduce_angle(pairs[0][0]), reduce_angle(pairs[0][1])
    bs = _opt(m, "batch_size")
    emp = run_trials(model, a, b, m.trials, m.seed, batch_size=bs, workers=m.options.get("workers", 1))
    exact = combine(model, a, b)
    values = {"counts": list(emp.counts), "frequencies": emp.frequencies.tolist(),
              "std_errors": emp.std_errors.tolist(), "exact": _joint_dict(exact),
              "z_scores": emp.z_scores(exact).tolist()}
    log = m.options.get("log")
    if log:
        write_trial_log(log, simulate_records(model, a, b, m.trials, m.seed, batch_size=bs))
        values["log"] = log
    return ResultRecord(m.digest(), m.task, {"model": m.model.name, "a": a, "b": b,
                                             "n": m.trials, "seed": m.seed}, values)


def curve_table(models, deltas) -> list[list[float]]:
    """Rows of (a - b, E_model1, E_model2, ...), evaluated at a = delta, b = 0."""
    return [[d] + [correlator(combine(mdl, d, 0.0)) for mdl in models] for d in deltas]


def cmd_curve(m: ExperimentManifest) -> ResultRecord:
    deltas = m.axis() if "grid" in m.settings else list(np.linspace(0, PI / 2, 64))
    models = [spec.build() for spec in m.models]
    table = curve_table(models, deltas)
    header = ["delta"] + [spec.name for spec in m.models]
    return ResultRecord(m.digest(), m.task, {"models": [s.name for s in m.models]},
                        {"header": header, "table": table})


def table_csv(header, table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in table:
        w.writerow([format(float(x), ".17g") for x in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# verification battery

def check_equivalence(name, model, n, tol) -> Check:
    g = [k * PI / n for k in range(n)]
    worst = max(tv_distance(combine(model, a, b), qm_joint(a, b)) for a in g for b in g)
    return Check(f"qm_equivalence[{name}]", worst <= tol, worst, 0.0, tol, "max tv <= tol",
                 {"grid": n})


def check_baseline_differs(model, n, tol) -> Check:
    g = [k * PI / n for k in range(n)]
    worst = max(tv_distance(combine(model, a, b), qm_joint(a, b)) for a in g for b in g)
    return Check("qm_inequivalence[baseline]", worst > tol, worst, 0.0, tol, "max tv > tol", {"grid": n})


def check_normalization(n, tol) -> Check:
    g = [k * PI / n for k in range(n)]
    worst = max(abs(hall_lambda_law(a, b).mass() - 1) for a in g for b in g)
    return Check("normalization[hall]", worst <= tol, worst, 0.0, tol, "max |mass - 1| <= tol",
                 {"grid": n})


def check_no_signaling(name, model, probes, tol) -> Check:
    dev = no_signaling_deviation(model, probes)
    return Check(f"no_signaling[{name}]", dev <= tol, dev, 0.0, tol, "deviation <= tol",
                 {"probes": len(probes)})


def check_detector(probes, threshold) -> Check:
    dev = no_signaling_deviation(signaling_test_model(), probes)
    return Check("no_signaling_detector[signaling]", dev > threshold, dev, threshold, threshold,
                 "deviation > threshold")


def check_scan(name, model, grid_n, iters, tol) -> Check:
    best, arg = chsh_scan(model, grid_n, iters)
    target = TSIRELSON if name in QM_EQUIVALENT else 2.0
    return Check(f"chsh_scan[{name}]", abs(best - target) <= tol, best, target, tol,
                 "|max S - target| <= tol", {"argmax": list(arg.as_tuple()), "grid_n": grid_n})


def check_mc(name, model, pairs, n, seed, sigma, alpha, model_index, batch_size) -> Check:
    worst_z, min_p, worst_pair = 0.0, 1.0, None
    for k, (a, b) in enumerate(pairs):
        emp = run_trials(model, a, b, n, derive_seed(seed, model_index, k), batch_size=batch_size)
        exact = combine(model, a, b)
        z = float(np.max(np.abs(emp.z_scores(exact))))
        _, p = emp.chi_square(exact)
        if z > worst_z:
            worst_z, worst_pair = z, [a, b]
        min_p = min(min_p, p)
    ok = worst_z <= sigma and min_p >= alpha
    return Check(f"monte_carlo[{name}]", ok, {"max_abs_z": worst_z, "min_chi2_p": min_p},
                 {"max_abs_z": sigma, "min_chi2_p": alpha}, sigma,
                 "max |z| <= sigma and min chi2 p >= alpha",
                 {"pairs": len(pairs), "trials": n, "worst_pair": worst_pair})


def verification_checks(m: ExperimentManifest) -> list[Check]:
    names = [s.name for s in m.models]
    models = {s.name: s.build() for s in m.models}
    checks: list[Check] = []
    eq_n = _opt(m, "equivalence_grid")
    for name in ("simplistic", "hall"):
        if name in models:
            checks.append(check_equivalence(name, models[name], eq_n, m.tolerance(f"equivalence_{name}")))
    if "baseline" in models:
        checks.append(check_baseline_differs(models["baseline"], eq_n, m.tolerance("baseline_min_tv")))
    if "hall" in models:
        checks.append(check_normalization(_opt(m, "normalization_grid"), m.tolerance("normalization")))

    probes = _probe_axis(_opt(m, "probes"))
    for name in names:
        checks.append(check_no_signaling(name, models[name], probes, m.tolerance("no_signaling")))
    checks.append(check_detector(probes, m.tolerance("signaling_min")))

    for name in names:
        if name in BUILTIN_MODELS:
            checks.append(check_scan(name, models[name], _opt(m, "scan_grid"), _opt(m, "refine_iters"),
                                     m.tolerance("chsh")))

    bound = m.tolerance("mi_bound")
    quad = SettingsEnsemble.chsh_quadruple()
    if "hall" in models:
        for label, ens in (("chsh_quadruple", quad), (f"grid{_opt(m, 'mi_grid')}", SettingsEnsemble.grid(_opt(m, "mi_grid")))):
            mi = mutual_information(models["hall"], ens)
            checks.append(Check(f"mutual_information[hall,{label}]", mi <= bound, mi, bound, bound,
                                "bits <= bound"))
        if "simplistic" in models:
            mi_s = mutual_information(models["simplistic"], quad)
            mi_h = mutual_information(models["hall"], quad)
            checks.append(Check("mutual_information_order[simplistic>hall]", mi_s > mi_h,
                                mi_s, mi_h, 0.0, "simplistic bits > hall bits"))
    if "baseline" in models:
        mi_b = mutual_information(models["baseline"], SettingsEnsemble.grid(_opt(m, "mi_grid")))
        checks.append(Check("mutual_information[baseline]", mi_b <= 1e-12, mi_b, 0.0, 1e-12, "bits <= tol"))

    n = m.trials or DEFAULT_TRIALS
    rng = np.random.default_rng(m.seed)
    pairs = [tuple(p) for p in rng.uniform(0, PI, size=(_opt(m, "mc_pairs"), 2)).tolist()]
    for idx, name in enumerate(names):
        if name in BUILTIN_MODELS:
            checks.append(check_mc(name, models[name], pairs, n, m.seed, m.tolerance("mc_sigma"),
                                   m.tolerance("chi2_alpha"), idx, _opt(m, "batch_size")))
    return sorted(checks, key=lambda c: c.name)


def cmd_verify(m: ExperimentManifest) -> ResultRecord:
    checks = verification_checks(m)
    return ResultRecord(m.digest(), m.task, {"models": [s.name for s in m.models], "seed": m.seed},
                        {"passed": all(c.passed for c in checks), "failures": [c.name for c in checks if not c.passed]},
                        checks)


RUNNERS = {
    "joint": cmd_joint,
    "chsh": cmd_chsh,
    "scan": cmd_scan,
    "mi": cmd_mi,
    "nosignal": cmd_nosignal,
    "sample": cmd_sample,
    "curve": cmd_curve,
    "verify": cmd_verify,
}


def execute(m: ExperimentManifest) -> ResultRecord:
    """Run a manifest and time it."""
    start = time.perf_counter()
    record = RUNNERS[m.task](m)
    record.wall_time = time.perf_counter() - start
    return record
