"""
Two retrocausal toy-models reproduce the singlet correlations
==============================================================

Both models let the hidden polarization lambda depend on the *later*
analyzer settings a and b.  Combining the lambda law with the per-photon
responses gives exactly the quantum joint distribution.
"""
import math

from retrobell import combine, get_model, hall_lambda_law, qm_joint, simplistic_lambda_law, tv_distance

a, b = 0.0, math.pi / 8

##############################################################################
# The simplistic model puts lambda on four point masses tied to the settings,
# then applies Malus' law on each wing.

law = simplistic_lambda_law(a, b)
for pos, w in law.atoms:
    print(f"atom at {pos:.6f} rad  weight {w}")

##############################################################################
# Hall's model uses a piecewise-constant density with breakpoints a +- pi/4
# and b +- pi/4, and deterministic responses.

for seg in hall_lambda_law(a, b).segments:
    print(f"[{seg.left:.4f}, {seg.right:.4f})  density {seg.density:.6f}")

##############################################################################
# The combined distributions coincide with the quantum one.

print("QM        ", qm_joint(a, b).as_array().round(10))
for name in ("simplistic", "hall", "baseline"):
    j = combine(get_model(name), a, b)
    print(f"{name:<10}", j.as_array().round(10), " tv to QM:", f"{tv_distance(j, qm_joint(a, b)):.2e}")
