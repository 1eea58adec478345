"""
Cosine versus sawtooth
======================

The correlator E(a, b) as a function of a - b.  QM and both retrocausal
models trace cos(2(a - b)); the measurement-independent baseline gives the
sawtooth 1 - 4|a - b|/pi that any Bell-local model of this kind is stuck with.

Writes ``correlation_curves.csv`` and, if matplotlib is available,
``correlation_curves.png``.
"""
import numpy as np

from retrobell import get_model
from retrobell.tasks import curve_table, table_csv

names = ["qm", "hall", "simplistic", "baseline"]
deltas = np.linspace(0, np.pi / 2, 65)
table = np.array(curve_table([get_model(n) for n in names], deltas))

with open("correlation_curves.csv", "w") as fh:
    fh.write(table_csv(["delta"] + names, table))

print("largest |E_hall - E_qm|:", np.abs(table[:, 2] - table[:, 1]).max())
print("largest |E_baseline - E_qm|:", np.abs(table[:, 4] - table[:, 1]).max())

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(deltas, table[:, 1], label="QM / hall / simplistic")
    ax.plot(deltas, table[:, 4], "--", label="baseline (local)")
    ax.set_xlabel("a - b [rad]")
    ax.set_ylabel("E(a, b)")
    ax.legend()
    fig.tight_layout()
    fig.savefig("correlation_curves.png", dpi=120)
