"""
How much does lambda know about the settings?
=============================================

For a prior over setting pairs, I(lambda; a, b) measures how much the
"past" hidden variable reveals about the "future" inputs.  The simplistic
model leaks a full bit or more; Hall's model leaks a few hundredths of a bit.
"""
from retrobell import SettingsEnsemble, get_model, mutual_information_by_wing

ensembles = {
    "CHSH quadruple": SettingsEnsemble.chsh_quadruple(),
    "16x16 grid": SettingsEnsemble.grid(16),
}
for label, ens in ensembles.items():
    print(label)
    for name in ("simplistic", "hall", "baseline"):
        mi = mutual_information_by_wing(get_model(name), ens)
        print(f"  {name:<10} I(l;a,b)={mi['joint']:.7f}  I(l;a)={mi['a']:.7f}  I(l;b)={mi['b']:.7f} bits")
