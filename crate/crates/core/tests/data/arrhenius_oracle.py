"""Regenerates the frozen Arrhenius values in tests/rates.rs at 50 digits.

    python3 crates/core/tests/data/arrhenius_oracle.py
"""
from mpmath import mp, mpf, sqrt, exp

mp.dps = 50

for te in ["0.5", "1", "10", "300", "17400", "1e5"]:
    t = mpf(te)
    l1 = mpf("1.58e-15") * sqrt(t) * exp(mpf("-15.378") / t)
    l2 = mpf("1.413e-15") * t**2 * exp(mpf("-4.48") / t)
    print(f"({te}, {mp.nstr(l1, 20)}, {mp.nstr(l2, 20)}),")
