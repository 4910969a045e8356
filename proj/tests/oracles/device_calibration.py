"""Solve the default pHEMT (v_pk, p1) so that the bias-class rules land on the
target gate voltages at v_ds = 6 V.

I_max is the maximum of the DC-IV column over the default gate sweep
(-1.5 V .. +0.5 V); Class A sits at 50 % and Class AB at 15 % of it.
"""
import numpy as np
from scipy.optimize import fsolve

VGS_TOP = 0.5
TARGET_A, TARGET_AB = -0.2, -0.7


def shape(v, vpk, p1):
    return 1.0 + np.tanh(p1 * (v - vpk))


def eqs(x):
    vpk, p1 = x
    top = shape(VGS_TOP, vpk, p1)
    return [shape(TARGET_A, vpk, p1) - 0.5 * top,
            shape(TARGET_AB, vpk, p1) - 0.15 * top]


vpk, p1 = fsolve(eqs, [-0.2, 2.0], xtol=1e-15)
print(f"v_pk = {vpk:.12f}")
print(f"p1   = {p1:.12f}")
print("residual", eqs([vpk, p1]))
