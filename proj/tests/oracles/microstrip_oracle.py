"""Standalone Hammerstad-Jensen evaluation (zero-thickness strip) used to
freeze expected microstrip values in the unit tests."""
import math
from scipy.optimize import brentq

ETA0 = 376.730313668


def eps_eff(u, er):
    a = (1 + math.log((u**4 + (u / 52) ** 2) / (u**4 + 0.432)) / 49
         + math.log(1 + (u / 18.1) ** 3) / 18.7)
    b = 0.564 * ((er - 0.9) / (er + 3)) ** 0.053
    return (er + 1) / 2 + (er - 1) / 2 * (1 + 10 / u) ** (-a * b)


def z0(u, er):
    f = 6 + (2 * math.pi - 6) * math.exp(-((30.666 / u) ** 0.7528))
    z01 = ETA0 / (2 * math.pi) * math.log(f / u + math.sqrt(1 + (2 / u) ** 2))
    return z01 / math.sqrt(eps_eff(u, er))


er, h = 12.9, 100e-6
u = 70e-6 / h
print(f"w=70um: z0 = {z0(u, er):.12f}  eps_eff = {eps_eff(u, er):.12f}")
u50 = brentq(lambda x: z0(x, er) - 50.0, 0.1, 10, xtol=1e-15)
print(f"50 ohm: w/h = {u50:.12f}  eps_eff = {eps_eff(u50, er):.12f}")
print(f"range: z0(10) = {z0(10, er):.6f}  z0(0.1) = {z0(0.1, er):.6f}")
print(f"air: eps_eff = {eps_eff(1.0, 1.0)!r}")
