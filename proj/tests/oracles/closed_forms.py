"""Independent nodal evaluation of the ideal Wilkinson divider and the
quarter-wave transformer, used to freeze the expected values of the
acceptance checks."""
import numpy as np

z0, f0 = 50.0, 90e9


def line_y(zc, theta):
    # two-port admittance matrix of a lossless line
    return np.array([[-1j / np.tan(theta), 1j / np.sin(theta)],
                     [1j / np.sin(theta), -1j / np.tan(theta)]]) / zc


def wilkinson_s(theta):
    zc, r = np.sqrt(2) * z0, 2 * z0
    y = np.zeros((3, 3), complex)  # nodes: 0 common, 1 and 2 arms
    for arm in (1, 2):
        yl = line_y(zc, theta)
        idx = [0, arm]
        for a in range(2):
            for b in range(2):
                y[idx[a], idx[b]] += yl[a, b]
    y[1, 1] += 1 / r
    y[2, 2] += 1 / r
    y[1, 2] -= 1 / r
    y[2, 1] -= 1 / r
    e = np.eye(3)
    return (e - z0 * y) @ np.linalg.inv(e + z0 * y)


s = wilkinson_s(np.pi / 2)
print(f"branch z = {np.sqrt(2) * z0:.10f}  r_iso = {2 * z0:.10f}")
print(f"|S21| = {20 * np.log10(abs(s[1, 0])):.10f} dB  |S31| = {20 * np.log10(abs(s[2, 0])):.10f} dB")
print(f"|S11| = {abs(s[0, 0]):.3e}  |S23| = {abs(s[1, 2]):.3e}")

rs, rl = 25.0, 50.0
zc = np.sqrt(rs * rl)
for mult in (1, 2):
    t = mult * np.pi / 2
    zin = zc * (rl + 1j * zc * np.tan(t)) / (zc + 1j * rl * np.tan(t))
    g = (zin - rs) / (zin + rs)
    print(f"QWT z_c = {zc:.10f}  |S11({mult} f0)| = {20 * np.log10(max(abs(g), 1e-300)):.6f} dB")
