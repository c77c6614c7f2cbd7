"""One-off oracle for the rotorcraft power model with the S4 constants.

Evaluated in 50-digit arithmetic, independent of the C++ implementation.
The printed values are frozen into tests/test_aero_energy.cpp.
"""
from mpmath import mp, mpf, sqrt, pi

mp.dps = 50

Cd = mpf("0.045")
rho = mpf("1.225")
s = mpf("0.2449")
A = mpf("6.61")
Omega = mpf("78")
R = mpf("1.45")
k = mpf("0.052")
W = mpf("17799")
v0 = mpf("26.45")
Utip = mpf("112.776")
d0 = mpf("0.01")
v = mpf("73.762")

P0 = Cd / 8 * rho * s * A * Omega**3 * R**3
Pi = (1 + k) * W ** mpf("1.5") / sqrt(2 * rho * A)
Ph = P0 + Pi


def cruise(v):
    induced = Pi * (sqrt(1 + v**4 / (4 * v0**4)) - v**2 / (2 * v0**2)) ** mpf("0.5")
    profile = P0 * (1 + 3 * v**2 / Utip**2)
    parasite = mpf("0.5") * d0 * rho * s * A * v**3
    return induced, profile, parasite, induced + profile + parasite


ind, prof, par, Pp = cruise(v)
print("P0", mp.nstr(P0, 20))
print("Pi", mp.nstr(Pi, 20))
print("Ph", mp.nstr(Ph, 20))
print("Pp_induced", mp.nstr(ind, 20))
print("Pp_profile", mp.nstr(prof, 20))
print("Pp_parasite", mp.nstr(par, 20))
print("Pp", mp.nstr(Pp, 20))
print("Pp*60s kWh", mp.nstr(Pp * 60 / mpf("3.6e6"), 20))
print("Ph*30s kWh", mp.nstr(Ph * 30 / mpf("3.6e6"), 20))
print("A recomputed", mp.nstr(pi * R**2, 12))
print("s recomputed", mp.nstr(mpf("0.2231") * 5 / (pi * R), 12))
print("d0 recomputed", mp.nstr(mpf("0.0151") / (s * A), 12))
print("Utip Omega*R^2", mp.nstr(Omega * R**2, 12))
print("v0 formula", mp.nstr(sqrt(W / (s * rho * A)), 12))


def cruise_total(v):
    return cruise(v)[3]


v_min = mp.findroot(lambda x: mp.diff(cruise_total, x), 70)
print("minimum-power speed", mp.nstr(v_min, 18), "power", mp.nstr(cruise_total(v_min), 18))
