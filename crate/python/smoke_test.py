"""Quick checks of the Python bindings against known reference values."""

import math
import sys

import starmop


def close(got, want, tol, what):
    if abs(got - want) > tol:
        sys.exit(f"FAIL {what}: got {got}, want {want}")
    print(f"ok   {what}")


def main():
    p = starmop.params(3, 0.05, 2.0)
    close(p["r"], 0.22727477078579966, 1e-12, "r")
    close(p["x_star"], 0.22610147309068845, 1e-12, "x_star")
    close(p["rho"], 0.746128152419686, 1e-12, "rho")
    close(starmop.critical_time(3, 2.0), 1.0 / 9.0, 1e-14, "critical time")

    m = starmop.masses(3, 0.05, 2.0)
    for k, want in enumerate([1.0, 2.0 / 3.0, 1.0 / 3.0], start=1):
        close(m[k - 1], want, 1e-8, f"mass {k}")

    mom = starmop.droplet_moments(3, 0.05, 2.0, 4)
    close(mom[0].real, 0.05, 1e-10, "moment 0")
    close(mom[4].real, 2.0, 1e-10, "moment 4")

    ai = starmop.airy(2, 0.0)
    close(ai[0].real, 0.3550280538878172, 1e-14, "Ai(0)")

    c, _beta = starmop.spectral_curve(3, 0.05, 2.0)
    close(c[2], 2.0, 1e-10, "c_3")

    close(abs(starmop.m11(3, 0.05, 2.0, 100.0) - 1.0), 0.0, 1e-2, "m11 near infinity")

    zeros = starmop.mop_zeros(3, 0.05, 2.0, 12)
    if len(zeros) != 12:
        sys.exit(f"FAIL zero count {len(zeros)}")
    for z in zeros:
        # every zero sits on one of the four rays
        k = round(math.atan2(z.imag, z.real) / (math.pi / 2))
        if abs(z) > 1e-12 and abs(math.atan2(z.imag, z.real) - k * math.pi / 2) > 1e-9:
            sys.exit(f"FAIL zero off the star: {z}")
    print("ok   zeros on the star")

    try:
        starmop.params(3, 0.5, 2.0)
    except ValueError as e:
        print(f"ok   supercritical rejected ({e})")
    else:
        sys.exit("FAIL supercritical input accepted")

    failed = [r["id"] for r in starmop.verify(2, 0.05, 1.0) if r["status"] == "FAIL"]
    if failed:
        sys.exit(f"FAIL verify: {failed}")
    print("ok   verify for d = 2")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
