"""Split the oscillating weight ``t^6 sin^2(1/t)`` into its two factors.

The raw weight fails both the decay condition ``Z^3`` and the Muckenhoupt
condition ``A_4``; its decay factor ``sigma`` satisfies ``Z^3``.  The script
tabulates the factors on a few points and prints the Z-class estimates.

Usage: ``python demos/factorization.py``
"""

import numpy as np

from lavgap import Domain, catalog_get, omega_at, sigma_at, z_constant


def main():
    w = catalog_get("sin6").weight
    t = np.array([0.5, 0.2, 0.1, 1 / (3 * np.pi), 0.01])
    print("t, a, sigma, omega")
    for ti, a, s, o in zip(t, w(t), sigma_at(w, t), omega_at(w, t)):
        print(f"{ti:.5f}, {a:.4e}, {s:.4e}, {o:.4f}")
    region = Domain.interval(-1, 1)
    for label, f in (("raw weight", w.value), ("sigma", lambda x: sigma_at(w, x))):
        rep = z_constant(f, 3.0, region, levels=3)
        est = ", ".join(f"{e:.4g}" for _, e in rep.estimates)
        print(f"Z^3 for {label}: [{est}] -> {rep.verdict}")


if __name__ == "__main__":
    main()
