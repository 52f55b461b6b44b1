"""Energies of squeezed mollifications of a hat function approach its own energy.

Weight ``t^2`` with exponents ``p = 2``, ``q = 4`` on ``(-1, 1)``.  The
request with ``p = 1`` fails the exponent condition and is refused.

Usage: ``python demos/approximation.py``
"""

import numpy as np

from lavgap import Domain, EnergySpec, GateRefused, ScalarField, StarShape, approximate, catalog_get, energy


def main():
    region = Domain.interval(-1, 1)
    star = StarShape(region, (0.0,), 0.9)
    w = catalog_get("power2n(1)").weight
    u = ScalarField.from_function(region, 8001, lambda t: np.maximum(0.0, 1.0 - np.abs(t)))
    spec = EnergySpec(2, 4, w, region)
    trace = approximate(u, spec, star, [0.1, 0.03, 0.01, 0.003, 0.001])
    print(f"F[u] = {energy(u, spec):.6f}")
    print("delta, energy, w11_error")
    for d, e, err in zip(trace.deltas, trace.energies, trace.w11_errors):
        print(f"{d:g}, {e:.6f}, {err:.3e}")
    try:
        approximate(u, EnergySpec(1, 4, w, region), star, [0.1])
    except GateRefused as exc:
        print(f"p=1, q=4 refused: {exc}")


if __name__ == "__main__":
    main()
