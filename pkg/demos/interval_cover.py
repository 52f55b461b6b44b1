"""Exceptional intervals of a nonnegative polynomial and their brute-force check.

Usage: ``python demos/interval_cover.py``
"""

from lavgap import interval_cover, verify_cover

CASES = [
    ([1.0, -2.0, 1.0], 2.0, 1.0),
    ([0.75, -1.5, 0.0, 1.0], 3.0, 0.5),
    ([2.0, -3.0, 2.5, -1.0, 0.3], 4.0, 0.1),
]


def main():
    for coeffs, T, eps in CASES:
        cov = interval_cover(coeffs, T, eps)
        ok, bad = verify_cover(coeffs, T, eps, cov, 10_000)
        spans = ", ".join(f"[{s:.4g}, {t:.4g}]" for s, t in cov.intervals) or "none"
        print(f"P={coeffs} T={T} eps={eps}: intervals {spans}; "
              f"max ratio {cov.measured_ratio:.3g} <= {cov.ratio_bound:.3g}; verified {ok}")


if __name__ == "__main__":
    main()
