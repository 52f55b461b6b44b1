"""Discrete minima against the competitor energy for the cone weight.

By default the configured out-of-range weight and the single-phase control
run on coarse meshes (levels 2 to 4, about a minute in total).  At those
levels the weighted minima are still falling, so the verdict is
inconclusive.  ``--full`` uses the default levels 3 to 6, where the minima
settle well above the competitor energy (about five minutes on one core).

Usage: ``python demos/gap_detector.py [--full]``
"""

import sys

from lavgap import ConeConfig, gap_experiment


def main():
    levels = ConeConfig().levels if "--full" in sys.argv[1:] else (2, 3, 4)
    for label, cfg in (("cone weight", ConeConfig(levels=levels)),
                       ("single phase", ConeConfig(levels=levels, single_phase=True))):
        rep = gap_experiment(cfg)
        minima = ", ".join(f"{m:.4f}" for m in rep.minima)
        print(f"{label} levels {levels}: F[u0]={rep.competitor_energy:.4f} oracle={rep.oracle_energy:.4f} "
              f"minima=[{minima}] margin={rep.margin:.3f} -> {rep.verdict}")


if __name__ == "__main__":
    main()
