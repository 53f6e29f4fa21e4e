"""Closed-form eigenvalue moments and RRC energies against the recursions.

    python3 scripts/closed_form_check.py [--draws 1000]
"""

import argparse

import numpy as np

from mscdma.moments import algorithm1_from_coefficients, closed_form_moments_from, mp_moment_oracle
from mscdma.pulse import rrc_energy


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--draws", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    worst = np.zeros(5)
    for _ in range(args.draws):
        beta = rng.uniform(0.05, 3)
        E, m = rng.uniform(0.1, 2, 5), rng.uniform(0.1, 2, 5)
        ref = algorithm1_from_coefficients(beta, E, m, 5)[1][1:]
        worst = np.maximum(worst, np.abs(closed_form_moments_from(beta, E, m) - ref) / np.abs(ref))
    print(f"closed form vs recursion over {args.draws} draws, max rel err per order:")
    print("  " + "  ".join(f"m{i + 1}: {w:.1e}" for i, w in enumerate(worst)))
    print("unit parameters, beta = 0.5:", closed_form_moments_from(0.5, [1] * 5, [1] * 5),
          "MP:", [mp_moment_oracle(0.5, l) for l in range(1, 6)])
    print("\nRRC energies E_s: quadrature, exact closed form, printed formula")
    for theta in (0.0, 0.25, 0.5, 1.0):
        for s in (1, 2, 3):
            e = rrc_energy(theta, s)
            print(f"  rolloff {theta:4.2f} s={s}: {e.quadrature:.12f} {e.closed_form:.12f} {e.printed_formula:.6f}")


if __name__ == "__main__":
    main()
