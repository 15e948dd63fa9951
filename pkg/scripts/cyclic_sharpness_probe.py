"""Fejer-Riesz gap on C_m with Sigma = {0..N}: scan m around 2N+1.

For each (N, m) the gap probe searches for a nonnegative function on C_m
supported in {-N..N} that is not a sum of squares over {0..N}; independently
the extension check is run on each witness's dual Toeplitz certificate and
on random PSD Toeplitz data on the same Sigma.  Failure is known for m > 2N+1; the
question is whether m = 2N+1 is the exact threshold.
"""
import argparse

import numpy as np

from groupsos.algebra import toeplitz_lift
from groupsos.extension import NOT_EXTENDABLE, sigma_extension_check
from groupsos.fejer_riesz import fr_gap_probe
from groupsos.groups import cyclic_product, make_sigma


def extension_probe(G, sig, trials, rng):
    """Random rank-one PSD Toeplitz data u(k) = sum_j w_j e^{i k theta_j}, theta_j off the grid."""
    N = len(sig) - 1
    hits = 0
    for _ in range(trials):
        th, w = rng.uniform(0, 2 * np.pi, N + 1), rng.uniform(0.1, 1, N + 1)
        vals = {G.element(k): complex(np.sum(w * np.exp(1j * k * th))) for k in range(-N, N + 1)}
        rep = sigma_extension_check(toeplitz_lift(vals, sig))
        hits += rep.verdict == NOT_EXTENDABLE
    return hits


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-n", type=int, default=3)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'N':>2} {'m':>3} {'m-(2N+1)':>8} {'gap witnesses':>14} {'witness T rejected':>19} "
          f"{'random T rejected':>18}")
    for N in range(1, args.max_n + 1):
        for m in range(N + 2, 2 * N + 5):
            G = cyclic_product(m)
            sig = make_sigma(G, range(N + 1))
            rep = fr_gap_probe(sig, trials=args.trials, seed=args.seed)
            # the dual certificate of each witness is a PSD Toeplitz matrix on
            # Sigma; it must fail to extend to a PSD function on C_m
            dual = sum(sigma_extension_check(w.outside.toeplitz).verdict == NOT_EXTENDABLE for w in rep.witnesses)
            ext = extension_probe(G, sig, args.trials, rng)
            print(f"{N:>2} {m:>3} {m - 2 * N - 1:>8} {len(rep.witnesses):>14} {dual:>19} {ext:>18}")


if __name__ == "__main__":
    main()
