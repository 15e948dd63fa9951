"""Scalar partial functions on the five-point domain {0, +-e1, +-e2} in Z^2:
does the extension hierarchy ever reject one that is PSD on the domain?

For scalar data there is an explicit candidate extension: with
u(e1) = r1 e^{i a}, u(e2) = r2 e^{i b} (r1, r2 <= 1) the product
u(m, n) = r1^|m| e^{i a m} r2^|n| e^{i b n} of two positive-definite
functions on Z is positive definite on Z^2.  The script checks that
candidate on each box alongside the hierarchy verdict.
"""
import argparse
from collections import Counter

import numpy as np

from groupsos.algebra import toeplitz_lift
from groupsos.extension import PartialFunction, extension_hierarchy, is_psd_on_domain
from groupsos.groups import box, free_abelian
from groupsos.linalg import lambda_min


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=30)
    ap.add_argument("--max-level", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    Z2 = free_abelian(2)
    verdicts = Counter()
    worst_product = np.inf
    for _ in range(args.trials):
        # |u(e_i)| close to 1 puts the data near the boundary of the domain cone
        b, c = (rng.uniform(0.9, 1.0) * np.exp(1j * rng.uniform(0, 2 * np.pi)) for _ in range(2))
        u = PartialFunction.from_map(Z2, {(0, 0): 1.0, (1, 0): b, (-1, 0): np.conj(b),
                                          (0, 1): c, (0, -1): np.conj(c)})
        assert is_psd_on_domain(u)[0]
        rep = extension_hierarchy(u, args.max_level)
        verdicts[rep.verdict] += 1
        if rep.verdict == "not_extendable":
            print(f"candidate: u(e1)={b:.4f} u(e2)={c:.4f} level={rep.verdict_level}")

        def product(g, b=b, c=c):
            m, n = g.data
            return (b if m >= 0 else np.conj(b)) ** abs(m) * (c if n >= 0 else np.conj(c)) ** abs(n)

        worst_product = min(worst_product, lambda_min(toeplitz_lift(product, box(Z2, args.max_level)).matrix))
    print(dict(verdicts))
    print(f"explicit product extension: min lambda_min on box level {args.max_level} = {worst_product:.3e}")


if __name__ == "__main__":
    main()
