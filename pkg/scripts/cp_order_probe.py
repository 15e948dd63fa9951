"""Evidence for the partial order on positivity domains: is Q_1(Sigma1)
contained in Q_1(Sigma2) when Sigma1 Sigma1^-1 lies in Sigma2 Sigma2^-1?"""
import argparse

from groupsos.extension import cp_order_probe
from groupsos.groups import cyclic_product, free_abelian, make_sigma

PAIRS = [
    ("Z", [0, 1], [0, 1, 2]),
    ("Z", [0, 1, 2], [0, 1, 3]),
    ("Z", [0, 2], [0, 1, 2]),
    ("Z", [0, 1, 3], [0, 1, 2, 3]),
    ("C6", [0, 1], [0, 1, 3]),
    ("C6", [0, 1, 2], [0, 2, 3]),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    groups = {"Z": free_abelian(1), "C6": cyclic_product(6)}
    for name, s1, s2 in PAIRS:
        G = groups[name]
        try:
            r = cp_order_probe(make_sigma(G, s1), make_sigma(G, s2), args.trials, args.seed)
        except ValueError as exc:
            print(f"{name:3s} {s1!s:12s} -> {s2!s:14s} skipped: {exc}")
            continue
        ok = all(w.inside.verify(w.element).passed and w.outside.verify(w.element).passed for w in r.witnesses)
        print(f"{name:3s} {s1!s:12s} -> {s2!s:14s} {r.verdict:17s} {dict(sorted(r.statuses.items()))}"
              f"{'' if ok else '  (witness failed re-verification)'}")


if __name__ == "__main__":
    main()
