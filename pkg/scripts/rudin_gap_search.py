"""Search for a nonnegative trigonometric polynomial on T^2 with support in
the box {-K..K}^2 that is not a sum of squares over {0..K}^2."""
import argparse

from groupsos.fejer_riesz import fr_gap_probe
from groupsos.groups import box, free_abelian


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--degree", type=int, default=2)
    ap.add_argument("--trials", type=int, default=40)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rep = fr_gap_probe(box(free_abelian(2), args.degree), trials=args.trials, seed=args.seed)
    print(f"statuses: {dict(sorted(rep.statuses.items()))}")
    for w in rep.witnesses:
        print(f"witness: min {w.positivity.lower_bound:.3e} ({w.positivity.method}), verified={w.verify()}")
    if not rep.witnesses:
        print("no witness found (search mode; absence proves nothing)")


if __name__ == "__main__":
    main()
