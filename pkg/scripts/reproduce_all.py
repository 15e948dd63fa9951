"""Run every pinned example, write its certificate file and re-verify it."""
import argparse
import io
import json
import pathlib

from groupsos import serialize as ser
from groupsos.cli import REPRODUCE_IDS, run_command


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="certificates")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    failed = 0
    for rid in REPRODUCE_IDS:
        path = out / f"{rid}.cert.json"
        rc = run_command(["reproduce", rid, "--seed", str(args.seed), "--out", str(path)], io.StringIO())
        d = json.loads(path.read_text())
        ok = ser.verify_certificate_file(d).passed
        failed += rc != 0 or not ok
        verdict = d.get("verdict") or f"bundle of {len(d.get('items', []))}"
        print(f"{rid:20s} exit={rc} verdict={verdict:18s} verified={ok}")
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
