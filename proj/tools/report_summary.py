#!/usr/bin/env python3
"""Summarize one or more JSON reports produced by ektau-cli.

Prints a compact table per report and exits nonzero if any report carries a
nonzero exit status, so the script can gate batch runs.
"""

import argparse
import json
import sys


def summarize_verify(doc):
    s = doc["surface"]
    print(f"  surface {s['name']}  ({s['family']}, kappa={s['kappa']}, tau={s['tau']}, "
          f"{s['resolution_u']}x{s['resolution_v']})")
    for row in doc.get("identities", []):
        flag = "ok " if row["pass"] else ("n/a" if not row.get("applicable", True) else "FAIL")
        val = row.get("max_abs")
        val = "-" if val is None else f"{val:.3e}"
        print(f"    [{flag}] {row['identity']:<28} max {val:>10}  tol {row['tolerance']:g}")
    idx = doc.get("index", {})
    if idx:
        print(f"    index sum {idx.get('index_sum')} vs Euler characteristic "
              f"{idx.get('euler_characteristic')}"
              + ("  (trivial field)" if idx.get("field_trivial") else ""))
    for screen in doc.get("screens", []):
        if screen["verdict"] != "NOT-APPLICABLE":
            print(f"    screen {screen['clause']:<34} {screen['verdict']}")


def summarize_ladder(doc):
    print(f"  rungs {doc['rungs']}  (order bar {doc['order_bar']})")
    for row in doc.get("identities", []):
        flag = "ok " if row["pass"] else "FAIL"
        order = "conv" if row.get("converged_floor") else f"{row['order']:.2f}"
        print(f"    [{flag}] {row['identity']:<28} order {order}")


def summarize_sweep(doc):
    rows = doc.get("rows", [])
    built = sum(1 for r in rows if r.get("built"))
    print(f"  {len(rows)} parameter combos, {built} built")
    for r in rows:
        if not r.get("built"):
            print(f"    excluded kappa={r['kappa']} tau={r['tau']}: {r.get('note', '')}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("reports", nargs="+", help="JSON report files")
    args = ap.parse_args()

    worst = 0
    for path in args.reports:
        with open(path) as fh:
            doc = json.load(fh)
        status = "PASS" if doc.get("exit", 1) == 0 else "FAIL"
        print(f"{path}: {doc.get('command', '?')} {status}")
        {"verify": summarize_verify,
         "ladder": summarize_ladder,
         "sweep": summarize_sweep}.get(doc.get("command"), lambda d: None)(doc)
        failures = doc.get("failures", [])
        if failures:
            print(f"  failures: {', '.join(failures)}")
        worst = max(worst, doc.get("exit", 1))
    return 1 if worst else 0


if __name__ == "__main__":
    sys.exit(main())
