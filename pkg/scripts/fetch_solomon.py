#!/usr/bin/env python3
"""Download the 56 Solomon VRPTW benchmark files into data/solomon/.

Needs outbound network access.  Tries a list of well-known mirrors for each
instance and verifies the basic shape (101 vertex rows) before writing.
"""

import argparse
import sys
import urllib.request
from pathlib import Path

GROUPS = {
    "R1": [f"R1{i:02d}" for i in range(1, 13)],
    "R2": [f"R2{i:02d}" for i in range(1, 12)],
    "C1": [f"C1{i:02d}" for i in range(1, 10)],
    "C2": [f"C2{i:02d}" for i in range(1, 9)],
    "RC1": [f"RC1{i:02d}" for i in range(1, 9)],
    "RC2": [f"RC2{i:02d}" for i in range(1, 9)],
}

MIRRORS = [
    "https://raw.githubusercontent.com/CervEdin/solomon-vrptw-benchmarks/main/{lower}.txt",
    "https://raw.githubusercontent.com/dungtran209/Modelling-and-Solving-VRPTW/master/data/solomon_instances/{lower}.txt",
    "https://www.sintef.no/globalassets/project/top/vrptw/solomon/solomon-100/{lower}.txt",
]


def plausible(text: str, name: str) -> bool:
    rows = [ln for ln in text.splitlines() if len(ln.split()) == 7]
    return len(rows) >= 101 and name.upper() in text.upper()


def fetch(name: str, out_dir: Path) -> bool:
    target = out_dir / f"{name}.txt"
    if target.exists():
        print(f"{name}: already present")
        return True
    for url in MIRRORS:
        full = url.format(lower=name.lower(), upper=name.upper())
        try:
            with urllib.request.urlopen(full, timeout=30) as resp:
                text = resp.read().decode("utf-8", "replace")
            if plausible(text, name):
                target.write_text(text, encoding="utf-8")
                print(f"{name}: fetched from {full}")
                return True
        except Exception:
            continue
    print(f"{name}: FAILED (no mirror reachable)", file=sys.stderr)
    return False


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="data/solomon")
    parser.add_argument("--groups", nargs="*", default=list(GROUPS))
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ok = True
    for group in args.groups:
        for name in GROUPS[group]:
            ok &= fetch(name, out_dir)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
