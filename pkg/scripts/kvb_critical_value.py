"""Regenerate the fixed-b (Bartlett, b = 1) critical values baked into harlrv.har_tests.

Usage: python scripts/kvb_critical_value.py [--paths 50000] [--steps 2000] [--seed 20240501]
"""

import argparse
import json

from harlrv.har_tests import KVB_SIM_SEED, simulate_kvb_critical_values


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=50_000)
    ap.add_argument("--steps", type=int, default=2_000)
    ap.add_argument("--seed", type=int, default=KVB_SIM_SEED)
    args = ap.parse_args()
    cv = simulate_kvb_critical_values(args.paths, args.steps, args.seed)
    print(json.dumps({f"{a:g}": round(v, 4) for a, v in cv.items()}, indent=2))


if __name__ == "__main__":
    main()
