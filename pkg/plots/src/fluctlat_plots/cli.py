"""fluctlat-plot: figures from fluctlat CSV artifacts."""

import argparse
import sys

from .errors import PlotsError
from .loader import load_results
from .render import KINDS, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fluctlat-plot", description=__doc__)
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="artifact directory")
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument("--out", required=True, help="output image path")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        rs = load_results(args.in_dir)
        render(rs, args.kind, args.out)
    except PlotsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
