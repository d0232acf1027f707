"""Figure CLI: ``plot <kind> --in <csv...> --out <file>``.

Exit codes: 0 success, 1 data error (missing/empty/malformed CSV columns),
2 specification error (unknown kind, bad output format, bad arguments).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import KINDS, DataError, FigureSpec, SpecError, render


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="plot", description=__doc__)
    ap.add_argument("kind", help=f"figure kind: one of {', '.join(KINDS)}")
    ap.add_argument("--in", dest="inputs", nargs="+", required=True, type=Path,
                    help="input CSV file(s); scaled-sweep takes the sweep CSV "
                         "then the arm-table CSV")
    ap.add_argument("--out", required=True, type=Path, help="output .png or .svg")
    ap.add_argument("--logx", action="store_true")
    ap.add_argument("--logy", action="store_true")
    ap.add_argument("--title", default=None)
    try:
        args = ap.parse_args(argv)
    except SystemExit:
        return 2
    try:
        spec = FigureSpec(kind=args.kind, inputs=list(args.inputs), out=args.out,
                          logx=args.logx, logy=args.logy, title=args.title)
        series = render(spec)
    except SpecError as exc:
        print(f"plot: specification error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"plot: data error: {exc}", file=sys.stderr)
        return 1
    ncurves = sum(1 for v in series.values() if isinstance(v, dict))
    print(f"wrote {args.out} ({args.kind}, {ncurves} series)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
