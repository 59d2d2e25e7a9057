"""``plot-figures``: render patchsim CSV results as image files."""

from __future__ import annotations

import argparse
import os
import sys

from .figures import KINDS, EmptyInputError, FigureSpec, SchemaError, render

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(message)


class _Usage(Exception):
    pass


def build_parser() -> _Parser:
    parser = _Parser(prog="plot-figures",
                     description="Render figures from patchsim experiment CSVs")
    parser.add_argument("--kind", required=True,
                        choices=sorted(set(KINDS) | {"diff-heatmap", "optimal-curve"}))
    parser.add_argument("--in", dest="input", required=True, metavar="FILE",
                        help="grid/optimal/series CSV")
    parser.add_argument("--in2", dest="input2", metavar="FILE",
                        help="second grid CSV; diff renders input - input2")
    parser.add_argument("--out", required=True, metavar="IMG",
                        help="output image (.png, .pdf, .svg, ...)")
    parser.add_argument("--title", default=None)
    parser.add_argument("--vmin", type=float, default=None)
    parser.add_argument("--vmax", type=float, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(sys.argv[1:] if argv is None else list(argv))
        if args.input2 and args.kind not in ("diff", "diff-heatmap"):
            raise _Usage("--in2 is only meaningful with --kind diff")
        inputs = [args.input] + ([args.input2] if args.input2 else [])
        for path in inputs:
            if not os.path.exists(path):
                raise _Usage(f"input file not found: {path}")
        spec = FigureSpec(kind=args.kind, inputs=tuple(inputs), output=args.out,
                          title=args.title, vmin=args.vmin, vmax=args.vmax)
        render(spec)
    except _Usage as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (SchemaError, EmptyInputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"wrote {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
