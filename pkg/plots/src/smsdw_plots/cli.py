"""Script entry: render one figure from flags or a YAML figure-spec file."""

from __future__ import annotations

import argparse
import sys

import yaml

from .figures import KINDS, FigureSpec, render
from .rawio import MalformedInput


def spec_from_args(args) -> FigureSpec:
    if args.spec:
        with open(args.spec) as fh:
            data = yaml.safe_load(fh) or {}
        return FigureSpec(
            kind=data["kind"], inputs=data["inputs"], output=data["output"],
            channel=data.get("channel", "w"), snapshot=data.get("snapshot", -1),
            title=data.get("title"),
            xlim=tuple(data["xlim"]) if data.get("xlim") else None,
            ylim=tuple(data["ylim"]) if data.get("ylim") else None)
    if not (args.kind and args.input and args.output):
        raise MalformedInput("need either --spec or all of --kind/--input/--output")
    return FigureSpec(kind=args.kind, inputs=args.input, output=args.output,
                      channel=args.channel, snapshot=args.snapshot,
                      title=args.title)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="smsdw-plot", description="Regenerate figures from simulator outputs")
    parser.add_argument("--spec", help="YAML figure-spec file")
    parser.add_argument("--kind", choices=KINDS)
    parser.add_argument("--input", action="append",
                        help="input file (repeat for multi-input kinds)")
    parser.add_argument("--output", help="image file to write")
    parser.add_argument("--channel", default="w")
    parser.add_argument("--snapshot", type=int, default=-1)
    parser.add_argument("--title")
    args = parser.parse_args(argv)
    try:
        out = render(spec_from_args(args))
    except (MalformedInput, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
