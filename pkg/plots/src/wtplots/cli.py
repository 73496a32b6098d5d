"""Command line entry: render one figure from named input files."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import KINDS, FigureSpec, ParseError, render

_INPUT_NAMES = {
    "fronts": ["fronts"],
    "spectrum": ["spectrum", "stability"],
    "branch": ["branch"],
    "decay": ["error", "rate"],
}

_DEFAULT_FILES = {
    "fronts": "fronts.csv",
    "spectrum": "spectrum.csv",
    "stability": "stability.json",
    "branch": "branch.csv",
    "error": "error.csv",
    "rate": "rate.json",
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="wavetrain-plots",
        description="render figures from wavetrainlab run artifacts",
    )
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--run", required=True,
                        help="artifact directory of a wavetrainlab run")
    parser.add_argument("--out", required=True, help="output image path (.png/.svg)")
    args = parser.parse_args(argv)
    run_dir = Path(args.run)
    inputs = {
        name: run_dir / _DEFAULT_FILES[name] for name in _INPUT_NAMES[args.kind]
    }
    try:
        result = render(FigureSpec(kind=args.kind, inputs=inputs, output=args.out))
    except ParseError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"[{args.kind}] wrote {result.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
