"""Batch figure rendering: ``python -m rrcplots --in DIR --out DIR``."""

import argparse
import sys

from .render import RenderError, default_specs, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rrcplots",
        description="Render figures from rrclab experiment artifacts")
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="directory with rrclab CSV/JSON outputs")
    parser.add_argument("--out", dest="out_dir", required=True,
                        help="directory for rendered images")
    args = parser.parse_args(argv)
    try:
        specs = default_specs(args.in_dir, args.out_dir)
        for spec in specs:
            path = render(spec)
            print(f"wrote {path}")
    except RenderError as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
