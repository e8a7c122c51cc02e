"""erwplot: render figures from erwlab CSV files."""

from __future__ import annotations

import argparse
import sys

from . import figures


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="erwplot",
                                 description="render figures from erwlab CSVs")
    ap.add_argument("kind", choices=["fig1", "fig3", "ks-overlay", "tail-loglog"])
    ap.add_argument("--in", dest="inputs", nargs="+", required=True,
                    help="input CSV files (schema depends on the figure kind)")
    ap.add_argument("--out", required=True, help="output image path")
    ap.add_argument("--titles", nargs="*", default=None,
                    help="panel titles (fig3) or series labels (ks-overlay)")
    ap.add_argument("--tail-fraction", type=float, default=0.3,
                    dest="tail_fraction")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.kind == "fig1":
            if len(args.inputs) != 3:
                raise ValueError("fig1 needs three CSVs: path, D profile, E profile")
            figures.render_fig1(*args.inputs, out=args.out)
        elif args.kind == "fig3":
            figures.render_fig3(args.inputs, out=args.out, titles=args.titles)
        elif args.kind == "ks-overlay":
            if len(args.inputs) != 2:
                raise ValueError("ks-overlay needs two sample CSVs")
            labels = tuple(args.titles) if args.titles else ("sample A", "sample B")
            figures.render_ks_overlay(*args.inputs, out=args.out, labels=labels)
        else:
            if len(args.inputs) != 1:
                raise ValueError("tail-loglog needs one survey CSV")
            figures.render_tail_loglog(args.inputs[0], out=args.out,
                                       tail_fraction=args.tail_fraction)
    except (figures.SchemaError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    sys.stdout.write(f"{args.out}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
