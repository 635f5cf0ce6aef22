"""Manifest-driven batch rendering: ``plotkit --spec manifest.json``.

The manifest is a JSON object ``{"figures": [<figure spec>, ...]}``; each
figure spec holds kind, inputs, output, and optional labels. Figures render
sequentially; the first failure stops the run with exit code 2 and an error
naming the offending file or column.
"""

from __future__ import annotations

import argparse
import json
import sys

from plotkit import FigureSpec, SchemaError, __version__, render


def load_manifest(path) -> list[FigureSpec]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(payload, dict) or "figures" not in payload:
        raise SchemaError(f"{path}: manifest must be an object with a 'figures' list")
    figures = payload["figures"]
    if not isinstance(figures, list) or not figures:
        raise SchemaError(f"{path}: 'figures' must be a non-empty list")
    return [FigureSpec.from_dict(entry) for entry in figures]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotkit", description="Render figures from result CSVs."
    )
    parser.add_argument("--version", action="version", version=f"plotkit {__version__}")
    parser.add_argument("--spec", required=True, help="manifest JSON listing figure specs")
    parser.add_argument("--verbose", action="store_true", help="log each output to stderr")
    args = parser.parse_args(argv)
    try:
        for spec in load_manifest(args.spec):
            path = render(spec)
            if args.verbose:
                print(f"wrote {path}", file=sys.stderr)
    except SchemaError as exc:
        print(f"plotkit: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
