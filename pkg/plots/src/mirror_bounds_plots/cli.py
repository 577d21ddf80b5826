"""CLI: render one figure from a JSON spec (file path or inline literal)."""

from __future__ import annotations

import argparse
import json
import sys

from .figures import FigureSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mirror-bounds-plot", description=__doc__)
    parser.add_argument("--spec", required=True,
                        help="figure spec: a JSON file path or an inline JSON object")
    args = parser.parse_args(argv)
    try:
        raw = args.spec
        if raw.lstrip().startswith("{"):
            payload = json.loads(raw)
        else:
            with open(raw) as fh:
                payload = json.load(fh)
        spec = FigureSpec.from_json(payload)
        path = render(spec)
        print(f"wrote {path}")
        return 0
    except (SchemaError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
