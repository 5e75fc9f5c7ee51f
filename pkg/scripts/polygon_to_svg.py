#!/usr/bin/env python3
"""
Polygon to SVG conversion script for polyriesz.

Renders a polygon file (optionally with a disc overlay) as an 800x800 SVG
with the Y axis pointing up.

Receives JSON arguments on stdin, writes JSON results to stdout.
"""
import sys
import json
import os

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))


def main():
    args = json.loads(sys.stdin.read())

    file_path = args["file_path"]
    output_path = args["output_path"]
    disc = args.get("disc")
    label = args.get("label")

    if not os.path.isfile(file_path):
        print(json.dumps({"error": f"File not found: {file_path}"}))
        return

    from polyriesz import io

    polygon = io.read_polygon(file_path)
    if isinstance(disc, str):
        disc = io.parse_disc(disc)
    elif disc is not None:
        disc = tuple(float(v) for v in disc)
        if len(disc) != 3 or not disc[2] > 0:
            print(json.dumps({"error": "disc must be [x, y, r] with r > 0"}))
            return

    path = io.write_svg(output_path, polygon, disc=disc, label=label)

    print(json.dumps({
        "output_path": path,
        "n": polygon.n,
        "disc": list(disc) if disc is not None else None,
        "file_size_bytes": os.path.getsize(path),
    }))


if __name__ == "__main__":
    try:
        main()
    except Exception as e:
        print(json.dumps({"error": str(e)}), file=sys.stderr)
        sys.exit(1)
