#!/usr/bin/env python3
"""
DXF export script for polyriesz.

Writes a polygon as a closed LWPOLYLINE on layer POLYGON and an optional
disc as a CIRCLE on layer DISC, using ezdxf.

Receives JSON arguments on stdin, writes JSON results to stdout.
"""
import sys
import json
import os

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))


def main():
    args = json.loads(sys.stdin.read())

    output_path = args["output_path"]
    units = args.get("units", "m")
    disc = args.get("disc")

    from polyriesz import io
    from polyriesz.geometry import Polygon, regular_ngon

    if "file_path" in args:
        if not os.path.isfile(args["file_path"]):
            print(json.dumps({"error": f"File not found: {args['file_path']}"}))
            return
        polygon = io.read_polygon(args["file_path"])
    elif "vertices" in args:
        polygon = Polygon(args["vertices"])
    elif "ngon" in args:
        # {"ngon": 6, "area": 3.14159...}
        polygon = regular_ngon(int(args["ngon"]), area=float(args.get("area", 3.141592653589793)))
    else:
        print(json.dumps({"error": "Provide 'file_path', 'vertices' or 'ngon'."}))
        return

    if units not in ("in", "ft", "mm", "cm", "m"):
        print(json.dumps({"error": f"Unsupported units: {units}"}))
        return
    if isinstance(disc, str):
        disc = io.parse_disc(disc)

    path = io.write_dxf(output_path, polygon, disc=disc, units=units)

    print(json.dumps({
        "output_path": path,
        "n": polygon.n,
        "layers": ["POLYGON"] + (["DISC"] if disc is not None else []),
        "entity_count": 1 + (disc is not None),
        "file_size_bytes": os.path.getsize(path),
    }))


if __name__ == "__main__":
    try:
        main()
    except Exception as e:
        print(json.dumps({"error": str(e)}), file=sys.stderr)
        sys.exit(1)
