#!/usr/bin/env python3
"""
Polygon energy script for polyriesz.

Evaluates J_h(P) for one polygon and one kernel, plus the r-perimeter when
the kernel is characteristic and the scale-invariant value for even powers.

Receives JSON arguments on stdin, writes JSON results to stdout.
"""
import sys
import json
import os
import math

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))


def main():
    args = json.loads(sys.stdin.read())

    kernel_spec = args["kernel"]
    degree = args.get("degree")
    sampled = bool(args.get("sampled", False))

    from polyriesz import io
    from polyriesz.energy import J, P_r, scale_invariant_J
    from polyriesz.geometry import Polygon, area, diameter, perimeter
    from polyriesz.kernels import CHAR, parse_kernel_spec

    if "file_path" in args:
        if not os.path.isfile(args["file_path"]):
            print(json.dumps({"error": f"File not found: {args['file_path']}"}))
            return
        polygon = io.read_polygon(args["file_path"])
    elif "vertices" in args:
        polygon = Polygon(args["vertices"])
    else:
        print(json.dumps({"error": "Provide 'file_path' or 'vertices'."}))
        return

    K = parse_kernel_spec(kernel_spec)
    report = J(polygon, K, degree, exact=not sampled)

    result = {
        "kernel": K.spec(),
        "energy": report.to_dict(),
        "polygon": {
            "n": polygon.n,
            "area": area(polygon),
            "perimeter": perimeter(polygon),
            "diameter": diameter(polygon),
        },
    }
    if K.variant == CHAR:
        result["P_r"] = P_r(polygon, K.r)
        result["P_r_upper"] = area(polygon) * math.pi * K.r ** 2
    elif K.even_power:
        result["scale_invariant"] = scale_invariant_J(polygon, int(K.k), degree)

    print(json.dumps(result))


if __name__ == "__main__":
    try:
        main()
    except Exception as e:
        print(json.dumps({"error": str(e)}), file=sys.stderr)
        sys.exit(1)
