#!/usr/bin/env python3
"""
Polygon Validate - Check a polygon JSON file before running energies on it.

Reads args from stdin (JSON), outputs result to stdout (JSON).

Supports check levels:
  - syntax:   the file parses as JSON and holds a list of [x, y] pairs
  - geometry: simple, counterclockwise, at least three distinct vertices
  - rules:    star-shapedness (a valid fan node exists) and, when "r" is
              given, the consecutive-sides condition for the r-perimeter
"""
import sys
import json
import os

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))


def check_syntax(text, file_path):
    """Returns (vertices or None, issues)."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        return None, [{
            "severity": "error",
            "rule": "syntax",
            "location": f"{file_path}:{e.lineno}",
            "message": f"Invalid JSON: {e.msg}",
        }]
    if isinstance(data, dict):
        if "vertices" not in data:
            return None, [{
                "severity": "error",
                "rule": "syntax",
                "location": "vertices",
                "message": "Missing 'vertices' field.",
            }]
        data = data["vertices"]
    if not isinstance(data, list):
        return None, [{
            "severity": "error",
            "rule": "syntax",
            "location": "vertices",
            "message": "'vertices' must be a list of [x, y] pairs.",
        }]
    return data, []


def check_rules(polygon, r=None):
    from polyriesz.errors import NotStarShapedError
    from polyriesz.geometry import card_condition, diameter, fan_node, is_fan_node, centroid

    issues = []
    try:
        node = fan_node(polygon)
        if not is_fan_node(polygon, centroid(polygon)):
            issues.append({
                "severity": "info",
                "rule": "fan_node",
                "location": "centroid",
                "message": f"Centroid is not a fan node; using ({node[0]:.6g}, {node[1]:.6g}).",
            })
    except NotStarShapedError as e:
        issues.append({
            "severity": "error",
            "rule": "star_shaped",
            "location": "vertices",
            "message": str(e),
        })

    if r is not None:
        if polygon.n > 3 and not card_condition(polygon, r):
            issues.append({
                "severity": "warning",
                "rule": "consecutive_sides",
                "location": f"r={r}",
                "message": "Some boundary disc meets more than two consecutive sides.",
            })
        if diameter(polygon) < r:
            issues.append({
                "severity": "info",
                "rule": "saturated",
                "location": f"r={r}",
                "message": "Diameter is below r; the r-perimeter has its closed form.",
            })
    return issues


def main():
    args = json.loads(sys.stdin.read())

    file_path = args["file_path"]
    check_level = args.get("check_level", "geometry")
    r = args.get("r")

    if not os.path.isabs(file_path):
        file_path = os.path.abspath(file_path)

    if not os.path.isfile(file_path):
        print(json.dumps({"error": f"File not found: {file_path}"}))
        return

    from polyriesz.geometry import Polygon, area, validate_polygon

    with open(file_path, encoding="utf-8") as f:
        vertices, all_issues = check_syntax(f.read(), file_path)

    polygon = None
    if vertices is not None and check_level in ("geometry", "rules"):
        all_issues.extend(validate_polygon(vertices))
        if not any(i["severity"] == "error" for i in all_issues):
            polygon = Polygon(vertices)

    if polygon is not None and check_level == "rules":
        all_issues.extend(check_rules(polygon, r))

    has_errors = any(i["severity"] == "error" for i in all_issues)

    result = {
        "valid": not has_errors,
        "file_path": file_path,
        "check_level": check_level,
        "vertex_count": len(vertices) if isinstance(vertices, list) else None,
        "area": area(polygon) if polygon is not None else None,
        "issues": all_issues,
        "issue_count": len(all_issues),
        "error_count": sum(1 for i in all_issues if i["severity"] == "error"),
        "warning_count": sum(1 for i in all_issues if i["severity"] == "warning"),
        "info_count": sum(1 for i in all_issues if i["severity"] == "info"),
    }

    print(json.dumps(result))


if __name__ == "__main__":
    try:
        main()
    except Exception as e:
        print(json.dumps({"error": str(e)}), file=sys.stderr)
        sys.exit(1)
