"""Collects one verdict line per acceptance criterion for the terminal summary."""

LINES = {}


def report(number, title, passed, detail):
    line = f"criterion {number:>2}  {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    LINES[number] = line
    print(line)
    return passed
