"""Text formatting shared by the columnar file writers.

All structured-text outputs format floats with repr(float(x)) — the shortest
decimal string that round-trips exactly — so identical arrays always produce
identical files.
"""


def fmt(x) -> str:
    return repr(float(x))
