"""Human-readable byte quantities (powers of 1024)."""

import re

_SUFFIX = {"": 0, "K": 1, "M": 2, "G": 3, "T": 4, "P": 5}
_PATTERN = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([KMGTP]?)(?:I?B)?\s*$", re.IGNORECASE)


def parse_bytes(text: str | int) -> int:
    """``'64M'`` -> 67108864. Fractional values are rounded to whole bytes."""
    if isinstance(text, int):
        return text
    m = _PATTERN.match(text)
    if not m:
        raise ValueError(f"not a byte quantity: {text!r}")
    number, suffix = m.groups()
    return round(float(number) * 1024 ** _SUFFIX[suffix.upper()])


def format_bytes(n: float) -> str:
    for unit in ("B", "KiB", "MiB", "GiB", "TiB"):
        if abs(n) < 1024 or unit == "TiB":
            return f"{n:.0f} {unit}" if unit == "B" else f"{n:.2f} {unit}"
        n /= 1024
    raise AssertionError
