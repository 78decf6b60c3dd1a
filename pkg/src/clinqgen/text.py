"""Shared tokenization and date parsing.

All token-length statistics, bag-of-token metrics, and template matching run
through :func:`tokenize` so that lengths are comparable across modules.
Annotation token spans use plain whitespace tokens (:func:`ws_tokens`)
because that is the addressing convention of the annotation line format.
"""

from __future__ import annotations

import datetime
import re

# Placeholders like |medication| stay single tokens; words keep internal
# . / : - so dates ("12/14/2115"), decimals ("11.80") and dose strings
# ("p.o.") survive as one token; remaining punctuation is one token per char.
_TOKEN_RE = re.compile(
    r"\|[A-Za-z_]+\|"
    r"|[A-Za-z0-9_]+(?:[./:'-][A-Za-z0-9_]+)*"
    r"|[^\sA-Za-z0-9_]"
)

_WS_RE = re.compile(r"\S+")


def tokenize(text: str) -> list[str]:
    """Split text into word/punctuation tokens, keeping |type| placeholders whole."""
    return _TOKEN_RE.findall(text)


def ws_tokens(line: str) -> list[str]:
    """Whitespace-delimited tokens, as used by annotation token spans."""
    return _WS_RE.findall(line)


def ws_token_spans(line: str) -> list[tuple[int, int]]:
    """Character (start, end) of each whitespace token in ``line``."""
    return [m.span() for m in _WS_RE.finditer(line)]


def squash_ws(text: str) -> str:
    return " ".join(text.split())


_DATE_PATTERNS = (
    (re.compile(r"^(\d{4})-(\d{1,2})-(\d{1,2})$"), ("y", "m", "d")),
    (re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{4})$"), ("m", "d", "y")),
    (re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{2})$"), ("m", "d", "yy")),
)


def parse_date(text: str, two_digit_year_base: int = 1900) -> datetime.date | None:
    """Parse MM/DD/YY, MM/DD/YYYY or YYYY-MM-DD; return None when not a date.

    Two-digit years are offset from ``two_digit_year_base`` (clinical notes
    carry shifted years, so the window is corpus configuration, not a guess).
    """
    text = text.strip()
    for pattern, order in _DATE_PATTERNS:
        m = pattern.match(text)
        if not m:
            continue
        parts = dict(zip(order, (int(g) for g in m.groups())))
        year = parts.get("y", None)
        if year is None:
            year = two_digit_year_base + parts["yy"]
        try:
            return datetime.date(year, parts["m"], parts["d"])
        except ValueError:
            return None
    return None


def looks_like_date(token: str) -> bool:
    return parse_date(token) is not None
