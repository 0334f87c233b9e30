"""Parsers for the compact list syntax of command line flags.

Lists are comma separated (``102,74``), point lists separate points with
semicolons (``0,0;0.5,-0.5``) and boxes separate bounds with colons
(``-0.25:0.25,-0.5:0.5``).
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

from spatial_sieve.ext import exceptions


def floats(text: str | None, name: str) -> list[float] | None:
    """Parses ``a,b,c`` into floats, None stays None."""
    if text is None:
        return None
    try:
        return [float(part) for part in str(text).split(",") if part.strip()]
    except ValueError as exc:
        raise exceptions.InvalidParameters(f"--{name} expects comma separated numbers, got {text!r}") from exc


def ints(text: str | None, name: str) -> list[int] | None:
    """Parses ``a,b,c`` into integers, None stays None."""
    if text is None:
        return None
    try:
        return [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError as exc:
        raise exceptions.InvalidParameters(f"--{name} expects comma separated integers, got {text!r}") from exc


def points(text: str | None, name: str) -> list[list[float]] | None:
    """Parses ``x1,y1;x2,y2`` into a list of points."""
    if text is None:
        return None
    parsed = [floats(chunk, name) for chunk in str(text).split(";") if chunk.strip()]
    if len({len(p) for p in parsed}) > 1:
        raise exceptions.InvalidParameters(f"--{name} points must all have the same dimension")
    return parsed


def bounds(text: str | None, name: str) -> list[list[float]] | None:
    """Parses ``lo:hi,lo:hi`` into a list of [lo, hi] pairs."""
    if text is None:
        return None
    out = []
    for chunk in str(text).split(","):
        try:
            lo, hi = (float(v) for v in chunk.split(":"))
        except ValueError as exc:
            raise exceptions.InvalidParameters(f"--{name} expects lo:hi pairs, got {chunk!r}") from exc
        if not lo < hi:
            raise exceptions.InvalidParameters(f"--{name} needs lo < hi, got {chunk!r}")
        out.append([lo, hi])
    return out
