"""Strict parsing of JSON emitted by chat models.

The whole response must be JSON, or it must contain exactly one fenced code
block holding JSON (prose around the fence is tolerated).
"""

from __future__ import annotations

import json
import re

_FENCE = re.compile(r"```(?:json|JSON)?[ \t]*\n(.*?)\n?```", re.DOTALL)


class JsonOutputError(ValueError):
    pass


def parse_json_output(text: str, expect: type):
    text = text.strip()
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        blocks = _FENCE.findall(text)
        if len(blocks) != 1:
            raise JsonOutputError(
                "response is not JSON and has no single fenced JSON block" if not blocks
                else f"response has {len(blocks)} fenced blocks"
            ) from None
        try:
            value = json.loads(blocks[0])
        except json.JSONDecodeError as exc:
            raise JsonOutputError(f"fenced block is not valid JSON: {exc}") from None
    if not isinstance(value, expect):
        raise JsonOutputError(f"expected a JSON {expect.__name__}, got {type(value).__name__}")
    return value
