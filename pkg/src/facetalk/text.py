"""Surface normalization shared by the parser, the vocabulary index and search.

Everything that looks at raw strings (utterances, schema phrases, product
text) goes through :func:`normalize` so the token streams line up exactly.
"""

from __future__ import annotations

import re
from fractions import Fraction

# Marker token emitted for currency symbols/words; always placed after the
# number it qualifies ("$50" and "50 bucks" both become ["50", "CUR"]).
CURRENCY_TOKEN = "CUR"

_TOKEN_RE = re.compile(r"\d+(?:\.\d+)?|[a-z]+(?:'[a-z]+)*|[,;$]")

_CONTRACTIONS = {
    "don't": "do not",
    "doesn't": "does not",
    "didn't": "did not",
    "isn't": "is not",
    "aren't": "are not",
    "wasn't": "was not",
    "weren't": "were not",
    "can't": "can not",
    "cannot": "can not",
    "won't": "will not",
    "wouldn't": "would not",
    "couldn't": "could not",
    "shouldn't": "should not",
    "ain't": "is not",
    "it's": "it is",
    "that's": "that is",
    "what's": "what is",
    "there's": "there is",
    "here's": "here is",
    "let's": "let us",
    "i'm": "i am",
    "i'll": "i will",
    "i've": "i have",
    "i'd": "i would",
    "we're": "we are",
    "we'll": "we will",
    "we've": "we have",
    "you're": "you are",
    "you'll": "you will",
    "you've": "you have",
    "they're": "they are",
}

# "cur" re-absorbs the marker so normalize is a fixed point on its output.
_CURRENCY_WORDS = {"$", "dollar", "dollars", "buck", "bucks", "usd", "cur"}

_UNITS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
    "eleven": 11, "twelve": 12, "thirteen": 13, "fourteen": 14,
    "fifteen": 15, "sixteen": 16, "seventeen": 17, "eighteen": 18,
    "nineteen": 19,
}
_TENS = {
    "twenty": 20, "thirty": 30, "forty": 40, "fifty": 50,
    "sixty": 60, "seventy": 70, "eighty": 80, "ninety": 90,
}
_SCALES = {"hundred": 100, "thousand": 1000}

_NUMBER_TOKEN_RE = re.compile(r"^\d+(?:\.\d+)?$")


def normalize(text: str) -> list[str]:
    """Tokenize an utterance into the canonical lowercase token stream.

    Lowercases, expands contractions, drops possessive "'s", folds number
    words ("a hundred" -> "100") and currency markers ("fifty bucks" ->
    ["50", "CUR"]). Commas and semicolons survive as tokens because they
    split clauses downstream; other punctuation is dropped.
    """
    lowered = text.lower().replace("’", "'").replace("…", " ")
    raw = _TOKEN_RE.findall(lowered)

    words: list[str] = []
    for tok in raw:
        if tok in _CONTRACTIONS:
            words.extend(_CONTRACTIONS[tok].split())
        elif tok.endswith("'s"):
            words.append(tok[:-2])
        else:
            words.append(tok.replace("'", ""))

    words = _fold_number_words(words)

    out: list[str] = []
    i = 0
    while i < len(words):
        tok = words[i]
        if tok in _CURRENCY_WORDS:
            if i + 1 < len(words) and is_number(words[i + 1]):
                out.append(words[i + 1])
                out.append(CURRENCY_TOKEN)
                i += 2
                continue
            out.append(CURRENCY_TOKEN)
        else:
            out.append(tok)
        i += 1
    return [t for t in out if t]


def _fold_number_words(tokens: list[str]) -> list[str]:
    """Collapse maximal runs of number words into a single digit token."""
    out: list[str] = []
    i = 0
    n = len(tokens)
    while i < n:
        tok = tokens[i]
        starts_run = tok in _UNITS or tok in _TENS or (
            tok == "a" and i + 1 < n and tokens[i + 1] in _SCALES
        )
        if not starts_run:
            out.append(tok)
            i += 1
            continue

        total = 0
        current = 0
        consumed = 0
        j = i
        while j < n:
            w = tokens[j]
            if w == "a" and j + 1 < n and tokens[j + 1] in _SCALES:
                current = 1
            elif w in _UNITS:
                current += _UNITS[w]
            elif w in _TENS:
                current += _TENS[w]
            elif w == "hundred" and (current or (j > i)):
                current = max(current, 1) * 100
            elif w == "thousand" and (current or total or (j > i)):
                total += max(current, 1) * 1000
                current = 0
            else:
                break
            j += 1
            consumed = j - i
        value = total + current
        if consumed and value <= 999_999:
            out.append(str(value))
            i += consumed
        else:
            out.append(tok)
            i += 1
    return out


def is_number(token: str) -> bool:
    return bool(_NUMBER_TOKEN_RE.match(token))


def to_number(token: str) -> Fraction:
    """Parse a digit token into an exact rational."""
    return Fraction(token)


def number_to_json(value: Fraction):
    """Render a rational for JSON: int when integral, else exact string."""
    if value.denominator == 1:
        return int(value)
    return format_number(value)


def number_from_json(value) -> Fraction:
    """Inverse of :func:`number_to_json`; also accepts plain JSON numbers."""
    if isinstance(value, bool):
        raise ValueError("boolean is not a number")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    if isinstance(value, str):
        return Fraction(value)
    raise ValueError(f"cannot read number from {value!r}")


def format_number(value: Fraction) -> str:
    """Exact human-readable form: terminating decimal when possible."""
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    fives = 0
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    digits = max(twos, fives)
    scaled = value * 10**digits
    sign = "-" if scaled < 0 else ""
    text = str(abs(int(scaled))).rjust(digits + 1, "0")
    return f"{sign}{text[:-digits]}.{text[-digits:]}"
