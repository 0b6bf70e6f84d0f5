"""Text and JSON model formats.

Text grammar (whitespace insignificant, one statement per file after an
optional ``dim <m>`` header line)::

    matrix = "[" row (";" row)* "]"
    row    = rat ("," rat)*
    rat    = poly | poly "/" poly | "(" poly ")" "/" "(" poly ")"
    poly   = ["+"|"-"] term (("+"|"-") term)*
    term   = coefficient? ("*"? "s" ("^" integer)?)?

Coefficients are decimal literals (scientific notation allowed).  The
denominator of a ``/`` extends to the end of the entry, so write parentheses
when in doubt.  Matrices are stored exactly as written; no cancellation.
"""
from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .models import Polynomial, RationalFunction, RationalMatrix, DimensionError


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(
    r"""(?P<num>\d+(\.\d*)?([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?)
      | (?P<s>s)
      | (?P<op>[\[\](),;+\-*/^])
      | (?P<ws>\s+)
      | (?P<bad>.)""",
    re.VERBOSE,
)


def _tokenize(text: str):
    tokens = []
    line, col = 1, 1
    for mo in _TOKEN_RE.finditer(text):
        kind = mo.lastgroup
        val = mo.group()
        if kind == "bad":
            raise ParseError(f"unexpected character {val!r}", line, col)
        if kind != "ws":
            tokens.append((kind if kind != "op" else val, val, line, col))
        nl = val.count("\n")
        if nl:
            line += nl
            col = len(val) - val.rfind("\n")
        else:
            col += len(val)
    tokens.append(("end", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i][0]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str):
        t = self.next()
        if t[0] != kind:
            raise ParseError(f"expected {kind!r}, found {t[1]!r}", t[2], t[3])
        return t

    def fail(self, msg: str):
        t = self.toks[self.i]
        raise ParseError(msg, t[2], t[3])

    # poly := [sign] term ((+|-) term)*
    def poly(self) -> Polynomial:
        coeffs = {}
        sign = 1.0
        if self.peek() in ("+", "-"):
            sign = -1.0 if self.next()[0] == "-" else 1.0
        deg, c = self.term()
        coeffs[deg] = coeffs.get(deg, 0.0) + sign * c
        while self.peek() in ("+", "-"):
            sign = -1.0 if self.next()[0] == "-" else 1.0
            deg, c = self.term()
            coeffs[deg] = coeffs.get(deg, 0.0) + sign * c
        out = np.zeros(max(coeffs) + 1)
        for d, v in coeffs.items():
            out[d] = v
        return Polynomial(out)

    # term := NUM ['*'? s-part] | s-part
    def term(self) -> tuple[int, float]:
        kind = self.peek()
        if kind == "num":
            c = float(self.next()[1])
            if self.peek() == "*":
                self.next()
                if self.peek() != "s":
                    self.fail("expected 's' after '*'")
            if self.peek() == "s":
                return self.spart(), c
            return 0, c
        if kind == "s":
            return self.spart(), 1.0
        self.fail("expected a coefficient or 's'")

    def spart(self) -> int:
        self.expect("s")
        if self.peek() == "^":
            self.next()
            t = self.expect("num")
            try:
                e = int(t[1])
            except ValueError:
                raise ParseError(f"exponent must be an integer, found {t[1]!r}", t[2], t[3])
            if e < 0:
                raise ParseError("exponent must be nonnegative", t[2], t[3])
            return e
        return 1

    def poly_or_paren(self) -> Polynomial:
        if self.peek() == "(":
            self.next()
            p = self.poly()
            self.expect(")")
            return p
        return self.poly()

    # rat := poly_or_paren ['/' poly_or_paren]
    def rat(self) -> RationalFunction:
        t = self.toks[self.i]
        num = self.poly_or_paren()
        if self.peek() == "/":
            self.next()
            den = self.poly_or_paren()
        else:
            den = Polynomial([1.0])
        try:
            return RationalFunction(num, den)
        except ValueError as exc:
            raise ParseError(str(exc), t[2], t[3]) from exc

    def matrix(self) -> RationalMatrix:
        self.expect("[")
        rows = [self.row()]
        while self.peek() == ";":
            self.next()
            rows.append(self.row())
        self.expect("]")
        self.expect("end")
        if any(len(r) != len(rows[0]) for r in rows):
            t = self.toks[self.i - 1]
            raise ParseError("rows have different lengths", t[2], t[3])
        if len(rows[0]) != len(rows):
            t = self.toks[self.i - 1]
            raise ParseError(
                f"matrix must be square, got {len(rows)}x{len(rows[0])}", t[2], t[3]
            )
        return RationalMatrix(rows)

    def row(self):
        entries = [self.rat()]
        while self.peek() == ",":
            self.next()
            entries.append(self.rat())
        return entries


def parse_rational_matrix(text: str) -> RationalMatrix:
    """Parse a bracketed matrix expression into a RationalMatrix."""
    return _Parser(text).matrix()


def _fmt_coeff(c: float) -> str:
    return repr(int(c)) if float(c).is_integer() and abs(c) < 1e16 else repr(float(c))


def poly_to_text(p: Polynomial) -> str:
    if p.is_zero:
        return "0"
    parts = []
    for d in range(p.degree, -1, -1):
        c = p.coeffs[d]
        if c == 0.0:
            continue
        mag = _fmt_coeff(abs(c))
        if d == 0:
            body = mag
        elif d == 1:
            body = f"{mag}*s" if abs(c) != 1.0 else "s"
        else:
            body = f"{mag}*s^{d}" if abs(c) != 1.0 else f"s^{d}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(f" + {body}" if c > 0 else f" - {body}")
    return "".join(parts)


def matrix_to_text(H: RationalMatrix, header: bool = True) -> str:
    """Render a model in the text grammar; parses back to an equal model."""
    rows = []
    for row in H.entries:
        cells = []
        for rf in row:
            if rf.den.degree == 0 and rf.den.coeffs[0] == 1.0:
                cells.append(f"({poly_to_text(rf.num)})")
            else:
                cells.append(f"({poly_to_text(rf.num)})/({poly_to_text(rf.den)})")
        rows.append(" , ".join(cells))
    body = "[ " + " ;\n  ".join(rows) + " ]"
    return f"dim {H.dim}\n{body}\n" if header else body


def matrix_to_json_dict(H: RationalMatrix) -> dict:
    return {
        "m": H.dim,
        "entries": [
            [{"num": list(map(float, rf.num.coeffs)), "den": list(map(float, rf.den.coeffs))}
             for rf in row]
            for row in H.entries
        ],
    }


def matrix_from_json_dict(doc: dict) -> RationalMatrix:
    m = int(doc["m"])
    entries = doc["entries"]
    if len(entries) != m or any(len(r) != m for r in entries):
        raise DimensionError(f"JSON model: entries are not {m}x{m}")
    rows = [
        [RationalFunction(Polynomial(cell["num"]), Polynomial(cell["den"])) for cell in row]
        for row in entries
    ]
    return RationalMatrix(rows)


def parse_model_text(text: str) -> RationalMatrix:
    """Parse a full model file body: optional ``dim <m>`` header, then matrix."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return matrix_from_json_dict(json.loads(text))
    m_declared = None
    mo = re.match(r"\s*dim\s+(\d+)\s*", text)
    if mo:
        m_declared = int(mo.group(1))
        text = text[: mo.start()] + " " * (mo.end() - mo.start()) + text[mo.end():]
    H = parse_rational_matrix(text)
    if m_declared is not None and H.dim != m_declared:
        raise DimensionError(f"header says dim {m_declared}, matrix is {H.dim}x{H.dim}")
    return H


def load_model(path) -> RationalMatrix:
    """Load a model from a .tf text file or a .json file."""
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    if p.suffix.lower() == ".json":
        return matrix_from_json_dict(json.loads(text))
    return parse_model_text(text)


def save_model(H: RationalMatrix, path) -> None:
    p = Path(path)
    if p.suffix.lower() == ".json":
        p.write_text(json.dumps(matrix_to_json_dict(H), indent=2, sort_keys=True) + "\n",
                     encoding="utf-8")
    else:
        p.write_text(matrix_to_text(H), encoding="utf-8")
