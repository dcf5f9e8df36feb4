"""Dense univariate polynomials over the rationals.

A polynomial is a tuple of :class:`~fractions.Fraction` coefficients in
ascending order of degree, ``(c0, c1, ..., cd)``, with no trailing zeros.
The zero polynomial is the empty tuple.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

Poly = tuple  # tuple[Fraction, ...]

ZERO: Poly = ()
ONE: Poly = (Fraction(1),)
X: Poly = (Fraction(0), Fraction(1))


def normalize(coeffs: Iterable) -> Poly:
    c = [Fraction(x) for x in coeffs]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def degree(p: Poly) -> int:
    """Degree of ``p``; the zero polynomial has degree -1."""
    return len(p) - 1


def add(p: Poly, q: Poly) -> Poly:
    n = max(len(p), len(q))
    return normalize(
        (p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)
    )


def neg(p: Poly) -> Poly:
    return tuple(-c for c in p)


def sub(p: Poly, q: Poly) -> Poly:
    return add(p, neg(q))


def mul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return ZERO
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return normalize(out)


def scale(p: Poly, c) -> Poly:
    return normalize(c * x for x in p)


def divmod_(p: Poly, d: Poly) -> tuple[Poly, Poly]:
    if not d:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(p)
    dd = len(d) - 1
    lead = d[-1]
    if len(r) - 1 < dd:
        return ZERO, normalize(r)
    quot = [Fraction(0)] * (len(r) - dd)
    for k in range(len(r) - 1 - dd, -1, -1):
        c = r[k + dd] / lead
        quot[k] = c
        if c:
            for j, b in enumerate(d):
                r[k + j] -= c * b
    return normalize(quot), normalize(r[:dd])


def exact_div(p: Poly, d: Poly) -> Poly:
    q, r = divmod_(p, d)
    if r:
        raise ArithmeticError("polynomial division is not exact")
    return q


def monic(p: Poly) -> Poly:
    if not p:
        return ZERO
    lead = p[-1]
    return tuple(c / lead for c in p)


def gcd(p: Poly, q: Poly) -> Poly:
    """Monic greatest common divisor (zero only if both inputs are zero)."""
    a, b = normalize(p), normalize(q)
    while b:
        a, b = b, divmod_(a, b)[1]
    return monic(a)


def divides(d: Poly, p: Poly) -> bool:
    return not divmod_(p, d)[1]


def from_roots(roots: Sequence) -> Poly:
    out = ONE
    for r in roots:
        out = mul(out, (-Fraction(r), Fraction(1)))
    return out


def evaluate(p: Poly, x):
    acc = 0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def to_string(p: Poly, var: str = "x") -> str:
    if not p:
        return "0"
    terms = []
    for k in range(len(p) - 1, -1, -1):
        c = p[k]
        if c == 0:
            continue
        if k == 0:
            mono = ""
        elif k == 1:
            mono = var
        else:
            mono = f"{var}^{k}"
        if mono and abs(c) == 1:
            body = mono
        elif mono:
            body = f"{abs(c)}*{mono}"
        else:
            body = str(abs(c))
        sign = "-" if c < 0 else "+"
        terms.append((sign, body))
    first_sign, first = terms[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in terms[1:]:
        out += f" {sign} {body}"
    return out
