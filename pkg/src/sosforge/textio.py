"""Human-readable text form of polynomials.

One matrix entry per line, terms as ``coeff*dvar*x1^a*x2^b`` in canonical
order. A whole matrix is written with a short header::

    # dpoly 2x1
    # ivars: x1 x2
    # dvars: c0 c1
    2*c0*x1^2 + 3
    -x2

Printing then parsing a compressed polynomial reproduces it exactly: floats
are written with the shortest repr that round-trips.
"""

from __future__ import annotations

from .dpvar import DPoly, add, compress, hcat, vcat
from .errors import ArgumentError
from .parse import parse_dpoly


def _number(x: float) -> str:
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _term(coef: float, dvar: str | None, mono: dict[str, int]) -> str:
    factors = ([dvar] if dvar else []) + [
        name if e == 1 else f"{name}^{e}" for name, e in mono.items()
    ]
    mag = abs(coef)
    if factors and mag == 1.0:
        return "*".join(factors)
    return "*".join([_number(mag)] + factors)


def format_entries(S: DPoly) -> list[str]:
    """One line per entry (row-major)."""
    m1, m2 = S.matdim
    by_entry: dict[tuple[int, int], list[str]] = {}
    for i, j, d, mono, coef in S.terms():
        parts = by_entry.setdefault((i, j), [])
        body = _term(coef, d, mono)
        if not parts:
            parts.append(("-" if coef < 0 else "") + body)
        else:
            parts.append((" - " if coef < 0 else " + ") + body)
    return ["".join(by_entry.get((i, j), ["0"])) for i in range(m1) for j in range(m2)]


def format_poly(S: DPoly) -> str:
    """Text of a scalar polynomial."""
    if not S.is_scalar():
        raise ArgumentError("format_poly expects a 1x1 polynomial; use dump_text")
    return format_entries(S)[0]


def dump_text(S: DPoly) -> str:
    m1, m2 = S.matdim
    lines = [
        f"# dpoly {m1}x{m2}",
        "# ivars: " + " ".join(S.ivars),
        "# dvars: " + " ".join(S.dvars),
    ]
    lines += format_entries(S)
    return "\n".join(lines) + "\n"


def load_text(text: str) -> DPoly:
    lines = text.splitlines()
    if len(lines) < 3 or not lines[0].startswith("# dpoly "):
        raise ArgumentError("missing '# dpoly MxN' header")
    try:
        m1, m2 = (int(s) for s in lines[0][len("# dpoly ") :].split("x"))
    except ValueError:
        raise ArgumentError(f"bad header {lines[0]!r}") from None
    if not lines[1].startswith("# ivars:") or not lines[2].startswith("# dvars:"):
        raise ArgumentError("missing ivars/dvars header lines")
    ivars = lines[1][len("# ivars:") :].split()
    dvars = lines[2][len("# dvars:") :].split()
    body = lines[3:]
    if len(body) != m1 * m2:
        raise ArgumentError(f"expected {m1 * m2} entry lines, found {len(body)}")
    out = DPoly.zero(m1, m2)
    if m1 and m2:
        rows = []
        for i in range(m1):
            row = None
            for j in range(m2):
                e = parse_dpoly(body[i * m2 + j], dvars)
                row = e if row is None else hcat(row, e)
            rows.append(row)
        out = rows[0]
        for r in rows[1:]:
            out = vcat(out, r)
    frame = DPoly.from_terms([], (m1, m2), ivars=ivars, dvars=dvars)
    return compress(add(out, frame))
