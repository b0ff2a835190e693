"""Plain-text model files.

Layout (blank lines and ``#`` comments are ignored)::

    GMAP 1
    VARS 3
    2 2 2
    FACTORS 2
    2 0 1                 # scope size, then scope ids
    0.5 1 -inf 2          # table, row-major over the scope
    2 1 2
    0 0 1 1
    STATS 1               # optional: P
    ADD                   # P accumulation operators
    3                     # number of statistic factors
    1 0                   # scope line
    0 1                   # P integers per joint scope state, row-major
    ...
    H                     # optional, key/value lines until end of file
    mode slack
    eta identity

Each factor occupies exactly two lines, so a table of the wrong length is
reported against the factor it belongs to.
"""

from __future__ import annotations

import math

from .errors import GmapError, ParseError
from .model import Accumulation, Model, build_model

HEADER = "GMAP 1"


def _lines(text):
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield n, line.split()


def _int(tok, n, what):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected integer for {what}, got {tok!r}", n) from None


def _float(tok, n, what):
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"expected number for {what}, got {tok!r}", n) from None
    if math.isnan(v):
        raise ParseError(f"NaN in {what}", n)
    return v


def parse_model_text(text: str):
    """Parse a model file body. Returns ``(model, h_block)``.

    ``h_block`` is a dict of key -> list of string arguments (empty if absent).
    """
    lines = list(_lines(text))
    pos = 0

    def take(what):
        nonlocal pos
        if pos >= len(lines):
            raise ParseError(f"unexpected end of file, expected {what}")
        item = lines[pos]
        pos += 1
        return item

    n, toks = take("header")
    if toks != ["GMAP", "1"]:
        raise ParseError(f"expected header {HEADER!r}", n)

    n, toks = take("VARS")
    if toks[0] != "VARS" or len(toks) != 2:
        raise ParseError("expected 'VARS <M>'", n)
    m = _int(toks[1], n, "variable count")
    n, toks = take("cardinalities")
    if len(toks) != m:
        raise ParseError(f"expected {m} cardinalities, got {len(toks)}", n)
    cards = [_int(t, n, "cardinality") for t in toks]
    if any(c < 1 for c in cards):
        raise ParseError("cardinalities must be positive", n)

    n, toks = take("FACTORS")
    if toks[0] != "FACTORS" or len(toks) != 2:
        raise ParseError("expected 'FACTORS <count>'", n)
    energy = []
    for t in range(_int(toks[1], n, "factor count")):
        scope = _scope(take(f"scope of factor {t}"), m, f"factor {t}")
        size = math.prod(cards[v] for v in scope)
        n, toks = take(f"table of factor {t}")
        if len(toks) != size:
            raise ParseError(f"factor {t}: table has {len(toks)} values, scope needs {size}", n)
        vals = [_float(x, n, f"factor {t}") for x in toks]
        if any(v == math.inf for v in vals):
            raise ParseError(f"factor {t}: +inf is not allowed", n)
        energy.append((scope, vals))

    stats = []
    acc = None
    h_block = {}
    while pos < len(lines):
        n, toks = take("section")
        if toks[0] == "STATS" and acc is None:
            if len(toks) != 2:
                raise ParseError("expected 'STATS <P>'", n)
            p = _int(toks[1], n, "P")
            n, toks = take("accumulation operators")
            if len(toks) != p:
                raise ParseError(f"expected {p} accumulation operators", n)
            try:
                acc = [Accumulation(t.upper()) for t in toks]
            except ValueError:
                raise ParseError(f"accumulation must be ADD or MAX, got {toks}", n) from None
            n, toks = take("statistic factor count")
            if len(toks) != 1:
                raise ParseError("expected statistic factor count", n)
            for t in range(_int(toks[0], n, "statistic factor count")):
                scope = _scope(take(f"scope of statistic factor {t}"), m, f"statistic factor {t}")
                size = math.prod(cards[v] for v in scope)
                n, toks = take(f"table of statistic factor {t}")
                if len(toks) != size * p:
                    raise ParseError(
                        f"statistic factor {t}: table has {len(toks)} values, needs {size} x {p}", n
                    )
                vals = [_int(x, n, f"statistic factor {t}") for x in toks]
                stats.append((scope, [vals[k * p:(k + 1) * p] for k in range(size)]))
        elif toks[0] == "H" and len(toks) == 1:
            while pos < len(lines):
                n, toks = take("H entry")
                if toks[0] in h_block:
                    raise ParseError(f"duplicate H key {toks[0]!r}", n)
                h_block[toks[0]] = toks[1:]
        else:
            raise ParseError(f"unexpected content {' '.join(toks)!r}", n)

    try:
        model = build_model(cards, energy, stats, acc)
    except (GmapError, ValueError) as exc:
        raise ParseError(str(exc)) from exc
    return model, h_block


def _scope(item, m, what):
    n, toks = item
    k = _int(toks[0], n, f"{what} scope size")
    if len(toks) != k + 1:
        raise ParseError(f"{what}: scope line declares {k} ids, found {len(toks) - 1}", n)
    scope = [_int(x, n, f"{what} scope") for x in toks[1:]]
    for v in scope:
        if not 0 <= v < m:
            raise ParseError(f"{what}: variable id {v} outside 0..{m - 1}", n)
    if len(set(scope)) != len(scope):
        raise ParseError(f"{what}: repeated variable in scope", n)
    return scope


def parse_model(path):
    with open(path, encoding="utf-8") as fh:
        return parse_model_text(fh.read())


def _num(v: float) -> str:
    if v == -math.inf:
        return "-inf"
    return repr(float(v))


def write_model_text(model: Model, h_block: dict | None = None) -> str:
    out = [HEADER, f"VARS {model.M}", " ".join(map(str, model.cardinalities))]
    out.append(f"FACTORS {len(model.energy_factors)}")
    for fac in model.energy_factors:
        out.append(" ".join(map(str, (len(fac.scope), *fac.scope))))
        out.append(" ".join(_num(v) for v in fac.values))
    if model.P or model.statistic_factors:
        out.append(f"STATS {model.P}")
        out.append(" ".join(a.value for a in model.accumulation))
        out.append(str(len(model.statistic_factors)))
        for fac in model.statistic_factors:
            out.append(" ".join(map(str, (len(fac.scope), *fac.scope))))
            out.append(" ".join(str(int(x)) for x in fac.values.reshape(-1)))
    if h_block:
        out.append("H")
        for k, args in h_block.items():
            out.append(" ".join([k, *map(str, args)]))
    return "\n".join(out) + "\n"


def write_model(model: Model, path, h_block=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(write_model_text(model, h_block))
