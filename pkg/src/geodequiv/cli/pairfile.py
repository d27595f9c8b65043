"""Line-oriented PairFile format.

    # comment
    dim 3
    coords x1 x2 x3
    declare sigma 1
    assume 1 + x1 > 0
    assume sigma(x1) != 0
    sample x1 = 1/2
    sample sigma(x1) = 2
    [g]
    1 1 1
    2 2 sigma(x1)
    [gbar]
    1 1 ...
    [A]
    1 2 x1
    [expect]
    LC zero
    stress nonzero

Header lines come first, in any order.  Metric blocks list entries with
i <= j (1-based); missing entries are zero.  ``[A]`` lists full (1,1)
entries A^i_j.  ``[expect]`` pairs a check name with zero, nonzero or unknown.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

import sympy as sp

from ..chart import Chart, Metric, TensorField
from ..expr import ParseError, VerdictKind, is_jet, to_text
from ..projective import MetricPair, reconstruct_metric
from ..suite import CHECKS, PairContext

HEADERS = ("dim", "coords", "declare", "assume", "sample")
BLOCKS = ("g", "gbar", "A", "expect")
_NAME = re.compile(r"[A-Za-z][A-Za-z0-9_]*$")
_RATIONAL = re.compile(r"-?\d+(/\d+)?$")


class PairFileError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1, source: str = "<input>"):
        self.message, self.line, self.column, self.source = message, line, column, source
        super().__init__(f"{source}:{line}:{column}: {message}")


@dataclass
class PairFile:
    dim: int
    coords: tuple[str, ...]
    functions: dict[str, int] = field(default_factory=dict)
    positive: list[str] = field(default_factory=list)
    nonzero: list[str] = field(default_factory=list)
    sample: dict[str, Fraction] = field(default_factory=dict)
    g: dict[tuple[int, int], str] = field(default_factory=dict)
    gbar: dict[tuple[int, int], str] | None = None
    A: dict[tuple[int, int], str] | None = None
    expect: dict[str, VerdictKind] = field(default_factory=dict)

    # -- model objects ------------------------------------------------------

    def chart(self) -> Chart:
        return Chart.make(self.coords, self.functions, self.positive, self.nonzero, self.sample)

    def _matrix(self, chart: Chart, entries, symmetric: bool) -> sp.Matrix:
        m = sp.zeros(self.dim)
        for (i, j), text in entries.items():
            m[i, j] = chart.parse(text)
            if symmetric:
                m[j, i] = m[i, j]
        return m

    def metric(self, chart: Chart | None = None) -> Metric:
        chart = chart or self.chart()
        return Metric(chart, self._matrix(chart, self.g, True))

    def context(self) -> PairContext:
        """The pair (gbar given, or reconstructed from A) with the optional A."""
        chart = self.chart()
        g = self.metric(chart)
        A = None
        if self.A is not None:
            M = self._matrix(chart, self.A, False)
            A = TensorField.build(chart, "ul", lambda i, j: M[i, j])
        if self.gbar is not None:
            gbar = Metric(chart, self._matrix(chart, self.gbar, True))
        elif A is not None:
            gbar = reconstruct_metric(g, A)
        else:
            raise ValueError("file has neither a [gbar] nor an [A] block")
        return PairContext(MetricPair(g, gbar), A)

    def expectations(self) -> dict[str, VerdictKind]:
        return dict(self.expect) if self.expect else {"LC": VerdictKind.ZERO}


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def parse_pairfile(text: str, source: str = "<input>") -> PairFile:
    return _Reader(text, source).read()


class _Reader:
    def __init__(self, text: str, source: str):
        self.lines = text.splitlines()
        self.source = source

    def fail(self, msg, line, column=1):
        raise PairFileError(msg, line, column, self.source)

    def read(self) -> PairFile:
        header: dict = {"declare": {}, "positive": [], "nonzero": [], "sample": {}}
        raw_assume, raw_sample = [], []
        blocks: dict[str, list] = {}
        current = None
        for lineno, raw in enumerate(self.lines, 1):
            body = raw.split("#", 1)[0]
            stripped = body.strip()
            if not stripped:
                continue
            col = len(body) - len(body.lstrip()) + 1
            m = re.fullmatch(r"\[(\w+)\]", stripped)
            if m:
                name = m.group(1)
                if name not in BLOCKS:
                    self.fail(f"unknown block [{name}]", lineno, col)
                if name in blocks:
                    self.fail(f"duplicate block [{name}]", lineno, col)
                blocks[name] = []
                current = name
                continue
            if current is not None:
                blocks[current].append((lineno, col, body))
                continue
            key, _, rest = stripped.partition(" ")
            rest_col = col + len(key) + 1 + (len(rest) - len(rest.lstrip()))
            rest = rest.strip()
            if key not in HEADERS:
                self.fail(f"unknown header {key!r}; expected one of {', '.join(HEADERS)}", lineno, col)
            if key == "dim":
                if "dim" in header:
                    self.fail("duplicate dim", lineno, col)
                if not rest.isdigit() or int(rest) < 1:
                    self.fail("dim must be a positive integer", lineno, rest_col)
                header["dim"] = int(rest)
            elif key == "coords":
                if "coords" in header:
                    self.fail("duplicate coords", lineno, col)
                names = rest.split()
                for nm in names:
                    if not _NAME.match(nm):
                        self.fail(f"invalid coordinate name {nm!r}", lineno, rest_col)
                header["coords"] = tuple(names)
                coords_line = lineno
            elif key == "declare":
                parts = rest.split()
                if len(parts) != 2 or not _NAME.match(parts[0]) or not parts[1].isdigit():
                    self.fail("declare needs: declare <name> <arity>", lineno, rest_col)
                if parts[0] in header["declare"]:
                    self.fail(f"duplicate declaration of {parts[0]!r}", lineno, rest_col)
                header["declare"][parts[0]] = int(parts[1])
            elif key == "assume":
                raw_assume.append((lineno, rest_col, rest))
            else:
                raw_sample.append((lineno, rest_col, rest))
        if "dim" not in header:
            self.fail("missing dim header", 1)
        if "coords" not in header:
            self.fail("missing coords header", 1)
        dim, coords = header["dim"], header["coords"]
        if len(coords) != dim:
            self.fail(f"dim is {dim} but {len(coords)} coordinates are listed", coords_line)
        pf = PairFile(dim, coords, header["declare"])
        try:
            chart = Chart(coords, pf.functions)
        except ValueError as exc:
            self.fail(str(exc), 1)
        for lineno, col, text in raw_assume:
            m = re.fullmatch(r"(.*?)\s*(>|!=)\s*0\s*", text)
            if not m:
                self.fail("assume needs the form '<expr> > 0' or '<expr> != 0'", lineno, col)
            self.expression(chart, m.group(1), lineno, col)
            (pf.positive if m.group(2) == ">" else pf.nonzero).append(m.group(1).strip())
        for lineno, col, text in raw_sample:
            lhs, eq, rhs = text.partition("=")
            if not eq:
                self.fail("sample needs the form '<name> = <rational>'", lineno, col)
            rhs = rhs.strip()
            if not _RATIONAL.match(rhs):
                self.fail(f"sample value {rhs!r} is not a rational", lineno, col + text.index("=") + 1)
            e = self.expression(chart, lhs.strip(), lineno, col)
            if not (e.is_Symbol or is_jet(e)):
                self.fail("sample key must be a coordinate, constant or function value", lineno, col)
            pf.sample[to_text(e)] = Fraction(rhs)
        for name, rows in blocks.items():
            if name == "expect":
                pf.expect = self.expectations(rows)
            else:
                entries = self.entries(chart, rows, symmetric=name != "A")
                setattr(pf, name, entries)
        if "g" not in blocks:
            self.fail("missing [g] block", len(self.lines) or 1)
        try:
            pf.chart()
        except ValueError as exc:
            self.fail(f"invalid assumptions or sample point: {exc}", 1)
        return pf

    def expression(self, chart, text, lineno, col):
        try:
            return chart.parse(text)
        except ParseError as exc:
            self.fail(exc.message, lineno + exc.line - 1, (col if exc.line == 1 else 1) + exc.column - 1)

    def entries(self, chart, rows, symmetric):
        out = {}
        for lineno, col, body in rows:
            m = re.match(r"\s*(\d+)\s+(\d+)\s+(.*\S)\s*$", body)
            if not m:
                self.fail("entry needs the form '<i> <j> <expression>'", lineno, col)
            i, j = int(m.group(1)), int(m.group(2))
            n = chart.dim
            if not (1 <= i <= n and 1 <= j <= n):
                self.fail(f"index ({i}, {j}) out of range 1..{n}", lineno, col)
            if symmetric and i > j:
                self.fail(f"metric entries are given for i <= j only; got ({i}, {j})", lineno, col)
            if (i - 1, j - 1) in out:
                self.fail(f"duplicate entry ({i}, {j})", lineno, col)
            self.expression(chart, m.group(3), lineno, m.start(3) + 1)
            out[(i - 1, j - 1)] = m.group(3)
        return out

    def expectations(self, rows):
        out = {}
        for lineno, col, body in rows:
            parts = body.split()
            if len(parts) != 2:
                self.fail("expect lines read '<check> <zero|nonzero|unknown>'", lineno, col)
            name, kind = parts
            if name not in CHECKS:
                self.fail(f"unknown check {name!r}", lineno, col)
            try:
                out[name] = VerdictKind(kind.lower())
            except ValueError:
                self.fail(f"unknown verdict {kind!r}", lineno, col + body.strip().index(kind))
        return out


# ---------------------------------------------------------------------------
# writing
# ---------------------------------------------------------------------------


def _rational(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def serialize(pf: PairFile) -> str:
    out = [f"dim {pf.dim}", "coords " + " ".join(pf.coords)]
    out += [f"declare {k} {v}" for k, v in pf.functions.items()]
    out += [f"assume {e} > 0" for e in pf.positive]
    out += [f"assume {e} != 0" for e in pf.nonzero]
    out += [f"sample {k} = {_rational(v)}" for k, v in pf.sample.items()]

    def block(name, entries):
        out.append(f"[{name}]")
        for (i, j) in sorted(entries):
            out.append(f"{i + 1} {j + 1} {entries[(i, j)]}")

    block("g", pf.g)
    if pf.gbar is not None:
        block("gbar", pf.gbar)
    if pf.A is not None:
        block("A", pf.A)
    if pf.expect:
        out.append("[expect]")
        out += [f"{k} {v.value}" for k, v in pf.expect.items()]
    return "\n".join(out) + "\n"


def _entries(m, symmetric: bool) -> dict[tuple[int, int], str]:
    n = m.shape[0]
    return {
        (i, j): to_text(m[i, j])
        for i in range(n)
        for j in range(n)
        if (j >= i or not symmetric) and m[i, j] != 0
    }


def from_pair(
    pair: MetricPair,
    endomorphism: TensorField | None = None,
    expect: dict[str, VerdictKind] | None = None,
    include_gbar: bool = True,
) -> PairFile:
    """Export a pair; with ``include_gbar=False`` only g and A are written."""
    ch = pair.chart
    a = ch.assumptions
    pf = PairFile(
        ch.dim,
        tuple(ch.coords),
        dict(ch.functions),
        [to_text(e) for e in a.positive],
        [to_text(e) for e in a.nonzero],
        {to_text(k): Fraction(int(v.p), int(v.q)) for k, v in a.sample.items()},
        _entries(pair.g.matrix, True),
        _entries(pair.gbar.matrix, True) if include_gbar or endomorphism is None else None,
        _entries(endomorphism.to_matrix(), False) if endomorphism is not None else None,
        dict(expect or {}),
    )
    return pf


__all__ = ["PairFile", "PairFileError", "from_pair", "parse_pairfile", "serialize"]
