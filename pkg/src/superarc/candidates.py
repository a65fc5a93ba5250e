"""Parse, run and classify the sequence generators returned by a model.

Answers are read in a small closed language instead of being executed as
real code. Grammar (case-insensitive keywords, ``#`` starts a comment)::

    answer     := literal | indicator | defs
    literal    := ["print"] "(" ints ")" | "[" ints "]" | ints
                | NAME "=" QUOTED ";" "print" "(" NAME ")"
    indicator  := "ones at" "{" ints "}"
    defs       := def ((";" | "," | NEWLINE) def)*
    def        := NAME "(" (INT | "n") ")" "=" expr
    expr       := term (("+" | "-") term)*
    term       := unary (("*" | "/" | "÷" | "%" | "mod") unary)*
    unary      := "-" unary | power
    power      := atom (("^" | "**") unary)?
    atom       := INT | "n" | NAME "(" expr ")" | "(" expr ")"
                | "[" "n" "in" "{" ints "}" "]"

A single ``NAME(n) = expr`` is a closed form; defs that reference
``NAME(n - k)`` form a recurrence seeded by the ``NAME(INT) = ...`` base
cases. ``a(n) = [n in {..}]`` is read as an ordinal indicator. Terms are
produced for ``n = 1..count``; ``/`` is floor division.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .metrics import deflate_length

__all__ = [
    "Classification",
    "EvaluationRecord",
    "ExecutionError",
    "MiniProgram",
    "ParseError",
    "classify",
    "execute",
    "extract_integers",
    "is_refusal",
    "normalize",
    "no_compression_percent",
    "parse_candidate",
    "render_variants",
]

MAX_RECURRENCE_DEPTH = 8
DEFAULT_STEP_BUDGET = 100_000
_MAX_EXPONENT = 4096

LITERAL, ORDINAL, CLOSED, RECURRENCE = "literal-list", "ordinal-indicator", "closed-form", "recurrence"
PRINT, ORDINAL_KIND, NON_BOTH = "print", "ordinal", "non-both"


class ParseError(ValueError):
    pass


class ExecutionError(RuntimeError):
    pass


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class Ref:
    """Reference to a term: ``a(n - k)`` has ``offset`` k, ``a(5)`` has ``index`` 5."""

    offset: int | None = None
    index: int | None = None


@dataclass(frozen=True)
class Member:
    indices: frozenset


@dataclass(frozen=True)
class MiniProgram:
    form: str
    source: str
    values: tuple[int, ...] = ()
    indices: frozenset = frozenset()
    body: object = None
    base_cases: tuple[tuple[int, object], ...] = ()
    depth: int = 0

    @property
    def length_chars(self) -> int:
        return len(self.source)


# --- parsing ---------------------------------------------------------------

_INT_LIST = r"\s*-?\d+(?:\s*[,\s]\s*-?\d+)*\s*,?\s*"
_LITERAL_RES = [
    re.compile(rf"^(?:print\s*)?\(\s*\[?({_INT_LIST})\]?\s*\)\s*;?$", re.I),
    re.compile(rf"^(?:print\s*)?\(\s*(['\"])({_INT_LIST})\1\s*\)\s*;?$", re.I),
    re.compile(rf"^\[({_INT_LIST})\]$"),
    re.compile(rf"^({_INT_LIST})$"),
]
_VAR_PRINT_RE = re.compile(
    rf"^(\w+)\s*=\s*(['\"\[])({_INT_LIST})['\"\]]\s*[;\n]\s*print\s*\(\s*\1\s*\)\s*;?$", re.I
)
_INDICATOR_RE = re.compile(r"^ones\s+at\s*\{([\d\s,]*)\}$", re.I)
_REFUSAL_RE = re.compile(r"^\W*not\s+found\W*$", re.I)
_TOKEN_RE = re.compile(r"\s*(?:(\d+)|(\*\*|[A-Za-z_]\w*|[-+*/%^()\[\]{}=,÷]))")


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in re.findall(r"-?\d+", text))


def is_refusal(text: str) -> bool:
    return bool(_REFUSAL_RE.match(text.strip()))


def parse_candidate(text: str) -> MiniProgram:
    """Parse one answer; raises :class:`ParseError` when it is not in the grammar."""
    src = text.strip()
    if not src:
        raise ParseError("empty answer")
    stripped = re.sub(r"#[^\n]*", "", src).strip()
    for rx in _LITERAL_RES:
        m = rx.match(stripped)
        if m:
            return MiniProgram(LITERAL, src, values=_ints(m.group(m.lastindex)))
    m = _VAR_PRINT_RE.match(stripped)
    if m:
        return MiniProgram(LITERAL, src, values=_ints(m.group(3)))
    m = _INDICATOR_RE.match(stripped)
    if m:
        return MiniProgram(ORDINAL, src, indices=frozenset(_ints(m.group(1))))
    return _parse_defs(src, stripped)


def _parse_defs(src: str, text: str) -> MiniProgram:
    statements = [s for s in re.split(r"[;\n]|,(?=\s*\w+\s*\(\s*(?:\d+|n)\s*\)\s*=)", text) if s.strip()]
    name = None
    general = None
    bases: dict[int, object] = {}
    for stmt in statements:
        parser = _Parser(stmt)
        fname, arg = parser.head()
        if name is None:
            name = fname
        elif fname != name:
            raise ParseError(f"mixed sequence names {name!r} and {fname!r}")
        parser.name = name
        body = parser.expr()
        parser.expect_end()
        if arg is None:
            if general is not None:
                raise ParseError("two general definitions")
            general = body
        else:
            if arg in bases:
                raise ParseError(f"base case {name}({arg}) defined twice")
            bases[arg] = body
    if general is None:
        raise ParseError("no general term a(n) = ...")
    depth = _max_offset(general)
    if depth > MAX_RECURRENCE_DEPTH:
        raise ParseError(f"recurrence depth {depth} exceeds {MAX_RECURRENCE_DEPTH}")
    if depth == 0 and not bases and isinstance(general, Member):
        return MiniProgram(ORDINAL, src, indices=general.indices, body=general)
    form = RECURRENCE if depth or bases else CLOSED
    return MiniProgram(form, src, body=general, base_cases=tuple(sorted(bases.items())), depth=depth)


def _max_offset(node) -> int:
    if isinstance(node, Ref):
        return node.offset or 0
    if isinstance(node, BinOp):
        return max(_max_offset(node.left), _max_offset(node.right))
    if isinstance(node, Neg):
        return _max_offset(node.operand)
    return 0


class _Parser:
    def __init__(self, text: str):
        self.tokens = self._tokenize(text)
        self.pos = 0
        self.name = None

    @staticmethod
    def _tokenize(text):
        out = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m or m.end() == pos:
                raise ParseError(f"unexpected character {text[pos]!r}")
            out.append(int(m.group(1)) if m.group(1) else m.group(2).lower() if m.group(2).isalpha() else m.group(2))
            pos = m.end()
        return out

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise ParseError(f"expected {expected!r}, got {tok!r}")
        self.pos += 1
        return tok

    def expect_end(self):
        if self.peek() is not None:
            raise ParseError(f"trailing token {self.peek()!r}")

    def head(self):
        name = self.take()
        if not isinstance(name, str) or not name.isidentifier() or name in ("n", "in", "mod"):
            raise ParseError(f"expected a sequence name, got {name!r}")
        self.take("(")
        arg = self.take()
        if arg == "n":
            arg = None
        elif not isinstance(arg, int):
            raise ParseError(f"bad argument {arg!r}")
        self.take(")")
        self.take("=")
        return name, arg

    def expr(self):
        node = self.term()
        while self.peek() in ("+", "-"):
            node = BinOp(self.take(), node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek() in ("*", "/", "÷", "%", "mod"):
            op = self.take()
            node = BinOp({"÷": "/", "mod": "%"}.get(op, op), node, self.unary())
        return node

    def unary(self):
        if self.peek() == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek() in ("^", "**"):
            self.take()
            node = BinOp("^", node, self.unary())
        return node

    def atom(self):
        tok = self.take()
        if isinstance(tok, int):
            return Num(tok)
        if tok == "n":
            return Var()
        if tok == "(":
            node = self.expr()
            self.take(")")
            return node
        if tok == "[":
            self.take("n")
            self.take("in")
            self.take("{")
            idx = []
            while self.peek() != "}":
                value = self.take()
                if not isinstance(value, int):
                    raise ParseError(f"index sets hold integers, got {value!r}")
                idx.append(value)
                if self.peek() == ",":
                    self.take()
            self.take("}")
            self.take("]")
            return Member(frozenset(idx))
        if isinstance(tok, str) and tok == self.name:
            self.take("(")
            return self._ref()
        raise ParseError(f"unexpected token {tok!r}")

    def _ref(self):
        tok = self.take()
        if isinstance(tok, int):
            self.take(")")
            return Ref(index=tok)
        if tok != "n":
            raise ParseError("term references must be a(n - k) or a(INT)")
        if self.peek() == ")":
            raise ParseError("a(n) may not reference itself")
        self.take("-")
        k = self.take()
        if not isinstance(k, int) or k < 1:
            raise ParseError("offset must be a positive integer")
        self.take(")")
        return Ref(offset=k)


# --- execution -------------------------------------------------------------

class _Budget:
    def __init__(self, steps):
        self.left = steps

    def charge(self):
        self.left -= 1
        if self.left < 0:
            raise ExecutionError("step budget exceeded")


def _eval(node, n, terms, budget):
    budget.charge()
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return n
    if isinstance(node, Neg):
        return -_eval(node.operand, n, terms, budget)
    if isinstance(node, Member):
        return int(n in node.indices)
    if isinstance(node, Ref):
        i = n - node.offset if node.offset is not None else node.index
        if i not in terms:
            raise ExecutionError(f"term a({i}) undefined (missing base case)")
        return terms[i]
    a = _eval(node.left, n, terms, budget)
    b = _eval(node.right, n, terms, budget)
    op = node.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op in ("/", "%"):
        if b == 0:
            raise ExecutionError("division by zero")
        return a // b if op == "/" else a % b
    if op == "^":
        if b < 0:
            raise ExecutionError("negative exponent")
        if b > _MAX_EXPONENT and abs(a) > 1:
            raise ExecutionError("exponent too large")
        return a ** b
    raise ExecutionError(f"unknown operator {op}")


def execute(p: MiniProgram, count: int, budget: int = DEFAULT_STEP_BUDGET) -> list[int]:
    """Terms ``1..count`` of ``p``; raises :class:`ExecutionError` on failure.

    ``budget`` is the number of AST node evaluations allowed per term.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if p.form == LITERAL:
        return list(p.values[:count])
    if p.form == ORDINAL:
        return [int(i in p.indices) for i in range(1, count + 1)]
    terms: dict[int, int] = {}
    bases = dict(p.base_cases)
    out = []
    for n in range(1, count + 1):
        body = bases.get(n, p.body)
        terms[n] = _eval(body, n, terms, _Budget(budget))
        out.append(terms[n])
    return out


# --- classification ----------------------------------------------------------

@dataclass(frozen=True)
class Classification:
    correct: bool
    kind: str
    detail: str

    @property
    def result_class(self) -> int:
        """Index into the result vector: 0 non-both, 1 ordinal, 2 print, 3 incorrect."""
        if not self.correct:
            return 3
        return {NON_BOTH: 0, ORDINAL_KIND: 1, PRINT: 2}[self.kind]


SEPARATORS = (", ", ",", " ", "")


def render_variants(values) -> list[str]:
    """The target rendered with every canonical separator, longest first."""
    return sorted({sep.join(map(str, values)) for sep in SEPARATORS}, key=len, reverse=True)


def classify(p: MiniProgram | None, output, target) -> Classification:
    """Correctness by exact match; kind by precedence print > ordinal > non-both."""
    values = list(target.values)
    correct = output is not None and list(output) == values
    if p is None:
        return Classification(False, NON_BOTH, "no program")
    if p.form == LITERAL:
        return Classification(correct, PRINT, "literal list")
    hit = next((r for r in render_variants(values) if r and r in p.source), None)
    if hit is not None:
        return Classification(correct, PRINT, f"source embeds target as {hit!r}")
    if p.form == ORDINAL and target.alphabet == "binary":
        ones = frozenset(i + 1 for i, v in enumerate(values) if v == 1)
        if p.indices == ones:
            return Classification(correct, ORDINAL_KIND, "indicator over the positions of 1s")
    return Classification(correct, NON_BOTH, p.form)


def normalize(answer_text: str, target) -> tuple[str, int]:
    """Strip every full rendering of ``target`` from the text; returns (text, length)."""
    values = target.values if hasattr(target, "values") else target
    text = answer_text
    variants = [r for r in render_variants(values) if r]
    changed = True
    while changed:
        changed = False
        for r in variants:
            if r in text:
                text = text.replace(r, "")
                changed = True
    return text, len(text)


def extract_integers(text: str) -> list[int]:
    return [int(t) for t in re.findall(r"\d+", text)]


def _lcs(a, b) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def no_compression_percent(answer_text: str, target) -> float:
    values = list(target.values if hasattr(target, "values") else target)
    if not values:
        raise ValueError("empty target")
    return 100.0 * _lcs(extract_integers(answer_text), values) / len(values)


@dataclass
class EvaluationRecord:
    """One (correctness, answer complexity, auxiliary metrics) row."""

    item_id: str
    model_id: str
    c: int
    complexity_of_answer: float
    length_chars: int
    normalized_length: int
    deflate_length: int
    no_compression_percent: float
    kind: str
    temperature: float | None = None
    target_complexity: float | None = None
    refusal: bool = False
    unanswered: bool = False
    parsed_ok: bool = True
    raw_text: str = ""
    output: list | None = None
    detail: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def result_class(self) -> int:
        if not self.c:
            return 3
        return {NON_BOTH: 0, ORDINAL_KIND: 1, PRINT: 2}[self.kind]

    @property
    def aux(self) -> tuple[int, int, int, float]:
        return (self.length_chars, self.normalized_length, self.deflate_length, self.no_compression_percent)

    def to_candidate_json(self) -> dict:
        d = {
            "model_id": self.model_id,
            "item_id": self.item_id,
            "temperature": self.temperature,
            "raw_text": self.raw_text,
            "parsed_ok": self.parsed_ok,
            "classification": {
                "correct": bool(self.c),
                "kind": self.kind,
                "detail": self.detail,
                "refusal": self.refusal,
                "unanswered": self.unanswered,
            },
            "complexity_of_answer": self.complexity_of_answer,
            "target_complexity": self.target_complexity,
            "aux": {
                "length_chars": self.length_chars,
                "normalized_length": self.normalized_length,
                "deflate_length": self.deflate_length,
                "no_compression_percent": self.no_compression_percent,
            },
        }
        if self.output is not None:
            d["output"] = list(self.output)
        if self.extra:
            d["extra"] = dict(sorted(self.extra.items()))
        return d


def evaluate_answer(raw_text, item, model_id, complexity, temperature=None, budget=DEFAULT_STEP_BUDGET,
                    unanswered=False) -> EvaluationRecord:
    """Parse, run and classify one answer; failures become Incorrect records.

    ``complexity`` maps text to bits (the configured metric M).
    """
    values = list(item.values)
    text = raw_text or ""
    normalized, norm_len = normalize(text, values)
    common = dict(
        item_id=item.id,
        model_id=model_id,
        temperature=temperature,
        length_chars=len(text),
        normalized_length=norm_len,
        deflate_length=deflate_length(text),
        no_compression_percent=no_compression_percent(text, values) if values else 0.0,
        raw_text=text,
        complexity_of_answer=complexity(text) if text else 0.0,
    )
    if unanswered:
        return EvaluationRecord(c=0, kind=NON_BOTH, unanswered=True, parsed_ok=False, detail="unanswered", **common)
    if is_refusal(text):
        return EvaluationRecord(c=0, kind=NON_BOTH, refusal=True, parsed_ok=False, detail="refusal", **common)
    try:
        prog = parse_candidate(text)
    except ParseError as exc:
        return EvaluationRecord(c=0, kind=NON_BOTH, parsed_ok=False, detail=f"unparseable: {exc}", **common)
    try:
        output = execute(prog, len(values), budget)
    except ExecutionError as exc:
        cls = classify(prog, None, item)
        return EvaluationRecord(
            c=0, kind=cls.kind, detail=f"execution failed: {exc}", extra={"form": prog.form}, **common
        )
    cls = classify(prog, output, item)
    return EvaluationRecord(
        c=int(cls.correct), kind=cls.kind, output=output, detail=cls.detail, extra={"form": prog.form}, **common
    )
