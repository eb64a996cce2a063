"""Text format for credal networks.

A document is a sequence of statements; blocks may span lines and entries
inside a block are separated by ``;`` or newlines (a trailing comma
continues a list onto the next line).  ``#`` starts a comment.

    format 1
    variable x { values: a, b }
    variable y { values: lo, hi }
    parents y: x
    cpt y { a: 0.1, 0.9; b: 0.8, 0.2 }
    credal x { class: eps-contaminated; base: 0.75, 0.25; eps: 0.2 }
    utility gain { on: x; values: 10, 0 }

Keys of ``cpt`` rows name one parent configuration, either a bare label
(single parent) or ``(l1, l2, ...)`` in parent order.  Entries of a
``credal`` block may carry the same configuration prefix (``b v1: ...``)
to apply to one configuration only; unprefixed entries apply to all.
Files ending in ``.json`` hold the same document model as JSON.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .credal import (
    CredalSpec,
    LinearConstraintSet,
    Polytope,
    constraints_from_density_bounds,
    constraints_from_density_ratio,
    constraints_from_total_variation,
    vertices_from_belief_function,
    vertices_from_eps_contamination,
)
from .errors import CredalNetError, InvalidNetworkError
from .network import DiscreteNetwork, Factor, Variable, validate_network
from .type1 import UtilityFunction

FORMAT_VERSION = "1"
CLASS_TAGS = ("vertices", "eps-contaminated", "belief-function", "density-bounded",
              "total-variation", "density-ratio", "constraints")
#: CPT columns whose sum is off by less than this are renormalized.
RENORMALIZE_TOL = 1e-5


class InputError(CredalNetError, ValueError):
    """Rejected input, with the position it refers to."""

    def __init__(self, reason: str, line: int = 0, col: int = 0, where: str = ""):
        self.reason = reason
        self.line = line
        self.col = col
        self.where = where or (f"line {line}, column {col}" if line else "document")
        super().__init__(f"{self.where}: {reason}")


class ParseError(InputError):
    """Malformed syntax."""


class SemanticError(InputError):
    """Well-formed text describing an invalid model."""


# ---------------------------------------------------------------------------
# Document model
# ---------------------------------------------------------------------------


@dataclass
class VariableDecl:
    name: str
    values: tuple[str, ...]
    line: int = field(default=0, compare=False)


@dataclass
class ParentsDecl:
    name: str
    parents: tuple[str, ...]
    line: int = field(default=0, compare=False)


@dataclass
class CptRow:
    config: tuple[str, ...] | None
    probs: tuple[float, ...]
    line: int = field(default=0, compare=False)


@dataclass
class CptBlock:
    name: str
    rows: list[CptRow]
    line: int = field(default=0, compare=False)


@dataclass
class CredalEntry:
    key: str
    values: tuple
    config: tuple[str, ...] | None = None
    subset: tuple[str, ...] | None = None
    relation: str | None = None
    rhs: float | None = None
    line: int = field(default=0, compare=False)


@dataclass
class CredalBlock:
    name: str
    tag: str
    entries: list[CredalEntry]
    line: int = field(default=0, compare=False)


@dataclass
class UtilityBlock:
    name: str
    on: tuple[str, ...]
    values: tuple[float, ...]
    line: int = field(default=0, compare=False)


@dataclass
class NetworkDocument:
    version: str = FORMAT_VERSION
    variables: list[VariableDecl] = field(default_factory=list)
    parents: list[ParentsDecl] = field(default_factory=list)
    cpts: list[CptBlock] = field(default_factory=list)
    credals: list[CredalBlock] = field(default_factory=list)
    utilities: list[UtilityBlock] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # number | ident | op | newline | eof
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<number>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?(?![A-Za-z_]))
  | (?P<ident>[A-Za-z0-9_][A-Za-z0-9_\-.']*)
  | (?P<op><=|>=|[{}:;,()\[\]=])
""", re.VERBOSE)
_LABEL_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_\-.']*\Z")


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "newline":
            tokens.append(Token("newline", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _err(tok: Token, reason: str, cls=ParseError):
    return cls(reason, tok.line, tok.col)


def _describe(tok: Token) -> str:
    return {"newline": "end of line", "eof": "end of file"}.get(tok.kind, repr(tok.text))


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text or tok.kind not in ("op", "ident"):
            raise _err(tok, f"expected {text!r}, found {_describe(tok)}")
        return tok

    def name(self) -> Token:
        tok = self.next()
        if tok.kind not in ("ident", "number") or not _LABEL_RE.match(tok.text):
            raise _err(tok, f"expected a name, found {_describe(tok)}")
        return tok

    def skip_newlines(self):
        while self.peek().kind == "newline":
            self.next()

    def end_statement(self):
        tok = self.peek()
        if tok.kind == "newline" or tok.text == ";":
            self.next()
        elif tok.kind != "eof":
            raise _err(tok, f"expected end of statement, found {_describe(tok)}")

    def block_entries(self) -> list[list[Token]]:
        """Entries of a ``{ ... }`` block as token lists (braces consumed)."""
        self.skip_newlines()
        self.expect("{")
        entries: list[list[Token]] = []
        current: list[Token] = []
        while True:
            tok = self.next()
            if tok.kind == "eof":
                raise _err(tok, "unterminated block, missing '}'")
            if tok.text == "}" and tok.kind == "op":
                if current:
                    entries.append(current)
                return entries
            if tok.kind == "newline":
                if current and current[-1].text == ",":
                    continue
                if current:
                    entries.append(current)
                current = []
            elif tok.text == ";" and tok.kind == "op":
                if current:
                    entries.append(current)
                current = []
            else:
                current.append(tok)

    def parse(self) -> NetworkDocument:
        doc = NetworkDocument()
        seen_statement = False
        while True:
            self.skip_newlines()
            tok = self.peek()
            if tok.kind == "eof":
                break
            if tok.text == ";":
                self.next()
                continue
            kw = self.next()
            if kw.kind != "ident":
                raise _err(kw, f"expected a statement keyword, found {_describe(kw)}")
            if kw.text == "format":
                if seen_statement:
                    raise _err(kw, "'format' must be the first statement")
                v = self.next()
                if v.kind not in ("number", "ident"):
                    raise _err(v, "expected a format version")
                if v.text != FORMAT_VERSION:
                    raise _err(v, f"unsupported format version {v.text}", SemanticError)
                doc.version = v.text
                self.end_statement()
            elif kw.text == "variable":
                doc.variables.append(self._variable(kw))
            elif kw.text == "parents":
                doc.parents.append(self._parents(kw))
            elif kw.text == "cpt":
                doc.cpts.append(self._cpt(kw))
            elif kw.text == "credal":
                doc.credals.append(self._credal(kw))
            elif kw.text == "utility":
                doc.utilities.append(self._utility(kw))
            else:
                raise _err(kw, f"unknown statement {kw.text!r}")
            seen_statement = True
        if not doc.variables:
            raise SemanticError("no variables declared", 1, 1)
        return doc

    # -- statements ---------------------------------------------------------

    def _variable(self, kw: Token) -> VariableDecl:
        name = self.name()
        values = None
        for entry in self.block_entries():
            key, items = _split_entry(entry)
            if key is None or len(key) != 1 or key[0].text != "values":
                raise _err(entry[0], "variable blocks hold a single 'values:' entry")
            if values is not None:
                raise _err(entry[0], "duplicate 'values' entry")
            values = tuple(_labels(items, entry[0]))
        if values is None:
            raise _err(name, f"variable {name.text} declares no values")
        self.end_statement()
        return VariableDecl(name.text, values, kw.line)

    def _parents(self, kw: Token) -> ParentsDecl:
        name = self.name()
        self.expect(":")
        items = []
        while self.peek().kind not in ("newline", "eof") and self.peek().text != ";":
            items.append(self.next())
        self.end_statement()
        return ParentsDecl(name.text, tuple(_labels(items, kw, allow_empty=True)), kw.line)

    def _cpt(self, kw: Token) -> CptBlock:
        name = self.name()
        rows = []
        for entry in self.block_entries():
            key, items = _split_entry(entry)
            config = None if key is None else _config_key(key)
            rows.append(CptRow(config, _numbers(items, entry[0]), entry[0].line))
        self.end_statement()
        return CptBlock(name.text, rows, kw.line)

    def _credal(self, kw: Token) -> CredalBlock:
        name = self.name()
        tag = None
        entries = []
        for entry in self.block_entries():
            key, items = _split_entry(entry)
            if key is None:
                raise _err(entry[0], "credal entries need a 'key:'")
            if len(key) == 1 and key[0].text == "class":
                if tag is not None:
                    raise _err(key[0], "duplicate 'class' entry")
                if len(items) != 1 or items[0].kind != "ident":
                    raise _err(entry[0], "'class' takes one tag")
                tag = items[0].text
                if tag not in CLASS_TAGS:
                    raise _err(items[0], f"unknown credal class {tag!r}", SemanticError)
                continue
            entries.append(_credal_entry(key, items, entry[0]))
        if tag is None:
            raise _err(name, f"credal block for {name.text} has no 'class'")
        self.end_statement()
        return CredalBlock(name.text, tag, entries, kw.line)

    def _utility(self, kw: Token) -> UtilityBlock:
        name = self.name()
        on = values = None
        for entry in self.block_entries():
            key, items = _split_entry(entry)
            k = key[0].text if key and len(key) == 1 else None
            if k == "on" and on is None:
                on = tuple(_labels(items, entry[0]))
            elif k == "values" and values is None:
                values = _numbers(items, entry[0])
            else:
                raise _err(entry[0], "utility blocks hold one 'on:' and one 'values:' entry")
        if on is None or values is None:
            raise _err(name, f"utility {name.text} needs 'on' and 'values'")
        self.end_statement()
        return UtilityBlock(name.text, on, values, kw.line)


def _split_entry(entry: list[Token]):
    for k, tok in enumerate(entry):
        if tok.kind == "op" and tok.text == ":":
            if k == 0:
                raise _err(tok, "empty key before ':'")
            return entry[:k], entry[k + 1:]
    return None, entry


def _list_items(items: list[Token], anchor: Token, allow_empty=False) -> list[Token]:
    if not items:
        if allow_empty:
            return []
        raise _err(anchor, "expected a value list")
    out = []
    for k, tok in enumerate(items):
        if k % 2:
            if tok.text != ",":
                raise _err(tok, f"expected ',', found {_describe(tok)}")
        else:
            if tok.kind not in ("number", "ident"):
                raise _err(tok, f"expected a value, found {_describe(tok)}")
            out.append(tok)
    if items[-1].text == ",":
        raise _err(items[-1], "trailing ','")
    return out


def _labels(items, anchor, allow_empty=False) -> list[str]:
    out = []
    for tok in _list_items(items, anchor, allow_empty):
        if not _LABEL_RE.match(tok.text):
            raise _err(tok, f"{tok.text!r} is not a valid name")
        out.append(tok.text)
    return out


def _number(tok: Token) -> float:
    if tok.kind != "number":
        raise _err(tok, f"expected a number, found {_describe(tok)}")
    return float(tok.text)


def _numbers(items, anchor) -> tuple[float, ...]:
    return tuple(_number(t) for t in _list_items(items, anchor))


def _config_key(key: list[Token]) -> tuple[str, ...]:
    if key[0].text == "(":
        if key[-1].text != ")":
            raise _err(key[-1], "unbalanced '(' in configuration key")
        return tuple(_labels(key[1:-1], key[0]))
    if len(key) != 1:
        raise _err(key[1], "configuration keys with several labels need parentheses")
    return tuple(_labels(key, key[0]))


def _credal_entry(key: list[Token], items: list[Token], anchor: Token) -> CredalEntry:
    config = None
    rest = key
    if key[0].text == "(":
        close = next((k for k, t in enumerate(key) if t.text == ")"), None)
        if close is None:
            raise _err(key[0], "unbalanced '(' in configuration prefix")
        config = tuple(_labels(key[1:close], key[0]))
        rest = key[close + 1:]
    elif len(key) >= 2 and key[1].text != "[":
        config = (key[0].text,)
        if not _LABEL_RE.match(key[0].text):
            raise _err(key[0], f"{key[0].text!r} is not a valid label")
        rest = key[1:]
    if not rest or rest[0].kind != "ident":
        raise _err(anchor, "missing parameter name")
    name, subset = rest[0].text, None
    if len(rest) > 1:
        if rest[1].text != "[" or rest[-1].text != "]":
            raise _err(rest[1], f"unexpected {_describe(rest[1])} in key")
        subset = tuple(_labels(rest[2:-1], rest[1]))
    relation = rhs = None
    rel = next((k for k, t in enumerate(items) if t.text in ("<=", ">=", "=")), None)
    if rel is not None:
        if rel + 2 != len(items):
            raise _err(items[rel], "a relation must be followed by one number")
        relation, rhs = items[rel].text, _number(items[rel + 1])
        items = items[:rel]
    values = tuple(float(t.text) if t.kind == "number" else t.text
                   for t in _list_items(items, anchor))
    return CredalEntry(name, values, config, subset, relation, rhs, anchor.line)


def parse_network_file(text: str) -> NetworkDocument:
    """Parse document text; raises :class:`ParseError` with a position."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Canonical printer
# ---------------------------------------------------------------------------


def _num(x: float) -> str:
    return repr(float(x))


def _value(v) -> str:
    return _num(v) if isinstance(v, float) else str(v)


def _config_text(config: tuple[str, ...]) -> str:
    return config[0] if len(config) == 1 else "(" + ", ".join(config) + ")"


def _entry_text(e: CredalEntry) -> str:
    key = e.key
    if e.subset is not None:
        key += "[" + ", ".join(e.subset) + "]"
    if e.config is not None:
        key = f"{_config_text(e.config)} {key}"
    text = f"{key}: " + ", ".join(_value(v) for v in e.values)
    if e.relation is not None:
        text += f" {e.relation} {_num(e.rhs)}"
    return text


def format_document(doc: NetworkDocument) -> str:
    """Canonical text; parsing it gives back an equal document."""
    out = [f"format {doc.version}"]
    for v in doc.variables:
        out.append(f"variable {v.name} {{ values: {', '.join(v.values)} }}")
    for p in doc.parents:
        out.append(f"parents {p.name}: {', '.join(p.parents)}".rstrip())
    for c in doc.cpts:
        out.append(f"cpt {c.name} {{")
        for r in c.rows:
            probs = ", ".join(_num(x) for x in r.probs)
            out.append(f"  {_config_text(r.config)}: {probs}" if r.config is not None else f"  {probs}")
        out.append("}")
    for c in doc.credals:
        out.append(f"credal {c.name} {{")
        out.append(f"  class: {c.tag}")
        out.extend(f"  {_entry_text(e)}" for e in c.entries)
        out.append("}")
    for u in doc.utilities:
        out.append(f"utility {u.name} {{ on: {', '.join(u.on)}; "
                   f"values: {', '.join(_num(x) for x in u.values)} }}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# JSON mirror
# ---------------------------------------------------------------------------


def document_to_json(doc: NetworkDocument) -> str:
    def entry(e: CredalEntry):
        d = {"key": e.key, "values": list(e.values)}
        if e.config is not None:
            d["config"] = list(e.config)
        if e.subset is not None:
            d["subset"] = list(e.subset)
        if e.relation is not None:
            d["relation"], d["rhs"] = e.relation, e.rhs
        return d

    data = {
        "format": doc.version,
        "variables": [{"name": v.name, "values": list(v.values)} for v in doc.variables],
        "parents": [{"name": p.name, "parents": list(p.parents)} for p in doc.parents],
        "cpts": [{"name": c.name, "rows": [
            {"config": None if r.config is None else list(r.config), "probs": list(r.probs)}
            for r in c.rows]} for c in doc.cpts],
        "credals": [{"name": c.name, "class": c.tag, "entries": [entry(e) for e in c.entries]}
                    for c in doc.credals],
        "utilities": [{"name": u.name, "on": list(u.on), "values": list(u.values)}
                      for u in doc.utilities],
    }
    return json.dumps(data, indent=2) + "\n"


def _j(cond: bool, where: str, reason: str):
    if not cond:
        raise ParseError(reason, where=where)


def _jlist(x, where, kind=None):
    _j(isinstance(x, list), where, "expected a list")
    if kind is str:
        for k, v in enumerate(x):
            _j(isinstance(v, str) and _LABEL_RE.match(v), f"{where}[{k}]", "expected a name")
        return tuple(x)
    if kind is float:
        for k, v in enumerate(x):
            _j(isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v),
               f"{where}[{k}]", "expected a number")
        return tuple(float(v) for v in x)
    return x


def document_from_json(text: str) -> NetworkDocument:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    _j(isinstance(data, dict), "$", "expected an object")
    doc = NetworkDocument(version=str(data.get("format", FORMAT_VERSION)))
    if doc.version != FORMAT_VERSION:
        raise SemanticError(f"unsupported format version {doc.version}", where="$.format")

    def obj(x, where, keys):
        _j(isinstance(x, dict), where, "expected an object")
        for k in keys:
            _j(k in x, where, f"missing {k!r}")
        return x

    for k, v in enumerate(_jlist(data.get("variables", []), "$.variables")):
        w = f"$.variables[{k}]"
        v = obj(v, w, ("name", "values"))
        _j(isinstance(v["name"], str) and _LABEL_RE.match(v["name"]), w, "bad name")
        doc.variables.append(VariableDecl(v["name"], _jlist(v["values"], w + ".values", str)))
    for k, p in enumerate(_jlist(data.get("parents", []), "$.parents")):
        w = f"$.parents[{k}]"
        p = obj(p, w, ("name", "parents"))
        doc.parents.append(ParentsDecl(str(p["name"]), _jlist(p["parents"], w + ".parents", str)))
    for k, c in enumerate(_jlist(data.get("cpts", []), "$.cpts")):
        w = f"$.cpts[{k}]"
        c = obj(c, w, ("name", "rows"))
        rows = []
        for r_i, r in enumerate(_jlist(c["rows"], w + ".rows")):
            rw = f"{w}.rows[{r_i}]"
            r = obj(r, rw, ("probs",))
            config = r.get("config")
            config = None if config is None else _jlist(config, rw + ".config", str)
            rows.append(CptRow(config, _jlist(r["probs"], rw + ".probs", float)))
        doc.cpts.append(CptBlock(str(c["name"]), rows))
    for k, c in enumerate(_jlist(data.get("credals", []), "$.credals")):
        w = f"$.credals[{k}]"
        c = obj(c, w, ("name", "class", "entries"))
        if c["class"] not in CLASS_TAGS:
            raise SemanticError(f"unknown credal class {c['class']!r}", where=w + ".class")
        entries = []
        for e_i, e in enumerate(_jlist(c["entries"], w + ".entries")):
            ew = f"{w}.entries[{e_i}]"
            e = obj(e, ew, ("key", "values"))
            values = _jlist(e["values"], ew + ".values")
            _j(all(isinstance(v, str) or (isinstance(v, (int, float)) and not isinstance(v, bool))
                   for v in values), ew, "values must be names or numbers")
            values = tuple(v if isinstance(v, str) else float(v) for v in values)
            config = e.get("config")
            subset = e.get("subset")
            relation = e.get("relation")
            _j(relation in (None, "<=", ">=", "="), ew, "bad relation")
            rhs = e.get("rhs")
            _j((relation is None) == (rhs is None), ew, "'relation' and 'rhs' go together")
            entries.append(CredalEntry(
                str(e["key"]), values,
                None if config is None else _jlist(config, ew + ".config", str),
                None if subset is None else _jlist(subset, ew + ".subset", str),
                relation, None if rhs is None else float(rhs)))
        doc.credals.append(CredalBlock(str(c["name"]), c["class"], entries))
    if not doc.variables:
        raise SemanticError("no variables declared", where="$.variables")
    for k, u in enumerate(_jlist(data.get("utilities", []), "$.utilities")):
        w = f"$.utilities[{k}]"
        u = obj(u, w, ("name", "on", "values"))
        doc.utilities.append(UtilityBlock(str(u["name"]), _jlist(u["on"], w + ".on", str),
                                          _jlist(u["values"], w + ".values", float)))
    return doc


# ---------------------------------------------------------------------------
# Building the model
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Model:
    net: DiscreteNetwork
    specs: list[CredalSpec]
    utilities: dict[str, UtilityFunction]
    document: NetworkDocument


def _sem(reason: str, line: int = 0) -> SemanticError:
    return SemanticError(reason, line, 1 if line else 0)


class _Builder:
    def __init__(self, doc: NetworkDocument):
        self.doc = doc
        if not doc.variables:
            raise _sem("no variables declared")
        self.index: dict[str, int] = {}
        for v in doc.variables:
            if v.name in self.index:
                raise _sem(f"duplicate variable {v.name}", v.line)
            if len(set(v.values)) != len(v.values):
                raise _sem(f"variable {v.name} repeats a value label", v.line)
            self.index[v.name] = len(self.index)
        self.labels = [v.values for v in doc.variables]
        self.parents: list[tuple[int, ...]] = [()] * len(doc.variables)
        seen = set()
        for p in doc.parents:
            node = self.var(p.name, p.line)
            if node in seen:
                raise _sem(f"parents of {p.name} declared twice", p.line)
            seen.add(node)
            ids = tuple(self.var(name, p.line) for name in p.parents)
            if len(set(ids)) != len(ids) or node in ids:
                raise _sem(f"variable {p.name} has a repeated or self parent", p.line)
            self.parents[node] = ids

    def cycle_line(self) -> int:
        """Line of a ``parents`` statement on a directed cycle, 0 if there is none."""
        left = set(range(len(self.parents)))
        changed = True
        while changed:  # peel off nodes without remaining parents, then without remaining children
            changed = False
            for i in list(left):
                has_parent = any(p in left for p in self.parents[i])
                has_child = any(i in self.parents[c] for c in left)
                if not has_parent or not has_child:
                    left.discard(i)
                    changed = True
        for p in self.doc.parents:
            if self.index.get(p.name) in left:
                return p.line
        return 0

    def var(self, name: str, line: int) -> int:
        if name not in self.index:
            raise _sem(f"unknown variable {name}", line)
        return self.index[name]

    def card(self, i: int) -> int:
        return len(self.labels[i])

    def pa_cards(self, i: int) -> list[int]:
        return [self.card(p) for p in self.parents[i]]

    def n_configs(self, i: int) -> int:
        return int(np.prod(self.pa_cards(i), dtype=int))

    def config_index(self, node: int, config: tuple[str, ...], line: int) -> int:
        ps = self.parents[node]
        if len(config) != len(ps):
            raise _sem(f"configuration ({', '.join(config)}) has {len(config)} labels, "
                       f"{self.doc.variables[node].name} has {len(ps)} parents", line)
        idx = []
        for p, lab in zip(ps, config):
            if lab not in self.labels[p]:
                raise _sem(f"unknown value {lab} of {self.doc.variables[p].name}", line)
            idx.append(self.labels[p].index(lab))
        return int(np.ravel_multi_index(idx, self.pa_cards(node))) if ps else 0

    def config_label(self, node: int, k: int) -> str:
        ps = self.parents[node]
        idx = np.unravel_index(k, self.pa_cards(node)) if ps else ()
        return "(" + ", ".join(self.labels[p][j] for p, j in zip(ps, idx)) + ")"

    def distribution(self, probs, node: int, line: int, what: str) -> np.ndarray:
        name = self.doc.variables[node].name
        if len(probs) != self.card(node):
            raise _sem(f"{what} for {name} has {len(probs)} entries, expected {self.card(node)}", line)
        p = np.asarray(probs, dtype=float)
        if np.any(p < 0):
            raise _sem(f"{what} for {name} has a negative entry", line)
        s = p.sum()
        if abs(s - 1.0) > RENORMALIZE_TOL:
            raise _sem(f"{what} for {name} not normalized (sums to {s:.9g})", line)
        return p / s

    def cpt(self, block: CptBlock) -> np.ndarray:
        node = self.var(block.name, block.line)
        configs = self.n_configs(node)
        table = np.full((self.card(node), configs), np.nan)
        for row in block.rows:
            if row.config is None:
                if self.parents[node]:
                    raise _sem(f"cpt {block.name} rows need a parent configuration", row.line)
                k = 0
            else:
                k = self.config_index(node, row.config, row.line)
            if not np.isnan(table[0, k]):
                raise _sem(f"cpt {block.name} repeats configuration {self.config_label(node, k)}",
                           row.line)
            table[:, k] = self.distribution(row.probs, node, row.line,
                                            f"cpt row {self.config_label(node, k)}")
        missing = [self.config_label(node, k) for k in range(configs) if np.isnan(table[0, k])]
        if missing:
            raise _sem(f"cpt {block.name} misses configurations {', '.join(missing)}", block.line)
        return table

    # -- credal blocks ------------------------------------------------------

    def per_config(self, block: CredalBlock, node: int) -> list[list[CredalEntry]]:
        """Entries applying to each configuration; prefixed keys override unprefixed ones."""
        configs = self.n_configs(node)
        common = [e for e in block.entries if e.config is None]
        specific: list[list[CredalEntry]] = [[] for _ in range(configs)]
        for e in block.entries:
            if e.config is not None:
                specific[self.config_index(node, e.config, e.line)].append(e)
        out = []
        for k in range(configs):
            own = {(e.key, e.subset) for e in specific[k]}
            out.append([e for e in common if (e.key, e.subset) not in own] + specific[k])
        return out

    def numbers(self, e: CredalEntry, block: CredalBlock) -> np.ndarray:
        if not all(isinstance(v, float) for v in e.values):
            raise _sem(f"credal {block.name}: '{e.key}' takes numbers", e.line)
        return np.asarray(e.values, dtype=float)

    def single(self, entries, key, block, node, k) -> CredalEntry:
        found = [e for e in entries if e.key == key]
        if len(found) != 1:
            where = f" at {self.config_label(node, k)}" if self.parents[node] else ""
            raise _sem(f"credal {block.name} ({block.tag}) needs one '{key}' entry{where}",
                       block.line)
        return found[0]

    def sized(self, e: CredalEntry, block: CredalBlock, node: int) -> np.ndarray:
        x = self.numbers(e, block)
        if x.size != self.card(node):
            raise _sem(f"credal {block.name}: '{e.key}' has {x.size} entries, "
                       f"expected {self.card(node)}", e.line)
        return x

    def scalar(self, e: CredalEntry, block: CredalBlock) -> float:
        x = self.numbers(e, block)
        if x.size != 1:
            raise _sem(f"credal {block.name}: '{e.key}' takes one number", e.line)
        return float(x[0])

    def check_keys(self, block: CredalBlock, allowed):
        for e in block.entries:
            if not allowed(e):
                raise _sem(f"credal {block.name}: unexpected entry '{e.key}' for class {block.tag}",
                           e.line)

    def credal(self, block: CredalBlock) -> CredalSpec:
        node = self.var(block.name, block.line)
        card, configs = self.card(node), self.n_configs(node)
        tag = block.tag
        try:
            if tag == "vertices":
                return self.vertices(block, node)
            polys = []
            for k, entries in enumerate(self.per_config(block, node)):
                polys.append(self.polytope(block, node, k, entries))
            return CredalSpec(node, card, configs, "separate", tuple(polys))
        except InputError:
            raise
        except (CredalNetError, ValueError) as exc:
            raise _sem(f"credal {block.name}: {exc}", block.line) from None

    def vertices(self, block: CredalBlock, node: int) -> CredalSpec:
        card, configs = self.card(node), self.n_configs(node)
        self.check_keys(block, lambda e: e.key == "columns" or
                        (e.key.startswith("v") and e.subset is None and e.relation is None))
        cols = [e for e in block.entries if e.key == "columns"]
        mode = "separate"
        if cols:
            if len(cols) > 1 or cols[0].config is not None or cols[0].values not in (("joint",), ("separate",)):
                raise _sem(f"credal {block.name}: 'columns' is joint or separate", cols[0].line)
            mode = cols[0].values[0]
        vs = [e for e in block.entries if e.key != "columns"]
        if mode == "joint":
            tables = []
            for e in vs:
                if e.config is not None:
                    raise _sem(f"credal {block.name}: joint vertices cannot be prefixed", e.line)
                x = self.numbers(e, block)
                if x.size != card * configs:
                    raise _sem(f"credal {block.name}: vertex '{e.key}' has {x.size} entries, "
                               f"expected {card * configs}", e.line)
                cols_ = [self.distribution(x[k * card:(k + 1) * card], node, e.line,
                                           f"vertex {e.key} column {self.config_label(node, k)}")
                         for k in range(configs)]
                tables.append(np.stack(cols_, axis=1))
            if not tables:
                raise _sem(f"credal {block.name} lists no vertices", block.line)
            return CredalSpec(node, card, configs, "joint", tables=np.array(tables))
        polys = []
        for k, entries in enumerate(self.per_config(block, node)):
            entries = [e for e in entries if e.key != "columns"]
            if not entries:
                raise _sem(f"credal {block.name} lists no vertices at {self.config_label(node, k)}",
                           block.line)
            pts = [self.distribution(self.numbers(e, block), node, e.line, f"vertex {e.key}")
                   for e in entries]
            polys.append(Polytope(card, np.array(pts)))
        return CredalSpec(node, card, configs, "separate", tuple(polys))

    def polytope(self, block, node, k, entries) -> Polytope:
        tag = block.tag
        one = lambda key: self.single(entries, key, block, node, k)  # noqa: E731
        if tag == "eps-contaminated":
            self.check_keys(block, lambda e: e.key in ("base", "eps"))
            base = self.distribution(self.numbers(one("base"), block), node, one("base").line, "base")
            return vertices_from_eps_contamination(base, self.scalar(one("eps"), block))
        if tag == "total-variation":
            self.check_keys(block, lambda e: e.key in ("base", "eps"))
            base = self.distribution(self.numbers(one("base"), block), node, one("base").line, "base")
            return Polytope.from_constraints(
                constraints_from_total_variation(base, self.scalar(one("eps"), block)))
        if tag == "density-bounded":
            self.check_keys(block, lambda e: e.key in ("lower", "upper"))
            return Polytope.from_constraints(constraints_from_density_bounds(
                self.sized(one("lower"), block, node), self.sized(one("upper"), block, node)))
        if tag == "density-ratio":
            self.check_keys(block, lambda e: e.key in ("lower", "upper"))
            return Polytope.from_constraints(constraints_from_density_ratio(
                self.sized(one("lower"), block, node), self.sized(one("upper"), block, node)))
        if tag == "belief-function":
            self.check_keys(block, lambda e: e.key == "m" and e.subset is not None)
            masses = {}
            for e in entries:
                labels = self.labels[node]
                bad = [s for s in e.subset if s not in labels]
                if bad or not e.subset:
                    raise _sem(f"credal {block.name}: bad focal set [{', '.join(e.subset)}]", e.line)
                key = frozenset(labels.index(s) for s in e.subset)
                masses[key] = masses.get(key, 0.0) + self.scalar(e, block)
            return vertices_from_belief_function(self.card(node), masses)
        if tag == "constraints":
            self.check_keys(block, lambda e: e.key == "row" and e.relation is not None)
            rows = []
            for e in entries:
                a = self.sized(e, block, node)
                if e.relation in ("<=", "="):
                    rows.append((a, e.rhs))
                if e.relation in (">=", "="):
                    rows.append((-a, -e.rhs))
            return Polytope.from_constraints(LinearConstraintSet.from_rows(self.card(node), rows))
        raise _sem(f"unknown credal class {tag!r}", block.line)

    def utility(self, block: UtilityBlock) -> UtilityFunction:
        targets = tuple(self.var(n, block.line) for n in block.on)
        size = int(np.prod([self.card(t) for t in targets], dtype=int))
        if len(set(targets)) != len(targets):
            raise _sem(f"utility {block.name} repeats a variable", block.line)
        if len(block.values) != size:
            raise _sem(f"utility {block.name} has {len(block.values)} values, expected {size}",
                       block.line)
        return UtilityFunction(targets, np.asarray(block.values), block.name)

    def build(self) -> Model:
        doc = self.doc
        n = len(doc.variables)
        tables: list[np.ndarray | None] = [None] * n
        specs: dict[int, CredalSpec] = {}
        for block in doc.cpts:
            node = self.var(block.name, block.line)
            if tables[node] is not None:
                raise _sem(f"cpt {block.name} declared twice", block.line)
            tables[node] = self.cpt(block)
        for block in doc.credals:
            node = self.var(block.name, block.line)
            if node in specs:
                raise _sem(f"credal {block.name} declared twice", block.line)
            if tables[node] is not None:
                raise _sem(f"{block.name} has both a cpt and a credal block", block.line)
            specs[node] = self.credal(block)
            tables[node] = specs[node].centroid_table()
        missing = [i for i in range(n) if tables[i] is None]
        if missing:
            names = ", ".join(doc.variables[i].name for i in missing)
            raise _sem(f"no cpt or credal block for {names}", doc.variables[missing[0]].line)
        variables = tuple(Variable(i, v.name, len(v.values), v.values)
                          for i, v in enumerate(doc.variables))
        cpts = tuple(Factor((i, *self.parents[i]),
                            tables[i].reshape(self.card(i), *self.pa_cards(i))) for i in range(n))
        net = DiscreteNetwork(variables, tuple(self.parents), cpts)
        problems = validate_network(net)
        if problems:
            raise _sem("; ".join(problems), self.cycle_line())
        utilities = {}
        for block in doc.utilities:
            if block.name in utilities:
                raise _sem(f"utility {block.name} declared twice", block.line)
            utilities[block.name] = self.utility(block)
        return Model(net, [specs[k] for k in sorted(specs)], utilities, doc)


def build_model(doc: NetworkDocument) -> Model:
    """Network, credal specs and utilities described by ``doc``.

    Credal nodes get the centroid of their vertex tables as placeholder CPT.
    """
    try:
        return _Builder(doc).build()
    except InvalidNetworkError as exc:
        raise _sem(str(exc)) from None


def parse_document(text: str, json_format: bool = False) -> NetworkDocument:
    return document_from_json(text) if json_format else parse_network_file(text)


def load_model(path: str | Path) -> Model:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read file: {exc}", where=str(path)) from None
    return build_model(parse_document(text, path.suffix.lower() == ".json"))


# ---------------------------------------------------------------------------
# From in-memory objects
# ---------------------------------------------------------------------------


def _labels_of(var: Variable) -> tuple[str, ...]:
    return var.labels or tuple(str(k) for k in range(var.cardinality))


def document_from_network(net: DiscreteNetwork, specs=(), utilities=()) -> NetworkDocument:
    """Document describing ``net``; credal nodes are written as vertex lists."""
    doc = NetworkDocument()
    labels = [_labels_of(v) for v in net.variables]
    for v in net.variables:
        doc.variables.append(VariableDecl(v.name, labels[v.id]))
    for i, ps in enumerate(net.parents):
        if ps:
            doc.parents.append(ParentsDecl(net.variables[i].name,
                                           tuple(net.variables[p].name for p in ps)))
    credal = {s.node: s for s in specs}

    def configs(i):
        ps = net.parents[i]
        if not ps:
            return [None]
        cards = [net.variables[p].cardinality for p in ps]
        return [tuple(labels[p][j] for p, j in zip(ps, np.unravel_index(k, cards)))
                for k in range(int(np.prod(cards)))]

    for i in range(net.n):
        name = net.variables[i].name
        if i in credal:
            spec = credal[i]
            if spec.columns == "joint" and spec.n_configs > 1:
                entries = [CredalEntry("columns", ("joint",))]
                entries += [CredalEntry(f"v{j + 1}", tuple(float(x) for x in t.T.ravel()))
                            for j, t in enumerate(spec.tables)]
            else:
                entries = []
                for cfg, poly in zip(configs(i), spec.column_polytopes()):
                    entries += [CredalEntry(f"v{j + 1}", tuple(float(x) for x in v), cfg)
                                for j, v in enumerate(poly.vertices)]
            doc.credals.append(CredalBlock(name, "vertices", entries))
        else:
            table = net.cpt_table(i)
            doc.cpts.append(CptBlock(name, [CptRow(cfg, tuple(float(x) for x in table[:, k]))
                                            for k, cfg in enumerate(configs(i))]))
    for u in utilities:
        doc.utilities.append(UtilityBlock(u.name, tuple(net.variables[t].name for t in u.targets),
                                          tuple(float(x) for x in u.values.ravel())))
    return doc
