"""PrepScript parsing: straight-line prep programs into dataflow DAGs.

Grammar (closed, no control flow):

    program := stmt*
    stmt    := IDENT "=" call | "#" comment | blank
    call    := NAME "(" args? ")"
    args    := arg ("," arg)*
    arg     := literal | IDENT | NAME "=" literal
    literal := float | int | string | "[" literal ("," literal)* "]"

Each statement becomes one pipeline node.  Reassigning a variable mints
a fresh SSA version (x -> x.1, x.2, ...); later reads bind to the latest
version, so def-use edges are exact.  Every SSA variable carries a
64-bit FNV-1a provenance hash over (operation, canonical literals,
input hashes); variable names never enter the hash, so two pipelines
that compute the same thing hash identically regardless of naming.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NoEvalNode, ScriptSyntaxError, UndefinedVariable

EVAL_OP = "train_eval"

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_M64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _M64
    return h


def fnv1a64_text(text: str) -> int:
    return fnv1a64(text.encode("utf-8"))


@dataclass(frozen=True)
class ScriptSource:
    text: str

    @property
    def lines(self):
        return self.text.split("\n")

    @staticmethod
    def from_lines(lines):
        return ScriptSource("\n".join(lines))


@dataclass(frozen=True)
class Token:
    type: str  # NAME NUMBER STRING ( ) [ ] , =
    value: object
    start: int
    end: int


def format_literal(v) -> str:
    """Canonical literal text, shared by emit and provenance hashing."""
    if isinstance(v, bool):
        raise ValueError("booleans are not PrepScript literals")
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        import json

        return json.dumps(v, ensure_ascii=False)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(format_literal(x) for x in v) + "]"
    raise ValueError(f"unsupported literal {v!r}")


_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}


def lex_line(line: str, lineno: int):
    """Tokenize one physical line; returns None for blank/comment lines."""
    tokens = []
    i, n = 0, len(line)
    while i < n:
        ch = line[i]
        if ch in " \t\r":
            i += 1
            continue
        if ch == "#":
            if tokens:
                raise ScriptSyntaxError("comment must occupy its own line", line=lineno)
            return None
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (line[j].isalnum() or line[j] == "_"):
                j += 1
            tokens.append(Token("NAME", line[i:j], i, j))
            i = j
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and (line[i + 1].isdigit() or line[i + 1] == ".")):
            j = i + 1 if ch == "-" else i
            while j < n and line[j].isdigit():
                j += 1
            is_float = False
            if j < n and line[j] == ".":
                is_float = True
                j += 1
                while j < n and line[j].isdigit():
                    j += 1
            if j < n and line[j] in "eE":
                k = j + 1
                if k < n and line[k] in "+-":
                    k += 1
                if k < n and line[k].isdigit():
                    is_float = True
                    j = k
                    while j < n and line[j].isdigit():
                        j += 1
            text = line[i:j]
            try:
                value = float(text) if is_float else int(text)
            except ValueError:
                raise ScriptSyntaxError(f"bad number literal {text!r}", line=lineno)
            tokens.append(Token("NUMBER", value, i, j))
            i = j
            continue
        if ch == '"':
            j = i + 1
            out = []
            while True:
                if j >= n:
                    raise ScriptSyntaxError("unterminated string", line=lineno)
                c = line[j]
                if c == '"':
                    j += 1
                    break
                if c == "\\":
                    if j + 1 >= n:
                        raise ScriptSyntaxError("dangling escape", line=lineno)
                    nxt = line[j + 1]
                    if nxt in _ESCAPES:
                        out.append(_ESCAPES[nxt])
                        j += 2
                        continue
                    if nxt == "u" and j + 5 < n:
                        try:
                            out.append(chr(int(line[j + 2:j + 6], 16)))
                        except ValueError:
                            raise ScriptSyntaxError("bad \\u escape", line=lineno)
                        j += 6
                        continue
                    raise ScriptSyntaxError(f"unknown escape \\{nxt}", line=lineno)
                out.append(c)
                j += 1
            tokens.append(Token("STRING", "".join(out), i, j))
            i = j
            continue
        if ch in "()[],=":
            tokens.append(Token(ch, ch, i, i + 1))
            i += 1
            continue
        raise ScriptSyntaxError(f"unexpected character {ch!r}", line=lineno)
    return tokens if tokens else None


@dataclass
class Statement:
    target: str
    op: str
    args: list  # ("lit", value) | ("var", base_name)
    kwargs: list  # (name, value) in source order
    var_spans: list  # (start, end) of variable tokens: target first, then var args
    line_no: int
    raw: str


class _Cursor:
    def __init__(self, tokens, lineno):
        self.tokens = tokens
        self.pos = 0
        self.lineno = lineno

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise ScriptSyntaxError("unexpected end of statement", line=self.lineno)
        self.pos += 1
        return tok

    def expect(self, type_):
        tok = self.next()
        if tok.type != type_:
            raise ScriptSyntaxError(
                f"expected {type_!r}, found {tok.value!r}", line=self.lineno
            )
        return tok


def _parse_literal(cur: _Cursor):
    tok = cur.next()
    if tok.type in ("NUMBER", "STRING"):
        return tok.value
    if tok.type == "[":
        items = [_parse_literal(cur)]
        while True:
            sep = cur.next()
            if sep.type == "]":
                return tuple(items)
            if sep.type != ",":
                raise ScriptSyntaxError("expected ',' or ']' in list", line=cur.lineno)
            items.append(_parse_literal(cur))
    raise ScriptSyntaxError(f"expected literal, found {tok.value!r}", line=cur.lineno)


def parse_statement(line: str, lineno: int):
    """Parse one line; returns a Statement or None (blank/comment)."""
    tokens = lex_line(line, lineno)
    if tokens is None:
        return None
    cur = _Cursor(tokens, lineno)
    target = cur.expect("NAME")
    cur.expect("=")
    op = cur.expect("NAME")
    cur.expect("(")
    args, kwargs, var_spans = [], [], [(target.start, target.end)]
    seen_kwarg = False
    tok = cur.peek()
    if tok is not None and tok.type == ")":
        cur.next()
    else:
        while True:
            tok = cur.peek()
            if tok is None:
                raise ScriptSyntaxError("unterminated call", line=lineno)
            if tok.type == "NAME":
                after = cur.tokens[cur.pos + 1] if cur.pos + 1 < len(cur.tokens) else None
                if after is not None and after.type == "=":
                    cur.next()
                    cur.next()
                    if any(k == tok.value for k, _ in kwargs):
                        raise ScriptSyntaxError(f"duplicate keyword {tok.value!r}", line=lineno)
                    kwargs.append((tok.value, _parse_literal(cur)))
                    seen_kwarg = True
                else:
                    if seen_kwarg:
                        raise ScriptSyntaxError(
                            "positional argument after keyword argument", line=lineno
                        )
                    cur.next()
                    args.append(("var", tok.value))
                    var_spans.append((tok.start, tok.end))
            else:
                if seen_kwarg:
                    raise ScriptSyntaxError(
                        "positional argument after keyword argument", line=lineno
                    )
                args.append(("lit", _parse_literal(cur)))
            sep = cur.next()
            if sep.type == ")":
                break
            if sep.type != ",":
                raise ScriptSyntaxError(f"expected ',' or ')', found {sep.value!r}", line=lineno)
    if cur.peek() is not None:
        raise ScriptSyntaxError(
            f"trailing tokens after call: {cur.peek().value!r}", line=lineno
        )
    return Statement(
        target=target.value, op=op.value, args=args, kwargs=kwargs,
        var_spans=var_spans, line_no=lineno, raw=line,
    )


@dataclass(frozen=True)
class PipelineNode:
    id: int
    op_name: str
    inputs: tuple  # SSA variable ids, positional order of appearance
    output: str  # SSA variable id
    args: tuple  # ("lit", value) | ("var", ssa_id)
    kwargs: tuple  # (name, value), source order
    source_line: int

    def kwargs_dict(self):
        return dict(self.kwargs)


@dataclass(frozen=True)
class PipelineGraph:
    nodes: tuple
    edges: frozenset  # (producer node id, consumer node id)
    var_defs: dict  # SSA id -> node id
    trace: dict  # SSA id -> 64-bit provenance hash

    def node_by_id(self, node_id):
        return self.nodes[node_id - 1]


def base_name(ssa_id: str) -> str:
    return ssa_id.rsplit(".", 1)[0]


def node_trace_string(op_name, args, kwargs, trace):
    parts = []
    for kind, val in args:
        if kind == "lit":
            parts.append("l=" + format_literal(val))
        else:
            parts.append("v=%016x" % trace[val])
    for name, val in sorted(kwargs):
        parts.append(f"k:{name}=" + format_literal(val))
    return f"{op_name}({'|'.join(parts)})"


def parse(src) -> PipelineGraph:
    """Parse a program into its dataflow DAG with provenance hashes."""
    if isinstance(src, str):
        src = ScriptSource(src)
    nodes = []
    edges = set()
    var_defs = {}
    trace = {}
    versions = {}
    current = {}
    for lineno, line in enumerate(src.lines, start=1):
        stmt = parse_statement(line, lineno)
        if stmt is None:
            continue
        resolved_args = []
        inputs = []
        for kind, val in stmt.args:
            if kind == "var":
                if val not in current:
                    raise UndefinedVariable(val, line=lineno)
                ssa = current[val]
                resolved_args.append(("var", ssa))
                inputs.append(ssa)
            else:
                resolved_args.append(("lit", val))
        version = versions.get(stmt.target, 0) + 1
        versions[stmt.target] = version
        out_ssa = f"{stmt.target}.{version}"
        node_id = len(nodes) + 1
        node = PipelineNode(
            id=node_id,
            op_name=stmt.op,
            inputs=tuple(inputs),
            output=out_ssa,
            args=tuple(resolved_args),
            kwargs=tuple(stmt.kwargs),
            source_line=lineno,
        )
        nodes.append(node)
        current[stmt.target] = out_ssa
        var_defs[out_ssa] = node_id
        for ssa in inputs:
            edges.add((var_defs[ssa], node_id))
        trace[out_ssa] = fnv1a64_text(
            node_trace_string(stmt.op, resolved_args, stmt.kwargs, trace)
        )
    return PipelineGraph(
        nodes=tuple(nodes), edges=frozenset(edges), var_defs=var_defs, trace=trace
    )


def trace_hash(g: PipelineGraph, var: str) -> int:
    if var not in g.trace:
        raise UndefinedVariable(var)
    return g.trace[var]


def render_statement(node: PipelineNode, name_of) -> str:
    parts = []
    for kind, val in node.args:
        parts.append(name_of[val] if kind == "var" else format_literal(val))
    for name, val in node.kwargs:
        parts.append(f"{name}={format_literal(val)}")
    return f"{name_of[node.output]} = {node.op_name}({', '.join(parts)})"


def emit(g: PipelineGraph) -> ScriptSource:
    """Deterministic pretty-print, one statement per line.

    SSA suffixes are stripped back to base names; a definition is only
    renamed when the version it shadows is still read later (cannot
    happen for graphs produced by parse/insert, which bind reads to the
    latest version).
    """
    last_read = {}
    for node in g.nodes:
        for ssa in node.inputs:
            last_read[ssa] = node.id
    name_of = {}
    current = {}
    taken = {base_name(node.output) for node in g.nodes}
    lines = []
    for node in g.nodes:
        base = base_name(node.output)
        prev = current.get(base)
        if prev is not None and last_read.get(prev, 0) > node.id:
            k = 2
            while f"{base}_{k}" in taken:
                k += 1
            emitted = f"{base}_{k}"
            taken.add(emitted)
        else:
            emitted = base
        name_of[node.output] = emitted
        current[base] = node.output
        current[emitted] = node.output
        lines.append(render_statement(node, name_of))
    return ScriptSource.from_lines(lines)


def graph_signature(g: PipelineGraph):
    """Name-free structural signature; equal signatures mean isomorphic."""
    sig = []
    for node in g.nodes:
        arg_sig = tuple(
            ("v", g.trace[val]) if kind == "var" else ("l", format_literal(val))
            for kind, val in node.args
        )
        sig.append((node.op_name, arg_sig, tuple(node.kwargs), g.trace[node.output]))
    return tuple(sig)


def find_eval_node(g: PipelineGraph, target_var=None):
    """First model-evaluation node consuming (a version of) target_var."""
    for node in g.nodes:
        if node.op_name != EVAL_OP:
            continue
        if target_var is None:
            return node
        if any(base_name(ssa) == target_var for ssa in node.inputs):
            return node
    return None


def render_call(op_name, target_var, kwargs=None):
    parts = [target_var]
    for name, val in (kwargs or {}).items():
        parts.append(f"{name}={format_literal(val)}")
    return f"{target_var} = {op_name}({', '.join(parts)})"


def insert_call(src, op_name, target_var, kwargs=None) -> ScriptSource:
    """Insert ``target = op(target, ...)`` immediately before the first
    evaluation consumer of target_var, rebinding downstream reads."""
    if isinstance(src, str):
        src = ScriptSource(src)
    if target_var is None:
        raise NoEvalNode("no feature variable feeds a train_eval statement")
    g = parse(src)
    eval_node = find_eval_node(g, target_var)
    if eval_node is None:
        raise NoEvalNode(f"no {EVAL_OP} statement consumes {target_var!r}")
    stmt = render_call(op_name, target_var, kwargs)
    lines = src.lines
    idx = eval_node.source_line - 1
    new_lines = lines[:idx] + [stmt] + lines[idx:]
    return ScriptSource.from_lines(new_lines)


def insert_node(g: PipelineGraph, op_name, target_var, kwargs=None) -> PipelineGraph:
    """Graph-level insertion; returns a freshly validated graph."""
    return parse(insert_call(emit(g), op_name, target_var, kwargs))


def default_target_var(g: PipelineGraph):
    """Feature-matrix variable: base of the eval node's first input."""
    eval_node = find_eval_node(g)
    if eval_node is None or not eval_node.inputs:
        return None
    return base_name(eval_node.inputs[0])
