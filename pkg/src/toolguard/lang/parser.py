"""Recursive-descent parser for the guard DSL.

The grammar is documented in docs/guardlang.ebnf. Parsing is
deterministic; the same source always yields the same AST.
"""
from __future__ import annotations

from datetime import timedelta

from . import ast as A
from .lexer import GuardSyntaxError, Token, tokenize

_CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")


def parse(source: str, source_name: str = "<guard>") -> A.Module:
    return _Parser(tokenize(source, source_name), source_name).module()


class _Parser:
    def __init__(self, tokens: list[Token], source_name: str):
        self.toks = tokens
        self.i = 0
        self.source_name = source_name

    # helpers

    @property
    def cur(self) -> Token:
        return self.toks[self.i]

    def err(self, msg: str, tok: Token | None = None):
        tok = tok or self.cur
        raise GuardSyntaxError(msg, tok.pos, self.source_name)

    def advance(self) -> Token:
        tok = self.cur
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, kind: str, value=None) -> bool:
        return self.cur.kind == kind and (value is None or self.cur.value == value)

    def at_kw(self, word: str) -> bool:
        return self.at("kw", word)

    def eat(self, kind: str, value=None) -> Token:
        if not self.at(kind, value):
            want = value if value is not None else kind
            got = self.cur.value if self.cur.kind != "eof" else "end of input"
            self.err(f"expected {want!r}, found {got!r}")
        return self.advance()

    def eat_kw(self, word: str) -> Token:
        return self.eat("kw", word)

    def ident(self) -> str:
        return self.eat("ident").value

    # declarations

    def module(self) -> A.Module:
        mod = A.Module(source_name=self.source_name, pos=A.Pos(1, 1))
        while not self.at("eof"):
            if self.at_kw("type"):
                self.typedecl(mod)
            elif self.at_kw("tool"):
                mod.tools.append(self.tooldecl())
            elif self.at_kw("fun"):
                mod.functions.append(self.fundecl())
            else:
                self.err("expected 'type', 'tool' or 'fun' declaration")
        return mod

    def typedecl(self, mod: A.Module) -> None:
        pos = self.eat_kw("type").pos
        name = self.ident()
        if self.at("punct", "="):
            self.advance()
            self.eat_kw("enum")
            self.eat("punct", "(")
            members = [self.eat("text").value]
            while self.at("punct", ","):
                self.advance()
                members.append(self.eat("text").value)
            self.eat("punct", ")")
            mod.enums.append(A.EnumDecl(name=name, members=members, pos=pos))
            return
        self.eat("punct", "{")
        fields: list[A.FieldDecl] = []
        while not self.at("punct", "}"):
            fpos = self.cur.pos
            fname = self.ident()
            self.eat("punct", ":")
            ftype = self.typeexpr()
            fields.append(A.FieldDecl(name=fname, type=ftype, pos=fpos))
            if self.at("punct", ","):
                self.advance()
            elif not self.at("punct", "}"):
                self.err("expected ',' or '}' in record declaration")
        self.eat("punct", "}")
        mod.records.append(A.RecordDecl(name=name, fields=fields, pos=pos))

    def tooldecl(self) -> A.ToolDecl:
        pos = self.eat_kw("tool").pos
        mutating = False
        if self.at_kw("mutating"):
            self.advance()
            mutating = True
        name = self.ident()
        self.eat("punct", "(")
        params: list[A.ParamDecl] = []
        while not self.at("punct", ")"):
            ppos = self.cur.pos
            pname = self.ident()
            self.eat("punct", ":")
            ptype = self.typeexpr()
            params.append(A.ParamDecl(name=pname, type=ptype, pos=ppos))
            if self.at("punct", ","):
                self.advance()
            elif not self.at("punct", ")"):
                self.err("expected ',' or ')' in tool parameters")
        self.eat("punct", ")")
        returns = None
        if self.at("punct", "->"):
            self.advance()
            returns = self.typeexpr()
        return A.ToolDecl(
            name=name, mutating=mutating, params=params, returns=returns, pos=pos
        )

    def fundecl(self) -> A.FunDecl:
        pos = self.eat_kw("fun").pos
        name = self.ident()
        self.eat("punct", "(")
        params: list[A.ParamDecl] = []
        while not self.at("punct", ")"):
            ppos = self.cur.pos
            # 'ctx' is a keyword but is the conventional context parameter
            if self.at_kw("ctx"):
                pname = self.advance().value
            else:
                pname = self.ident()
            self.eat("punct", ":")
            ptype = self.typeexpr()
            params.append(A.ParamDecl(name=pname, type=ptype, pos=ppos))
            if self.at("punct", ","):
                self.advance()
            elif not self.at("punct", ")"):
                self.err("expected ',' or ')' in function parameters")
        self.eat("punct", ")")
        self.eat("punct", "->")
        rtype = self.typeexpr()
        body = self.block()
        return A.FunDecl(
            name=name, params=params, return_type=rtype, body=body, pos=pos
        )

    def typeexpr(self) -> A.TypeExpr:
        pos = self.cur.pos
        if self.at_kw("list"):
            self.advance()
            self.eat("punct", "<")
            elem = self.typeexpr()
            self.eat("punct", ">")
            base: A.TypeExpr = A.TypeList(elem=elem, pos=pos)
        elif self.cur.kind == "ident":
            # primitives (bool, text, timestamp, ...) lex as plain idents
            base = A.TypeName(name=self.advance().value, pos=pos)
        else:
            self.err("expected a type")
        if self.at("punct", "?"):
            self.advance()
            return A.TypeOptional(elem=base, pos=pos)
        return base

    # statements / expressions

    def block(self) -> A.Block:
        pos = self.eat("punct", "{").pos
        stmts: list[A.Stmt] = []
        while True:
            if self.at_kw("let"):
                spos = self.advance().pos
                name = self.ident()
                self.eat("punct", "=")
                stmts.append(A.LetStmt(name=name, value=self.expr(), pos=spos))
            elif self.at_kw("check"):
                spos = self.advance().pos
                stmts.append(A.CheckStmt(value=self.expr(), pos=spos))
            else:
                break
        result = self.expr()
        self.eat("punct", "}")
        return A.Block(stmts=stmts, result=result, pos=pos)

    def expr(self) -> A.Expr:
        return self.or_expr()

    def or_expr(self) -> A.Expr:
        left = self.and_expr()
        while self.at_kw("or"):
            pos = self.advance().pos
            left = A.Binary(op="or", left=left, right=self.and_expr(), pos=pos)
        return left

    def and_expr(self) -> A.Expr:
        left = self.not_expr()
        while self.at_kw("and"):
            pos = self.advance().pos
            left = A.Binary(op="and", left=left, right=self.not_expr(), pos=pos)
        return left

    def not_expr(self) -> A.Expr:
        if self.at_kw("not"):
            pos = self.advance().pos
            return A.Unary(op="not", operand=self.not_expr(), pos=pos)
        return self.cmp_expr()

    def cmp_expr(self) -> A.Expr:
        left = self.add_expr()
        if self.at("punct") and self.cur.value in _CMP_OPS:
            op = self.cur.value
            pos = self.advance().pos
            return A.Binary(op=op, left=left, right=self.add_expr(), pos=pos)
        return left

    def add_expr(self) -> A.Expr:
        left = self.mul_expr()
        while self.at("punct") and self.cur.value in ("+", "-"):
            op = self.cur.value
            pos = self.advance().pos
            left = A.Binary(op=op, left=left, right=self.mul_expr(), pos=pos)
        return left

    def mul_expr(self) -> A.Expr:
        left = self.unary_expr()
        while self.at("punct") and self.cur.value in ("*", "/"):
            op = self.cur.value
            pos = self.advance().pos
            left = A.Binary(op=op, left=left, right=self.unary_expr(), pos=pos)
        return left

    def unary_expr(self) -> A.Expr:
        if self.at("punct", "-"):
            pos = self.advance().pos
            return A.Unary(op="-", operand=self.unary_expr(), pos=pos)
        return self.postfix_expr()

    def postfix_expr(self) -> A.Expr:
        e = self.primary()
        while True:
            if self.at("punct", "."):
                pos = self.advance().pos
                fname = self.ident()
                e = A.FieldAccess(obj=e, field=fname, pos=pos)
            elif self.at("punct", "["):
                pos = self.advance().pos
                idx = self.expr()
                self.eat("punct", "]")
                e = A.Index(obj=e, index=idx, pos=pos)
            else:
                return e

    def primary(self) -> A.Expr:
        tok = self.cur
        pos = tok.pos
        if tok.kind == "int":
            self.advance()
            return A.Lit(kind="int", value=tok.value, pos=pos)
        if tok.kind == "decimal":
            self.advance()
            return A.Lit(kind="decimal", value=tok.value, pos=pos)
        if tok.kind == "text":
            self.advance()
            return A.Lit(kind="text", value=tok.value, pos=pos)
        if tok.kind == "timestamp":
            self.advance()
            return A.Lit(kind="timestamp", value=tok.value, pos=pos)
        if tok.kind == "duration":
            self.advance()
            amount, unit = tok.value
            delta = timedelta(hours=amount) if unit == "h" else timedelta(days=amount)
            return A.Lit(kind="duration", value=delta, pos=pos)
        if tok.kind == "kw":
            return self.keyword_primary()
        if tok.kind == "ident":
            name = self.advance().value
            if self.at("punct", "("):
                self.advance()
                args = []
                while not self.at("punct", ")"):
                    args.append(self.expr())
                    if self.at("punct", ","):
                        self.advance()
                    elif not self.at("punct", ")"):
                        self.err("expected ',' or ')' in call arguments")
                self.eat("punct", ")")
                return A.Call(name=name, args=args, pos=pos)
            return A.Name(id=name, pos=pos)
        if tok.kind == "punct" and tok.value == "(":
            self.advance()
            e = self.expr()
            self.eat("punct", ")")
            return e
        if tok.kind == "punct" and tok.value == "[":
            self.advance()
            items = []
            while not self.at("punct", "]"):
                items.append(self.expr())
                if self.at("punct", ","):
                    self.advance()
                elif not self.at("punct", "]"):
                    self.err("expected ',' or ']' in list literal")
            self.eat("punct", "]")
            return A.ListLit(items=items, pos=pos)
        if tok.kind == "punct" and tok.value == "{":
            return self.record_lit()
        self.err("expected an expression")

    def keyword_primary(self) -> A.Expr:
        tok = self.cur
        pos = tok.pos
        word = tok.value
        if word == "true" or word == "false":
            self.advance()
            return A.Lit(kind="bool", value=(word == "true"), pos=pos)
        if word == "allow":
            self.advance()
            return A.AllowLit(pos=pos)
        if word == "not_implemented":
            self.advance()
            return A.NotImplementedLit(pos=pos)
        if word == "deny":
            self.advance()
            self.eat("punct", "(")
            policy_id = self.expr()
            self.eat("punct", ",")
            explanation = self.expr()
            self.eat("punct", ")")
            return A.Deny(policy_id=policy_id, explanation=explanation, pos=pos)
        if word == "exists":
            self.advance()
            self.eat("punct", "(")
            value = self.expr()
            self.eat("punct", ")")
            return A.Exists(value=value, pos=pos)
        if word == "default":
            self.advance()
            self.eat("punct", "(")
            value = self.expr()
            self.eat("punct", ",")
            fallback = self.expr()
            self.eat("punct", ")")
            return A.Default(value=value, fallback=fallback, pos=pos)
        if word == "if":
            self.advance()
            cond = self.expr()
            then = self.block()
            self.eat_kw("else")
            els = self.block()
            return A.If(cond=cond, then=then, els=els, pos=pos)
        if word in ("all", "any", "filter", "count", "sum"):
            return self.quantifier()
        if word == "ctx":
            return self.ctx_expr()
        self.err(f"unexpected keyword {word!r} in expression")

    def quantifier(self) -> A.Expr:
        tok = self.advance()
        kind = tok.value
        pos = tok.pos
        self.eat("punct", "(")
        # 'x in xs, body' vs bare 'xs' (count/sum only)
        has_binder = (
            self.cur.kind == "ident"
            and self.toks[self.i + 1].kind == "kw"
            and self.toks[self.i + 1].value == "in"
        )
        if has_binder:
            binder = self.ident()
            self.eat_kw("in")
            source = self.expr()
            self.eat("punct", ",")
            body = self.expr()
            self.eat("punct", ")")
            return A.Quantifier(
                kind=kind, binder=binder, source=source, body=body, pos=pos
            )
        if kind in ("all", "any", "filter"):
            self.err(f"{kind}(...) requires a binder: {kind}(x in xs, ...)")
        source = self.expr()
        self.eat("punct", ")")
        return A.Quantifier(kind=kind, binder=None, source=source, body=None, pos=pos)

    def ctx_expr(self) -> A.Expr:
        pos = self.eat_kw("ctx").pos
        if not self.at("punct", "."):
            # bare ctx: forwarding the context to a policy function
            return A.Name(id="ctx", pos=pos)
        self.advance()
        head = self.ident()
        if head == "now":
            self.eat("punct", "(")
            self.eat("punct", ")")
            return A.CtxNow(pos=pos)
        if head == "call":
            self.eat("punct", "(")
            tool = self.ident()
            self.eat("punct", ",")
            args = self.record_lit()
            self.eat("punct", ")")
            return A.CtxCall(tool=tool, args=args, pos=pos)
        if head == "history":
            self.eat("punct", ".")
            meth = self.ident()
            if meth == "tool_called":
                self.eat("punct", "(")
                tool = self.ident()
                binder = None
                pred = None
                if self.at("punct", ","):
                    self.advance()
                    binder = self.ident()
                    self.eat("punct", ",")
                    pred = self.expr()
                self.eat("punct", ")")
                return A.HistoryToolCalled(
                    tool=tool, binder=binder, pred=pred, pos=pos
                )
            if meth == "user_confirmed":
                self.eat("punct", "(")
                topic = self.expr()
                self.eat("punct", ")")
                return A.HistoryUserConfirmed(topic=topic, pos=pos)
            self.err(f"unknown history operation {meth!r}")
        self.err(f"unknown context operation {head!r}")

    def record_lit(self) -> A.RecordLit:
        pos = self.eat("punct", "{").pos
        fields: list[tuple[str, A.Expr]] = []
        while not self.at("punct", "}"):
            fname = self.ident()
            self.eat("punct", ":")
            fields.append((fname, self.expr()))
            if self.at("punct", ","):
                self.advance()
            elif not self.at("punct", "}"):
                self.err("expected ',' or '}' in record literal")
        self.eat("punct", "}")
        return A.RecordLit(fields=fields, pos=pos)
