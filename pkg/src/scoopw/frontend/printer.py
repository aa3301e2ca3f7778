"""Pretty-printer producing source that re-parses to the same syntax tree."""

from __future__ import annotations

from scoopw.frontend.ast import (
    Assign,
    BinOp,
    BoolLit,
    Call,
    CallStmt,
    ClassDecl,
    Create,
    CurrentRef,
    Expr,
    If,
    IntLit,
    Loop,
    MethodDecl,
    Name,
    Program,
    SeparateBlock,
    Stmt,
    UnOp,
    VoidLit,
)

INDENT = "  "


def format_expr(e: Expr) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "True" if e.value else "False"
    if isinstance(e, VoidLit):
        return "Void"
    if isinstance(e, CurrentRef):
        return "Current"
    if isinstance(e, Name):
        return e.ident
    if isinstance(e, Call):
        args = ""
        if e.has_parens or e.args:
            args = "(" + ", ".join(format_expr(a) for a in e.args) + ")"
        if e.target is None:
            return f"{e.name}{args}"
        target = format_expr(e.target)
        if isinstance(e.target, (BinOp, UnOp)):
            target = f"({target})"
        return f"{target}.{e.name}{args}"
    if isinstance(e, BinOp):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    if isinstance(e, UnOp):
        inner = format_expr(e.operand)
        if e.op == "not":
            return f"not {inner}"
        # parenthesize so that "-" never abuts another "-" (comment marker)
        return f"-({inner})"
    raise TypeError(f"not an expression: {e!r}")


def _stmts(body: tuple[Stmt, ...], depth: int) -> list[str]:
    lines: list[str] = []
    for s in body:
        lines.extend(_stmt(s, depth))
    return lines


def _stmt(s: Stmt, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(s, Create):
        if s.ctor is None:
            return [f"{pad}create {s.target}"]
        args = ""
        if s.has_parens or s.args:
            args = " (" + ", ".join(format_expr(a) for a in s.args) + ")"
        return [f"{pad}create {s.target}.{s.ctor}{args}"]
    if isinstance(s, Assign):
        return [f"{pad}{s.target} := {format_expr(s.value)}"]
    if isinstance(s, CallStmt):
        return [f"{pad}{format_expr(s.call)}"]
    if isinstance(s, If):
        out = [f"{pad}if {format_expr(s.cond)} then"]
        out += _stmts(s.then_body, depth + 1)
        if s.has_else:
            out.append(f"{pad}else")
            out += _stmts(s.else_body, depth + 1)
        out.append(f"{pad}end")
        return out
    if isinstance(s, Loop):
        out = [f"{pad}from"]
        out += _stmts(s.init, depth + 1)
        out.append(f"{pad}until")
        out.append(f"{pad}{INDENT}{format_expr(s.until)}")
        out.append(f"{pad}loop")
        out += _stmts(s.body, depth + 1)
        out.append(f"{pad}end")
        return out
    if isinstance(s, SeparateBlock):
        out = [f"{pad}separate {', '.join(s.targets)} do"]
        out += _stmts(s.body, depth + 1)
        out.append(f"{pad}end")
        return out
    raise TypeError(f"not a statement: {s!r}")


def _decls(decls) -> str:
    return "; ".join(f"{n}: {t}" for n, t in decls)


def format_method(m: MethodDecl, depth: int = 1) -> list[str]:
    pad = INDENT * depth
    head = m.name
    if m.formals:
        head += f" ({_decls(m.formals)})"
    if m.return_type is not None:
        head += f": {m.return_type}"
    out = [pad + head]
    if m.require:
        out.append(f"{pad}{INDENT}require")
        # ";" keeps a parenthesized clause from reading as call arguments
        out += [f"{pad}{INDENT * 2}{format_expr(e)};" for e in m.require]
    if m.locals:
        out.append(f"{pad}{INDENT}local")
        out += [f"{pad}{INDENT * 2}{n}: {t}" for n, t in m.locals]
    out.append(f"{pad}{INDENT}do")
    out += _stmts(m.body, depth + 2)
    if m.ensure:
        out.append(f"{pad}{INDENT}ensure")
        out += [f"{pad}{INDENT * 2}{format_expr(e)};" for e in m.ensure]
    out.append(f"{pad}{INDENT}end")
    return out


def format_class(c: ClassDecl) -> list[str]:
    out = [f"class {c.name}"]
    out += [f"{INDENT}{a.name}: {a.type}" for a in c.attributes]
    for m in c.methods:
        out += format_method(m)
    out.append("end")
    return out


def format_program(p: Program) -> str:
    blocks = ["\n".join(format_class(c)) for c in p.classes]
    return "\n\n".join(blocks) + "\n"
