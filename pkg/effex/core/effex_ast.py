"""
Effex AST
=========

Abstract syntax of values, computations, handlers and monad definitions for
the four calculi, using de Bruijn indices.

Binders are counted from the innermost: ``Var(0)`` refers to the nearest
enclosing binder. Nodes binding two variables list the outer variable first,
so in ``Split(v, body)`` the second component is ``Var(0)`` and the first is
``Var(1)``; the same holds for op clauses ``(p, k)`` and bind bodies ``(y, f)``.

Every node is an immutable dataclass. Structural equality is alpha-equivalence
because names never appear in terms and monad definitions store their bound
type variable under a canonical name.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from ..utils.errors import MalformedTermError, TagError
from .effex_types import (
    BIT,
    Calculus,
    CType,
    Effect,
    HandlerType,
    TyVar,
    UnitT,
    VType,
    subst_tyvar,
)

ONE = "one"
ARMS = "arms"
CLOSED = "closed"

CANONICAL_TYVAR = "a"


class Node:
    """
    Base class for syntax nodes.

    ``_scheme`` lists the term-valued fields as ``(name, binders, shape)``.
    ``shape`` is ``ONE`` for a single child, ``ARMS`` for a sorted tuple of
    ``(key, child)`` pairs, and ``CLOSED`` for children that may not refer to
    enclosing binders (monad definitions).
    """

    _scheme: ClassVar[Tuple[Tuple[str, int, str], ...]] = ()
    _annotation: ClassVar[Optional[str]] = None

    def children(self) -> Iterator[Tuple[int, "Node", int, bool]]:
        """Yield ``(position, child, binders, closed)`` in a fixed order."""
        pos = 0
        for name, binders, shape in self._scheme:
            value = getattr(self, name)
            if shape == ARMS:
                for _, child in value:
                    yield pos, child, binders, False
                    pos += 1
            else:
                yield pos, value, binders, shape == CLOSED
                pos += 1

    def map_children(
        self,
        fn: Callable[["Node", int], "Node"],
        closed_fn: Optional[Callable[["Node"], "Node"]] = None,
    ) -> "Node":
        """Rebuild the node with ``fn(child, binders)`` applied to open children."""
        changes = {}
        for name, binders, shape in self._scheme:
            value = getattr(self, name)
            if shape == ONE:
                new = fn(value, binders)
            elif shape == ARMS:
                new = tuple((key, fn(child, binders)) for key, child in value)
            elif closed_fn is not None:
                new = closed_fn(value)
            else:
                continue
            if new is not value:
                changes[name] = new
        return dataclasses.replace(self, **changes) if changes else self

    # -- de Bruijn operations -------------------------------------------------

    def shift(self, by: int = 1, cutoff: int = 0) -> "Node":
        """Add ``by`` to every index >= ``cutoff``."""
        if by == 0:
            return self
        return _shift(self, by, cutoff)

    def subst(self, sub: "Value", j: int = 0) -> "Node":
        """
        Replace ``Var(j)`` by ``sub`` and lower the indices above ``j``.

        ``sub`` lives in the scope obtained by removing binder ``j``.
        """
        return _subst(self, sub, j, 0)

    def free_above(self, depth: int = 0) -> bool:
        """True when some index escapes ``depth`` binders."""
        return _max_free(self, 0) > depth


def _shift(node: Node, by: int, cutoff: int) -> Node:
    if isinstance(node, Var):
        return Var(node.index + by) if node.index >= cutoff else node
    return node.map_children(lambda child, b: _shift(child, by, cutoff + b))


def _subst(node: Node, sub: "Value", j: int, depth: int) -> Node:
    if isinstance(node, Var):
        if node.index == j:
            return sub.shift(by=depth)
        if node.index > j:
            return Var(node.index - 1)
        return node
    return node.map_children(lambda child, b: _subst(child, sub, j + b, depth + b))


def _max_free(node: Node, depth: int) -> int:
    """One more than the largest free index, relative to ``depth`` binders."""
    if isinstance(node, Var):
        return node.index - depth + 1 if node.index >= depth else 0
    best = 0
    for _, child, binders, closed in node.children():
        if not closed:
            best = max(best, _max_free(child, depth + binders))
    return best


def instantiate(body: Node, *values: "Value") -> Node:
    """
    Substitute ``values`` for the innermost binders of ``body``.

    Values are listed outermost first, matching the binder order of the node
    that owned ``body``; each is expressed in the scope outside those binders.
    """
    n = len(values)
    for i, value in enumerate(reversed(values)):
        body = body.subst(value.shift(by=n - 1 - i))
    return body


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


class Value(Node):
    pass


@dataclass(frozen=True)
class Var(Value):
    index: int

    def __post_init__(self) -> None:
        if self.index < 0:
            raise MalformedTermError("de Bruijn indices must be non-negative")


@dataclass(frozen=True)
class UnitV(Value):
    pass


@dataclass(frozen=True)
class Pair(Value):
    fst: Value
    snd: Value
    _scheme = (("fst", 0, ONE), ("snd", 0, ONE))


@dataclass(frozen=True)
class Inj(Value):
    """Injection; ``ann`` is the full variant type when known."""

    label: str
    payload: Value
    ann: Optional[VType] = None
    _scheme = (("payload", 0, ONE),)
    _annotation = "ann"


@dataclass(frozen=True)
class Thunk(Value):
    """Suspended computation; ``ann`` is its full ``U_E C`` type when known."""

    body: "Comp"
    ann: Optional[VType] = None
    _scheme = (("body", 0, ONE),)
    _annotation = "ann"


# ---------------------------------------------------------------------------
# Computations
# ---------------------------------------------------------------------------


class Comp(Node):
    pass


@dataclass(frozen=True)
class Return(Comp):
    value: Value
    _scheme = (("value", 0, ONE),)


@dataclass(frozen=True)
class Let(Comp):
    bound: Comp
    body: Comp
    _scheme = (("bound", 0, ONE), ("body", 1, ONE))


@dataclass(frozen=True)
class Force(Comp):
    value: Value
    _scheme = (("value", 0, ONE),)


@dataclass(frozen=True)
class Lam(Comp):
    """``ann`` is the argument type when known."""

    body: Comp
    ann: Optional[VType] = None
    _scheme = (("body", 1, ONE),)
    _annotation = "ann"


@dataclass(frozen=True)
class App(Comp):
    fun: Comp
    arg: Value
    _scheme = (("fun", 0, ONE), ("arg", 0, ONE))


@dataclass(frozen=True)
class CPair(Comp):
    fst: Comp
    snd: Comp
    _scheme = (("fst", 0, ONE), ("snd", 0, ONE))


@dataclass(frozen=True)
class Prj(Comp):
    side: int
    comp: Comp
    _scheme = (("comp", 0, ONE),)

    def __post_init__(self) -> None:
        if self.side not in (1, 2):
            raise MalformedTermError(f"projection side must be 1 or 2, got {self.side}")


@dataclass(frozen=True)
class Split(Comp):
    scrutinee: Value
    body: Comp
    _scheme = (("scrutinee", 0, ONE), ("body", 2, ONE))


@dataclass(frozen=True)
class Case(Comp):
    """``arms`` is sorted by label; ``ann`` is the result type of an empty case."""

    scrutinee: Value
    arms: Tuple[Tuple[str, Comp], ...]
    ann: Optional[CType] = None
    _scheme = (("scrutinee", 0, ONE), ("arms", 1, ARMS))
    _annotation = "ann"

    def __post_init__(self) -> None:
        _sort_arms(self, "arms", "case arm")

    def arm(self, label: str) -> Optional[Comp]:
        for name, body in self.arms:
            if name == label:
                return body
        return None


@dataclass(frozen=True)
class OpCall(Comp):
    op: str
    arg: Value
    _scheme = (("arg", 0, ONE),)


@dataclass(frozen=True)
class Handler(Node):
    """Deep handler: return clause (binder x) and op clauses (binders p, k)."""

    ret: Comp
    ops: Tuple[Tuple[str, Comp], ...] = ()
    ann: Optional[HandlerType] = None
    _scheme = (("ret", 1, ONE), ("ops", 2, ARMS))
    _annotation = "ann"

    def __post_init__(self) -> None:
        _sort_arms(self, "ops", "operation clause")

    @property
    def op_names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.ops)

    def clause(self, op: str) -> Optional[Comp]:
        for name, body in self.ops:
            if name == op:
                return body
        return None


@dataclass(frozen=True)
class Handle(Comp):
    body: Comp
    handler: Handler
    _scheme = (("body", 0, ONE), ("handler", 0, ONE))


@dataclass(frozen=True)
class MonadDef(Node):
    """
    User-defined monad ``where a. C { return x -> unit | y >>= f -> bind }``.

    The bound type variable is stored as ``a``; ``display_var`` and ``name``
    are kept for printing only and take no part in equality.
    """

    carrier: CType
    unit_body: Comp
    bind_body: Comp
    display_var: str = field(default=CANONICAL_TYVAR, compare=False)
    name: Optional[str] = field(default=None, compare=False)
    _scheme = (("unit_body", 1, ONE), ("bind_body", 2, ONE))

    @property
    def type_var(self) -> str:
        return CANONICAL_TYVAR

    @classmethod
    def of(
        cls,
        type_var: str,
        carrier: CType,
        unit_body: Comp,
        bind_body: Comp,
        name: Optional[str] = None,
    ) -> "MonadDef":
        """Build a monad definition, renaming ``type_var`` to the canonical name."""
        if type_var != CANONICAL_TYVAR:
            canon = TyVar(CANONICAL_TYVAR)
            rename = lambda ty: subst_tyvar(ty, type_var, canon)  # noqa: E731
            carrier = rename(carrier)
            unit_body = map_annotations(unit_body, rename)
            bind_body = map_annotations(bind_body, rename)
        return cls(carrier, unit_body, bind_body, display_var=type_var, name=name)

    def named(self, name: Optional[str]) -> "MonadDef":
        return dataclasses.replace(self, name=name)


@dataclass(frozen=True)
class Reflect(Comp):
    """``ann`` is the value type the reflected computation returns."""

    body: Comp
    ann: Optional[VType] = None
    _scheme = (("body", 0, ONE),)
    _annotation = "ann"


@dataclass(frozen=True)
class ReifyType:
    """Ambient effect of a reify and the value type its body returns."""

    effect: Effect
    vtype: VType


@dataclass(frozen=True)
class Reify(Comp):
    monad: MonadDef
    body: Comp
    ann: Optional[ReifyType] = None
    _scheme = (("monad", 0, CLOSED), ("body", 0, ONE))
    _annotation = "ann"


@dataclass(frozen=True)
class Shift0(Comp):
    """``ann`` is the value type the captured continuation expects."""

    body: Comp
    ann: Optional[VType] = None
    _scheme = (("body", 1, ONE),)
    _annotation = "ann"


@dataclass(frozen=True)
class ResetType:
    """Ambient effect and answer type of a reset, filled in by the checker."""

    effect: Effect
    answer: CType


@dataclass(frozen=True)
class Dollar(Comp):
    """``reset body as x in cont``."""

    body: Comp
    cont: Comp
    ann: Optional[ResetType] = None
    _scheme = (("body", 0, ONE), ("cont", 1, ONE))
    _annotation = "ann"


def _sort_arms(node: Node, attr: str, what: str) -> None:
    arms = tuple(getattr(node, attr))
    keys = [key for key, _ in arms]
    if len(set(keys)) != len(keys):
        raise MalformedTermError(f"duplicate {what} labels: {keys}")
    if keys != sorted(keys):
        arms = tuple(sorted(arms, key=lambda a: a[0]))
    object.__setattr__(node, attr, arms)


AnyTerm = Union[Value, Comp, Handler, MonadDef]

# ---------------------------------------------------------------------------
# Calculus tags
# ---------------------------------------------------------------------------

EXTENSIONS: Dict[type, Calculus] = {
    OpCall: Calculus.EFF,
    Handle: Calculus.EFF,
    Reflect: Calculus.MON,
    Reify: Calculus.MON,
    Shift0: Calculus.DEL,
    Dollar: Calculus.DEL,
}

CONSTRUCT_NAMES = {
    OpCall: "operation call",
    Handle: "handle",
    Reflect: "reflect",
    Reify: "reify",
    Shift0: "shift0",
    Dollar: "reset",
}


def check_tags(term: Node, calculus: Calculus) -> None:
    """Raise :class:`TagError` if ``term`` uses a construct of another calculus."""
    owner = EXTENSIONS.get(type(term))
    if owner is not None and owner is not calculus:
        raise TagError(CONSTRUCT_NAMES[type(term)], calculus_display(calculus))
    for _, child, _, _ in term.children():
        check_tags(child, calculus)


def calculus_display(calculus: Calculus) -> str:
    return {
        Calculus.MAM: "MAM",
        Calculus.EFF: "λeff",
        Calculus.MON: "λmon",
        Calculus.DEL: "λdel",
    }[calculus]


@dataclass(frozen=True)
class Term:
    """A closed-or-open phrase tagged with the calculus it belongs to."""

    calculus: Calculus
    body: Node

    def __post_init__(self) -> None:
        check_tags(self.body, self.calculus)


# ---------------------------------------------------------------------------
# Whole-term operations
# ---------------------------------------------------------------------------


def subst_value(
    target: Node, replacement: Value, index: int = 0, depth: Optional[int] = None
) -> Node:
    """
    Capture-avoiding substitution of ``replacement`` for ``Var(index)``.

    With ``depth``, ``target`` is taken to live under ``depth`` binders and
    ``replacement`` under the ``depth - 1`` left once binder ``index`` is gone;
    both are scope-checked against that.

    Raises:
        MalformedTermError: If ``target`` does not bind ``index`` or either
            term escapes its scope
    """
    if index < 0 or (depth is not None and index >= depth):
        raise MalformedTermError(f"no binder {index} in scope")
    if depth is not None:
        scope_check(target, depth)
        scope_check(replacement, depth - 1)
    return target.subst(replacement, index)


def scope_check(term: Node, depth: int = 0) -> None:
    """
    Check every index is below its binder depth.

    Monad definitions are checked as closed phrases regardless of ``depth``.

    Raises:
        MalformedTermError: With the path to the first offending variable
    """
    _scope_check(term, depth, ())


def _scope_check(term: Node, depth: int, path: Tuple[int, ...]) -> None:
    if isinstance(term, Var):
        if term.index >= depth:
            raise MalformedTermError(
                f"variable index {term.index} escapes {depth} binder(s)", path
            )
        return
    for pos, child, binders, closed in term.children():
        _scope_check(child, binders if closed else depth + binders, path + (pos,))


def nodes_on_path(term: Node, path: Sequence[int]) -> List[Node]:
    """The nodes from ``term`` down along ``path``; stops where the path leaves the term."""
    nodes = [term]
    for pos in path:
        step = next((child for p, child, _, _ in nodes[-1].children() if p == pos), None)
        if step is None:
            break
        nodes.append(step)
    return nodes


def is_closed(term: Node) -> bool:
    try:
        scope_check(term, 0)
    except MalformedTermError:
        return False
    return True


def alpha_eq(a: Node, b: Node) -> bool:
    """
    Alpha-equivalence of two terms.

    With de Bruijn indices and canonical monad type variables this is
    structural equality, annotations included.
    """
    return a == b


def map_annotations(term: Node, fn: Callable) -> Node:
    """Apply ``fn`` to every type annotation; reset and reify annotations part by part."""

    def visit(node: Node) -> Node:
        if isinstance(node, Var):
            return node
        node = node.map_children(lambda child, _: visit(child), closed_fn=visit)
        attr = node._annotation
        ann = getattr(node, attr) if attr else None
        if ann is None:
            return node
        if isinstance(ann, ResetType):
            new = ResetType(fn(ann.effect), fn(ann.answer))
        elif isinstance(ann, ReifyType):
            new = ReifyType(fn(ann.effect), fn(ann.vtype))
        else:
            new = fn(ann)
        return node if new == ann else dataclasses.replace(node, **{attr: new})

    return visit(term)


def erase_annotations(term: Node) -> Node:
    """Remove every optional annotation."""

    def visit(node: Node) -> Node:
        if isinstance(node, Var):
            return node
        node = node.map_children(lambda child, _: visit(child), closed_fn=visit)
        attr = node._annotation
        if attr and getattr(node, attr) is not None:
            node = dataclasses.replace(node, **{attr: None})
        return node

    return visit(term)


def rewrite(term: Node, fn: Callable[[Node], Optional[Node]]) -> Node:
    """
    Bottom-up rewrite: ``fn`` sees each rebuilt node and may return a replacement.

    Closed children (monad definitions) are rewritten too.
    """

    def visit(node: Node) -> Node:
        if not isinstance(node, Var):
            node = node.map_children(lambda child, _: visit(child), closed_fn=visit)
        replaced = fn(node)
        return node if replaced is None else replaced

    return visit(term)


def term_size(term: Node) -> int:
    return 1 + sum(term_size(child) for _, child, _, _ in term.children())


# ---------------------------------------------------------------------------
# Built-in values and small builders
# ---------------------------------------------------------------------------

TRU = Inj("True", UnitV(), BIT)
FLS = Inj("False", UnitV(), BIT)


def bit_value(flag: bool) -> Inj:
    return TRU if flag else FLS


def lams(n: int, body: Comp) -> Comp:
    for _ in range(n):
        body = Lam(body)
    return body


def apply(fun: Comp, *args: Value) -> Comp:
    for arg in args:
        fun = App(fun, arg)
    return fun


def force_app(value: Value, *args: Value) -> Comp:
    """``force v a1 ... an``."""
    return apply(Force(value), *args)


def unit_type() -> VType:
    return UnitT()


def arms_of(mapping: Mapping[str, Comp]) -> Tuple[Tuple[str, Comp], ...]:
    return tuple(sorted(mapping.items()))
