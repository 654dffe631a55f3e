"""
Effex Translations
==================

Macro translations between λeff, λmon and λdel, plus the simulation checker.

Every translation is homomorphic on the shared core: only the constructs of
the source extension are rewritten, and the clauses are fixed templates over
the translated subterms. Indices are de Bruijn, so the binders the templates
introduce (continuations, dispatchers, bind operators) are hygienic; the
templates shift the translated subterms they move under those binders.

Supported translations::

    del -> mon              shift0 as reflect, reset as reify in Cont
    mon -> del  (default)   reflect captures k and abstracts over bind
    mon -> del  (nested)    two shift0s / two resets
    del -> eff              shift0 as an operation, reset as a handler
    eff -> del  (default)   operations abstract over a dispatcher
    eff -> del  (nested)    two shift0s / two resets
    mon -> eff              reflect as an operation, reify as a handler
    eff -> mon  (default)   operations as reflections in Cont
    eff -> mon  (free-monad, untyped) reflections in a free monad, handled
                            by a recursive interpreter built with ``fix``

Annotations: the del -> mon translation translates every type; the other
translations keep annotations that mention no effect and drop the rest.
:func:`translate_typed` elaborates first and keeps every annotation for
del -> mon, mon -> eff and eff -> del, reading the choices the mon -> eff and
eff -> del type translations depend on off the source derivation.
"""

from __future__ import annotations

import dataclasses
import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd

from ..utils.errors import CoercionError, TranslationError
from .effex_ast import (
    ARMS,
    ONE,
    App,
    Case,
    Comp,
    Dollar,
    Force,
    Handle,
    Handler,
    Inj,
    Lam,
    Let,
    MonadDef,
    Node,
    OpCall,
    Pair,
    Reflect,
    Reify,
    ReifyType,
    ResetType,
    Return,
    Shift0,
    Split,
    Term,
    Thunk,
    Var,
    apply,
    check_tags,
    force_app,
    instantiate,
    rewrite,
)
from .effex_opsem import NormalForm, contract, run, step
from .effex_types import (
    Calculus,
    CProd,
    CType,
    DelStack,
    EffOps,
    Effect,
    Fun,
    HandlerType,
    MonStack,
    Prod,
    Pure,
    Returner,
    TyVar,
    UnitT,
    UType,
    Variant,
    effect_ops,
    is_effect_free,
    ops_effect,
    pop_monad,
    push_answer,
    push_monad,
    subst_tyvar,
)
from .effex_typesys import Derivation, TypeChecker, elaborate, elaborate_resets

logger = logging.getLogger(__name__)

SHIFT0_OP = "shift0_op"
REFLECT_OP = "reflect_op"
RET_LABEL = "ret"
RESERVED_OPS = frozenset([SHIFT0_OP, REFLECT_OP])

PLACEHOLDER_ANSWER = Returner(UnitT())


class TranslationVariant(Enum):
    DEFAULT = "default"
    NESTED = "nested"
    FREE_MONAD = "free-monad"

    @classmethod
    def from_name(cls, name: Optional[str]) -> "TranslationVariant":
        if name is None:
            return cls.DEFAULT
        for v in cls:
            if v.value == name.lower():
                return v
        raise TranslationError(f"unknown variant {name!r} (expected default, nested, free-monad)")


VALID = {
    (Calculus.DEL, Calculus.MON): {TranslationVariant.DEFAULT},
    (Calculus.MON, Calculus.DEL): {TranslationVariant.DEFAULT, TranslationVariant.NESTED},
    (Calculus.DEL, Calculus.EFF): {TranslationVariant.DEFAULT},
    (Calculus.EFF, Calculus.DEL): {TranslationVariant.DEFAULT, TranslationVariant.NESTED},
    (Calculus.MON, Calculus.EFF): {TranslationVariant.DEFAULT},
    (Calculus.EFF, Calculus.MON): {TranslationVariant.DEFAULT, TranslationVariant.FREE_MONAD},
}

EXACT = {(Calculus.MON, Calculus.EFF), (Calculus.DEL, Calculus.EFF)}


@dataclass(frozen=True)
class TranslationId:
    source: Calculus
    target: Calculus
    variant: TranslationVariant = TranslationVariant.DEFAULT

    def __post_init__(self) -> None:
        allowed = VALID.get((self.source, self.target))
        if allowed is None or self.variant not in allowed:
            raise TranslationError(f"no translation {self}")

    @classmethod
    def of(cls, source, target, variant: Optional[str] = None) -> "TranslationId":
        src = source if isinstance(source, Calculus) else Calculus.from_name(source)
        tgt = target if isinstance(target, Calculus) else Calculus.from_name(target)
        return cls(src, tgt, TranslationVariant.from_name(variant))

    @property
    def mode(self) -> str:
        return "exact" if (self.source, self.target) in EXACT else "up-to-congruence"

    @property
    def typed(self) -> bool:
        return self.variant is not TranslationVariant.FREE_MONAD

    def __str__(self) -> str:
        base = f"{self.source.value}->{self.target.value}"
        if self.variant is TranslationVariant.DEFAULT:
            return base
        return f"{base} ({self.variant.value})"


def all_translations() -> List[TranslationId]:
    return [
        TranslationId(src, tgt, variant)
        for (src, tgt), variants in VALID.items()
        for variant in sorted(variants, key=lambda v: v.value)
    ]


# ---------------------------------------------------------------------------
# Small builders
# ---------------------------------------------------------------------------


def cont_monad(effect: Effect = Pure(), answer=PLACEHOLDER_ANSWER) -> MonadDef:
    """
    The continuation monad ``where a. U_E (a -> C) -> C``.

    ``return x -> fun c -> force c x``,
    ``m >>= f -> fun c -> force m (thunk fun y -> force f y c)``.
    """
    carrier = Fun(UType(effect, Fun(TyVar("a"), answer)), answer)
    unit = Lam(force_app(Var(0), Var(1)))
    bind = Lam(force_app(Var(2), Thunk(Lam(force_app(Var(2), Var(0), Var(1))))))
    return MonadDef(carrier, unit, bind, name="Cont")


def fix(functional: Node) -> Comp:
    """
    Call-by-push-value fixed point of ``functional : U(U C -> C)``.

    ``fix F = force W W`` with ``W = thunk fun w -> force F (thunk force w w)``.
    """
    w = Thunk(Lam(force_app(functional.shift(1), Thunk(force_app(Var(0), Var(0))))))
    return force_app(w, w)


def _pair_clauses(ops: Sequence[Tuple[str, Comp]], shift_by: int) -> Tuple[Tuple[str, Comp], ...]:
    """``op z -> split z as (p, k) in N_op`` arms with ``N_op`` moved under ``shift_by`` binders."""
    return tuple((op, Split(Var(0), body.shift(shift_by, 2))) for op, body in ops)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


def _map_types(ty, stack):
    """Rebuild ``ty`` with ``stack`` applied to every effect other than ``Pure``."""
    if isinstance(ty, (TyVar, UnitT, Pure)):
        return ty
    if isinstance(ty, Effect):
        return stack(ty)
    rec = lambda t: _map_types(t, stack)  # noqa: E731
    if isinstance(ty, Prod):
        return Prod(rec(ty.fst), rec(ty.snd))
    if isinstance(ty, Variant):
        return Variant(tuple((label, rec(t)) for label, t in ty.arms))
    if isinstance(ty, UType):
        return UType(rec(ty.effect), rec(ty.ctype))
    if isinstance(ty, Returner):
        return Returner(rec(ty.vtype))
    if isinstance(ty, Fun):
        return Fun(rec(ty.arg), rec(ty.result))
    if isinstance(ty, CProd):
        return CProd(rec(ty.fst), rec(ty.snd))
    if isinstance(ty, ResetType):
        return ResetType(rec(ty.effect), rec(ty.answer))
    if isinstance(ty, HandlerType):
        return HandlerType(rec(ty.in_vtype), rec(ty.in_effect), rec(ty.out_ctype), rec(ty.out_effect))
    raise TranslationError(f"cannot translate the type {ty}")


def _del_stack_to_mon(effect: Effect) -> Effect:
    if not isinstance(effect, DelStack):
        raise TranslationError(f"no λmon counterpart for {effect}")
    layers: List[MonadDef] = []
    below: Effect = Pure()
    for answer in effect.layers:
        layers.append(cont_monad(below, translate_type_del_to_mon(answer)))
        below = MonStack(tuple(layers))
    return below


def translate_type_del_to_mon(ty):
    """
    Translate λdel types to λmon: an answer-type stack becomes a stack of
    continuation monads, one per answer type.
    """
    return _map_types(ty, _del_stack_to_mon)


def carrier_at(monad: MonadDef, vtype) -> CType:
    return subst_tyvar(monad.carrier, monad.type_var, vtype)


class TypeTranslation:
    """
    Type translation for mon -> eff and eff -> del, read off a typing derivation.

    Neither translation is a function of the source type alone. A monad layer
    becomes ``reflect_op`` at one result type, taken from the first
    reflection into that monad (``1`` if there is none). An operation set
    becomes an answer-type layer whose answer type depends on the handler
    that handles it, taken from the first handler of that set unless
    ``handlers`` fixes another one.
    """

    def __init__(
        self,
        tid: TranslationId,
        reflect_types: Optional[Mapping[MonadDef, Any]] = None,
        handlers: Optional[Mapping[Effect, HandlerType]] = None,
    ):
        self.tid = tid
        self.reflect_types = dict(reflect_types or {})
        self.handlers = dict(handlers or {})
        self._open: set = set()

    @classmethod
    def read(
        cls,
        d: Derivation,
        tid: TranslationId,
        handlers: Optional[Mapping[Effect, HandlerType]] = None,
    ) -> "TypeTranslation":
        reflect_types: Dict[MonadDef, Any] = {}
        first_handlers: Dict[Effect, HandlerType] = {}
        for node in d.walk():
            if node.rule == "reflect":
                reflect_types.setdefault(node.extra[0], node.type.vtype)
            elif node.rule == "handle":
                first_handlers.setdefault(node.extra.in_effect, node.extra)
        first_handlers.update(handlers or {})
        return cls(tid, reflect_types, first_handlers)

    def __call__(self, ty):
        return _map_types(ty, self._effect)

    def _effect(self, effect: Effect) -> Effect:
        if effect in self._open:
            raise TranslationError(f"the translation of {effect} mentions itself")
        self._open.add(effect)
        try:
            if isinstance(effect, MonStack) and self.tid.target is Calculus.EFF:
                return self.reflect_effect(effect)
            if isinstance(effect, EffOps) and self.tid.target is Calculus.DEL:
                htype = self._handler(effect)
                return push_answer(self(htype.out_effect), self.answer(htype))
        finally:
            self._open.discard(effect)
        raise TranslationError(f"{self.tid} has no counterpart for {effect}")

    def reflection_type(self, monad: MonadDef):
        return self.reflect_types.get(monad, UnitT())

    def reflect_effect(self, stack: MonStack) -> Effect:
        """``{reflect_op : U E (C[A]) -> A}`` for the top layer ``C`` over the layers ``E``."""
        below, monad = pop_monad(stack)
        a = self.reflection_type(monad)
        param = UType(self(below), self(carrier_at(monad, a)))
        return ops_effect({REFLECT_OP: (param, self(a))})

    def reify_handler(self, monad: MonadDef, ann: ReifyType) -> HandlerType:
        return HandlerType(
            self(ann.vtype),
            self(push_monad(ann.effect, monad)),
            self(carrier_at(monad, ann.vtype)),
            self(ann.effect),
        )

    def _handler(self, effect: Effect) -> HandlerType:
        htype = self.handlers.get(effect)
        if htype is None:
            raise TranslationError(f"no handler fixes the answer type of {effect}")
        return htype

    def answer_for(self, effect: Effect) -> CType:
        return self.answer(self._handler(effect))

    def answer(self, htype: HandlerType) -> CType:
        """``U E (D -> C) -> C`` with ``D`` the dispatcher's variant over the clauses."""
        out_c, out_e = self(htype.out_ctype), self(htype.out_effect)
        arms = {
            op: Prod(self(param), UType(out_e, Fun(self(result), out_c)))
            for op, (param, result) in effect_ops(htype.in_effect).items()
        }
        return Fun(UType(out_e, Fun(Variant.of(arms), out_c)), out_c)

    def op_result(self, effect: Optional[Effect], op: str):
        arity = effect_ops(effect) if effect is not None else {}
        return self(arity[op][1]) if op in arity else None


def cont_for_reset(ann: Optional[ResetType]) -> MonadDef:
    if ann is None:
        return cont_monad()
    return cont_monad(
        translate_type_del_to_mon(ann.effect), translate_type_del_to_mon(ann.answer)
    )


# ---------------------------------------------------------------------------
# Coercions
# ---------------------------------------------------------------------------


def coercion_handler(source: Effect, target: Effect, vtype) -> Handler:
    """
    The trivial handler re-raising every operation of ``source`` into ``target``.

    ``{return x -> return x} + {op(p; k) -> let r <- op p in force k r}``,
    typed ``A ! source => F A ! target``.

    Raises:
        CoercionError: If ``source`` is not included in ``target``
    """
    wanted = effect_ops(source)
    available = effect_ops(target)
    for op, sig in wanted.items():
        if available.get(op) != sig:
            raise CoercionError(f"operation {op} of the source effect is not in the target effect")
    clauses = tuple(
        (op, Let(OpCall(op, Var(1)), force_app(Var(1), Var(0)))) for op in sorted(wanted)
    )
    return Handler(Return(Var(0)), clauses, HandlerType(vtype, source, Returner(vtype), target))


# ---------------------------------------------------------------------------
# Term translation
# ---------------------------------------------------------------------------


def _check_reserved(node: Node) -> None:
    if isinstance(node, OpCall) and node.op in RESERVED_OPS:
        raise TranslationError(f"operation name {node.op!r} is reserved by the translations")
    if isinstance(node, Handler):
        clash = RESERVED_OPS.intersection(node.op_names)
        if clash:
            raise TranslationError(f"operation name {sorted(clash)[0]!r} is reserved")
    if isinstance(node, Inj) and node.label == RET_LABEL:
        raise TranslationError(f"label {RET_LABEL!r} is reserved by the translations")
    if isinstance(node, Case) and node.arm(RET_LABEL) is not None:
        raise TranslationError(f"label {RET_LABEL!r} is reserved by the translations")
    for _, child, _, _ in node.children():
        _check_reserved(child)


class Translator:
    """Applies one translation to terms; see the module docstring for the clauses."""

    def __init__(
        self,
        tid: TranslationId,
        op_names: Sequence[str] = (),
        types: Optional[TypeTranslation] = None,
    ):
        self.tid = tid
        self.op_names = tuple(sorted(op_names))
        self.types = types
        # ambient source effects, innermost last; tracked only with types
        self.effects: List[Effect] = []

    # -- annotations ------------------------------------------------------

    def annotation(self, ty):
        if ty is None:
            return None
        if self.types is not None:
            return self.types(ty)
        if (self.tid.source, self.tid.target) == (Calculus.DEL, Calculus.MON):
            return translate_type_del_to_mon(ty)
        return ty if is_effect_free(ty) else None

    def _under(self, effect: Optional[Effect], node: Node) -> Node:
        if self.types is None or effect is None:
            return self(node)
        self.effects.append(effect)
        try:
            return self(node)
        finally:
            self.effects.pop()

    # -- traversal --------------------------------------------------------

    def __call__(self, node: Node) -> Node:
        if isinstance(node, Var):
            return node
        handler = getattr(self, f"_{type(node).__name__.lower()}", None)
        if handler is not None and type(node) in _EXTENSION_NODES:
            return handler(node)
        if isinstance(node, Thunk) and isinstance(node.ann, UType):
            rebuilt = node.map_children(lambda child, _: self._under(node.ann.effect, child))
        else:
            rebuilt = node.map_children(lambda child, _: self(child), closed_fn=self)
        attr = rebuilt._annotation
        if attr and getattr(rebuilt, attr) is not None:
            new = self.annotation(getattr(rebuilt, attr))
            if new != getattr(rebuilt, attr):
                rebuilt = dataclasses.replace(rebuilt, **{attr: new})
        return rebuilt

    # -- λdel sources -----------------------------------------------------

    def _shift0(self, node: Shift0) -> Comp:
        body = self(node.body)
        if self.tid.target is Calculus.EFF:
            return OpCall(SHIFT0_OP, Thunk(Lam(body)))
        return Reflect(Lam(body))

    def _dollar(self, node: Dollar) -> Comp:
        body, cont = self(node.body), self(node.cont)
        if self.tid.target is Calculus.EFF:
            clause = force_app(Var(1), Var(0))
            return Handle(body, Handler(cont, ((SHIFT0_OP, clause),)))
        return App(Reify(cont_for_reset(node.ann), body), Thunk(Lam(cont)))

    # -- λmon sources -----------------------------------------------------

    def _reflect(self, node: Reflect) -> Comp:
        body = self(node.body)
        if self.tid.target is Calculus.EFF:
            return OpCall(REFLECT_OP, Thunk(body))
        if self.tid.variant is TranslationVariant.NESTED:
            # shift0 k -> shift0 b -> force b (thunk M, thunk fun x -> reset force k x as z in force b z)
            k = Thunk(Lam(Dollar(force_app(Var(2), Var(0)), force_app(Var(2), Var(0)))))
            return Shift0(Shift0(force_app(Var(0), Pair(Thunk(body.shift(2)), k))))
        # shift0 k -> fun b -> force b (thunk M, thunk fun x -> force k x b)
        k = Thunk(Lam(force_app(Var(2), Var(0), Var(1))))
        return Shift0(Lam(force_app(Var(0), Pair(Thunk(body.shift(2)), k))))

    def _reify(self, node: Reify) -> Comp:
        body = self(node.body)
        unit = self(node.monad.unit_body)
        bind = self(node.monad.bind_body)
        if self.tid.target is Calculus.EFF:
            ann = None
            if self.types is not None and node.ann is not None:
                ann = self.types.reify_handler(node.monad, node.ann)
            return Handle(body, Handler(unit, ((REFLECT_OP, bind),), ann))
        binder = Split(Var(0), bind)
        if self.tid.variant is TranslationVariant.NESTED:
            return Dollar(Dollar(body, Shift0(unit.shift(1))), binder)
        return App(Dollar(body, Lam(unit.shift(1))), Thunk(Lam(binder)))

    # -- λeff sources -----------------------------------------------------

    def _dispatch(self, op: str, arg, k: Comp) -> Comp:
        """``force h (inj op (V, thunk k))`` with ``h`` the innermost binder."""
        return force_app(Var(0), Inj(op, Pair(arg, Thunk(k))))

    def _opcall(self, node: OpCall) -> Comp:
        arg = self(node.arg)
        if self.tid.variant is TranslationVariant.FREE_MONAD:
            leaf = Thunk(Lam(Return(Inj(RET_LABEL, Var(0)))))
            return Reflect(Return(Inj(node.op, Pair(arg, leaf))))
        if self.tid.variant is TranslationVariant.NESTED:
            # shift0 k -> shift0 h -> force h (inj op (V, thunk fun x -> reset force k x as y in force h y))
            k = Lam(Dollar(force_app(Var(2), Var(0)), force_app(Var(2), Var(0))))
            return Shift0(Shift0(self._dispatch(node.op, arg.shift(2), k)))
        # ... -> fun h -> force h (inj op (V, thunk fun y -> force k y h))
        k = Lam(force_app(Var(2), Var(0), Var(1)))
        body = Lam(self._dispatch(node.op, arg.shift(2), k))
        if self.tid.target is Calculus.DEL:
            if self.types is None:
                return Shift0(body)
            ambient = self.effects[-1] if self.effects else None
            return Shift0(body, self.types.op_result(ambient, node.op))
        return Reflect(Lam(body))

    def _handle(self, node: Handle) -> Comp:
        htype = node.handler.ann
        body = self._under(htype and htype.in_effect, node.body)
        ret = self._under(htype and htype.out_effect, node.handler.ret)
        ops = tuple(
            (op, self._under(htype and htype.out_effect, clause)) for op, clause in node.handler.ops
        )
        if self.tid.variant is TranslationVariant.FREE_MONAD:
            return self._free_handle(body, ret, ops)
        dispatcher = Case(Var(0), _pair_clauses(ops, 2))
        if self.tid.variant is TranslationVariant.NESTED:
            return Dollar(Dollar(body, Shift0(ret.shift(1))), dispatcher)
        if self.tid.target is Calculus.DEL:
            reset = None
            if self.types is not None and htype is not None:
                reset = ResetType(
                    self.types(htype.out_effect), self.types.answer_for(htype.in_effect)
                )
            return App(Dollar(body, Lam(ret.shift(1)), reset), Thunk(Lam(dispatcher)))
        return App(
            App(Reify(cont_monad(), body), Thunk(Lam(Lam(ret.shift(1))))),
            Thunk(Lam(dispatcher)),
        )

    def _free_handle(self, body: Comp, ret: Comp, ops) -> Comp:
        """``let t <- reify[Free] M in fix(interp) t``."""
        interp = free_interpreter(Handler(ret, ops), self.op_names)
        return Let(Reify(free_monad(self.op_names), body), App(fix(interp), Var(0)))


_EXTENSION_NODES = {Shift0, Dollar, Reflect, Reify, OpCall, Handle}


def free_interpreter(handler: Handler, op_names: Sequence[str] = ()) -> Thunk:
    """
    The functional whose fixed point folds a free-monad tree with ``handler``.

    ``ret x -> N_ret`` and
    ``op (p, k') -> let k <- return thunk(fun x -> let y <- force k' x in force self y) in N_op``.
    Operations in ``op_names`` that the handler does not cover are reflected
    again and the interpretation continues on the resumed tree.

    The clauses of ``handler`` are read in the scope enclosing the ``let``
    that binds the tree.
    """
    # inside interp: y=0, self=1, t=2, outer scope from 3
    arms = [(RET_LABEL, handler.ret.shift(3, 1))]
    handled = dict(handler.ops)
    for op in sorted(set(op_names) | set(handled)):
        clause = handled.get(op)
        if clause is None:
            # split: p=1, k'=0, z=2, y=3, self=4
            leaf = Thunk(Lam(Return(Inj(RET_LABEL, Var(0)))))
            forward = Let(
                Reflect(Return(Inj(op, Pair(Var(1), leaf)))),
                Let(force_app(Var(1), Var(0)), force_app(Var(6), Var(0))),
            )
            arms.append((op, Split(Var(0), forward)))
            continue
        # split binders p=1, k'=0; then let k: k=0, p=2, k'=1, z=3, y=4, self=5, t=6
        resume = Thunk(Lam(Let(force_app(Var(1), Var(0)), force_app(Var(6), Var(0)))))
        moved = clause.shift(1, 1).shift(4, 3)
        arms.append((op, Split(Var(0), Let(Return(resume), moved))))
    return Thunk(Lam(Lam(Case(Var(0), tuple(arms)))))


def free_monad(op_names: Sequence[str]) -> MonadDef:
    """
    Free monad over ``op_names`` with trees encoded as ``ret x | op (p, k)``.

    ``return x -> return (inj ret x)``;
    ``y >>= f -> fix(graft) y f``, grafting ``f`` onto every leaf of ``y``.
    """
    # fun self -> fun y -> fun k -> let t <- force y in case t of ...
    # ret arm: x=0, t=1, k=2
    ret_arm = force_app(Var(2), Var(0))
    arms = [(RET_LABEL, ret_arm)]
    for op in sorted(op_names):
        # split: p=1, k'=0, z=2, t=3, k=4, y=5, self=6; under fun x everything +1
        resume = Thunk(Lam(force_app(Var(7), Thunk(force_app(Var(1), Var(0))), Var(5))))
        arms.append((op, Split(Var(0), Return(Inj(op, Pair(Var(1), resume))))))
    graft = Thunk(Lam(Lam(Lam(Let(Force(Var(1)), Case(Var(0), tuple(arms)))))))
    unit = Return(Inj(RET_LABEL, Var(0)))
    bind = apply(fix(graft), Var(1), Var(0))
    return MonadDef(PLACEHOLDER_ANSWER, unit, bind, name="Free")


def _op_names(node: Node, acc: Optional[set] = None) -> set:
    acc = set() if acc is None else acc
    if isinstance(node, OpCall):
        acc.add(node.op)
    if isinstance(node, Handler):
        acc.update(node.op_names)
    for _, child, _, _ in node.children():
        _op_names(child, acc)
    return acc


def translate(t: Union[Term, Node], tid: TranslationId, op_names: Sequence[str] = ()):
    """
    Translate a term of ``tid.source`` into ``tid.target``.

    Args:
        t: A tagged term or a bare node of the source calculus
        tid: The translation to apply
        op_names: Operations the free-monad variant must encode besides those in ``t``

    Raises:
        TagError: If ``t`` uses constructs outside the source calculus
        TranslationError: If ``t`` uses a reserved operation name or label
    """
    node = t.body if isinstance(t, Term) else t
    check_tags(node, tid.source)
    _check_reserved(node)
    names = set(op_names) | _op_names(node)
    result = Translator(tid, sorted(names))(node)
    return Term(tid.target, result) if isinstance(t, Term) else result


TYPED = {
    TranslationId(Calculus.DEL, Calculus.MON),
    TranslationId(Calculus.MON, Calculus.EFF),
    TranslationId(Calculus.EFF, Calculus.DEL),
}


def translate_typed(
    m: Comp,
    tid: TranslationId,
    expected: Optional[CType] = None,
    handlers: Optional[Mapping[Effect, HandlerType]] = None,
) -> Comp:
    """
    Elaborate the closed program ``m`` and translate it with its annotations.

    The result carries every annotation the target checker needs, so a
    typing failure of the result is a failure of the translation itself.
    For eff -> del, ``handlers`` chooses the handler type that fixes the
    answer type of an operation set; see :class:`TypeTranslation`.

    Raises:
        TypeCheckError: If ``m`` is ill-typed
        TranslationError: If ``tid`` has no type translation, or a type of
            ``m`` has no counterpart in the target
    """
    if tid not in TYPED:
        raise TranslationError(f"{tid} keeps no type annotations")
    check_tags(m, tid.source)
    _check_reserved(m)
    if tid.source is Calculus.DEL:
        return Translator(tid)(elaborate_resets(m, expected=expected))
    d = TypeChecker(tid.source).check_program(m, expected)
    types = TypeTranslation.read(d, tid, handlers)
    elaborated = elaborate(m, expected=d.type, calculus=tid.source)
    logger.debug("typed %s: %d reflection types, %d handler types",
                 tid, len(types.reflect_types), len(types.handlers))
    return Translator(tid, sorted(_op_names(m)), types)(elaborated)


def translate_source(src, tid: TranslationId):
    """
    Translate every definition and ``main`` of a source file.

    Signatures survive only for del -> mon, where types have a translation.
    """
    from .effex_surface import SourceFile

    if src.calculus is not tid.source:
        raise TranslationError(f"{tid} cannot translate a {src.calculus.value} file")
    names = set()
    for _, value in src.definitions:
        _op_names(value, names)
    if src.main is not None:
        _op_names(src.main, names)
    out = SourceFile(tid.target)
    typed = (tid.source, tid.target) == (Calculus.DEL, Calculus.MON)
    for name, ty in src.types.items():
        if typed:
            out.types[name] = translate_type_del_to_mon(ty)
        elif is_effect_free(ty):
            out.types[name] = ty
    if typed:
        for name, eff in src.effects.items():
            out.effects[name] = translate_type_del_to_mon(eff)
    for name, value in src.definitions:
        out.definitions.append((name, translate(value, tid, sorted(names))))
        sig = src.signatures.get(name)
        if sig is not None and typed:
            out.signatures[name] = translate_type_del_to_mon(sig)
    if src.main is not None:
        out.main = translate(src.main, tid, sorted(names))
    return out


# ---------------------------------------------------------------------------
# Administrative normalization
# ---------------------------------------------------------------------------


def admin_count(t: Node) -> Tuple[Node, int]:
    """
    Contract every ``force (thunk M)`` and every ``(fun x -> M) y`` with ``y``
    a variable, anywhere in ``t``.

    Returns:
        The normal form and the number of contractions
    """
    total = 0
    while True:
        hits = 0

        def contract_admin(node: Node) -> Optional[Node]:
            nonlocal hits
            if isinstance(node, Force) and isinstance(node.value, Thunk):
                hits += 1
                return node.value.body
            if isinstance(node, App) and isinstance(node.fun, Lam) and isinstance(node.arg, Var):
                hits += 1
                return instantiate(node.fun.body, node.arg)
            return None

        t = rewrite(t, contract_admin)
        if not hits:
            return t, total
        total += hits


def admin_normalize(t: Node) -> Node:
    return admin_count(t)[0]


# ---------------------------------------------------------------------------
# Congruence steps
# ---------------------------------------------------------------------------


def congruence_steps(t: Node) -> Iterator[Node]:
    """Every term reachable by contracting one redex at any position of ``t``."""
    if isinstance(t, Comp):
        found = contract(t)
        if found is not None:
            yield found[1]
    if isinstance(t, Var):
        return
    for name, _, shape in t._scheme:
        value = getattr(t, name)
        if shape == ONE:
            for reduct in congruence_steps(value):
                yield dataclasses.replace(t, **{name: reduct})
        elif shape == ARMS:
            for i, (key, child) in enumerate(value):
                for reduct in congruence_steps(child):
                    arms = value[:i] + ((key, reduct),) + value[i + 1:]
                    yield dataclasses.replace(t, **{name: arms})


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


@dataclass
class SimStep:
    index: int
    source_rule: str
    mode: str
    status: str  # matched | inconclusive | failed
    target_steps: int = 0
    suspended: int = 0
    path: str = ""  # exact | fast | search
    detail: Optional[Dict[str, str]] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "index": self.index,
            "source_rule": self.source_rule,
            "mode": self.mode,
            "status": self.status,
            "target_steps": self.target_steps,
            "suspended": self.suspended,
            "path": self.path,
        }
        if self.detail:
            data["detail"] = self.detail
        return data


@dataclass
class SimReport:
    translation: str
    mode: str
    steps: List[SimStep] = field(default_factory=list)
    source_status: str = ""
    end_to_end: Optional[bool] = None

    @property
    def ok(self) -> bool:
        return all(s.status == "matched" for s in self.steps) and self.end_to_end is not False

    @property
    def inconclusive(self) -> int:
        return sum(1 for s in self.steps if s.status == "inconclusive")

    @property
    def failed(self) -> Optional[SimStep]:
        return next((s for s in self.steps if s.status == "failed"), None)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "translation": self.translation,
            "mode": self.mode,
            "ok": self.ok,
            "source_status": self.source_status,
            "end_to_end": self.end_to_end,
            "inconclusive": self.inconclusive,
            "steps": [s.to_dict() for s in self.steps],
        }

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([s.to_dict() for s in self.steps])


def _match_exact(start: Node, goal: Node, depth: int) -> Tuple[str, int]:
    current = start
    for count in range(1, depth + 1):
        stepped = step(current)
        if stepped is None:
            return "failed", count - 1
        current = stepped[2]
        if current == goal:
            return "matched", count
    return "inconclusive", depth


def _match_congruence(
    start: Node, goal: Node, depth: int, max_states: int
) -> Tuple[str, int, int, str]:
    """Returns ``(status, target steps, suspended redexes, path)``."""
    goal = admin_normalize(goal)
    fast: List[Tuple[Node, int]] = []
    current = start
    for count in range(1, depth + 1):
        stepped = step(current)
        if stepped is None:
            break
        current = stepped[2]
        normal, suspended = admin_count(current)
        if normal == goal:
            return "matched", count, suspended, "fast"
        fast.append((normal, count))

    # breadth-first search over congruence steps, seeded with the fast path
    seen = {state for state, _ in fast}
    queue = deque(fast)
    exhausted = True
    while queue:
        state, count = queue.popleft()
        if count >= depth:
            exhausted = False
            continue
        for reduct in congruence_steps(state):
            normal, suspended = admin_count(reduct)
            if normal == goal:
                return "matched", count + 1, suspended, "search"
            if normal in seen:
                continue
            if len(seen) >= max_states:
                return "inconclusive", count + 1, 0, "search"
            seen.add(normal)
            queue.append((normal, count + 1))
        logger.debug(f"search frontier {len(queue)}, {len(seen)} state(s) seen")
    return ("failed" if exhausted else "inconclusive"), depth, 0, "search"


def simulate_check(
    src: Comp,
    tid: TranslationId,
    fuel: int = 10_000,
    depth: int = 32,
    max_states: int = 20_000,
) -> SimReport:
    """
    Check that the target simulates every step of the source run.

    In exact mode the target must reach the translation of the next source
    term by plain steps. Otherwise both sides are compared up to
    administrative normalization, first along the deterministic target run
    and then by a bounded breadth-first search over steps at any position.
    A search that hits ``depth`` or ``max_states`` is inconclusive, not
    failed.
    """
    names = sorted(_op_names(src))
    translator = lambda m: translate(m, tid, names)  # noqa: E731
    trace = run(src, fuel)
    report = SimReport(str(tid), tid.mode, source_status=type(trace.status).__name__)
    terms = [src] + [s.term for s in trace.steps]
    current = translator(terms[0])
    for i, source_step in enumerate(trace.steps):
        goal = translator(terms[i + 1])
        if tid.mode == "exact":
            status, count = _match_exact(current, goal, depth)
            sim = SimStep(i, source_step.rule, tid.mode, status, count, 0, "exact")
        else:
            status, count, suspended, path = _match_congruence(current, goal, depth, max_states)
            sim = SimStep(i, source_step.rule, tid.mode, status, count, suspended, path)
        if status != "matched":
            from .effex_surface import print_term

            sim.detail = {
                "source": print_term(terms[i]),
                "source_next": print_term(terms[i + 1]),
                "target": print_term(current),
                "target_goal": print_term(goal),
            }
            if status == "inconclusive":
                logger.warning(f"{tid}: step {i} ({source_step.rule}) inconclusive")
        report.steps.append(sim)
        current = goal
    if isinstance(trace.status, NormalForm):
        target = run(translator(src), fuel, record=False)
        report.end_to_end = isinstance(target.status, NormalForm) and admin_normalize(
            Return(target.status.value)
        ) == admin_normalize(Return(trace.status.value))
    logger.info(
        f"simulation {tid}: {len(report.steps)} step(s), "
        f"{'ok' if report.ok else 'not ok'}, {report.inconclusive} inconclusive"
    )
    return report


def end_to_end(src: Comp, tid: TranslationId, fuel: int = 100_000) -> Tuple[Any, Any]:
    """Statuses of the source run and of the translated run."""
    source = run(src, fuel, record=False)
    target = run(translate(src, tid), fuel, record=False)
    return source.status, target.status
