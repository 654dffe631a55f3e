"""
Effex Type System
=================

Kinding and bidirectional typing for MAM, λeff, λmon and λdel.

Values synthesize their type when they can (annotated injections and thunks,
variables, pairs); computations are checked against an ambient effect and an
expected computation type, with synthesis available for the forms that
determine their own type. A successful check returns a :class:`Derivation`,
the tree the denotational semantics interprets.

Application first infers its argument and checks the function against
``A -> C``, so unannotated local functions such as ``force (thunk fun x ->
M) V`` need no annotation. Unannotated handlers take their input effect from
the thunk being handled.
"""

from __future__ import annotations

import dataclasses
import logging
import threading
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Tuple

from ..utils.errors import KindError, TypeCheckError
from .effex_ast import (
    App,
    Case,
    Comp,
    CPair,
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
    Prj,
    Reflect,
    Reify,
    ReifyType,
    ResetType,
    Return,
    Shift0,
    Split,
    Thunk,
    UnitV,
    Value,
    Var,
    calculus_display,
    check_tags,
)
from .effex_types import (
    Calculus,
    CProd,
    CType,
    DelStack,
    Effect,
    EffOps,
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
    VType,
    effect_eq,
    effect_ops,
    free_tyvars,
    pop_answer,
    pop_monad,
    push_answer,
    push_monad,
    subst_tyvar,
    type_children,
)

logger = logging.getLogger(__name__)

BIND_TYVAR = "b"

Path = Tuple[int, ...]


@dataclass(frozen=True)
class Env:
    """Type variables in scope and term variable types, newest first."""

    type_vars: FrozenSet[str] = frozenset()
    term_vars: Tuple[VType, ...] = ()

    def extend(self, *types: VType) -> "Env":
        """Bind ``types`` listed outermost first."""
        return Env(self.type_vars, tuple(reversed(types)) + self.term_vars)

    def with_type_vars(self, *names: str) -> "Env":
        return Env(self.type_vars | frozenset(names), self.term_vars)

    def lookup(self, index: int) -> VType:
        return self.term_vars[index]


@dataclass(frozen=True, eq=False)
class Derivation:
    """
    A typing derivation.

    ``type`` is a value type for value rules and a computation type for
    computation rules; ``effect`` is the ambient effect of computation rules.
    Premises follow the child order of the subject, with handler clauses
    after the handled computation. ``labels`` names case arms and op clauses.
    """

    rule: str
    subject: Node
    type: Any
    effect: Optional[Effect] = None
    premises: Tuple["Derivation", ...] = ()
    labels: Tuple[str, ...] = ()
    extra: Any = None

    def walk(self):
        yield self
        for premise in self.premises:
            yield from premise.walk()


@dataclass(frozen=True, eq=False)
class MonadJudgement:
    """Cached outcome of the monad judgement for a layer over ``base``."""

    monad: MonadDef
    base: Effect
    unit: Derivation
    bind: Derivation


def _fmt(ty) -> str:
    from .effex_surface import print_type

    try:
        return print_type(ty)
    except TypeError:
        return str(ty)


def _err(message: str, path: Path, reason: str = "mismatch", expected=None, actual=None):
    return TypeCheckError(
        message,
        reason,
        path,
        None if expected is None else _fmt(expected),
        None if actual is None else _fmt(actual),
    )


def match_type(pattern, target, var: str, binding: Optional[list] = None) -> Optional[VType]:
    """
    First-order matching of ``pattern`` against ``target`` for the variable ``var``.

    Returns the type bound to ``var`` (or ``UnitT`` if ``var`` does not occur),
    or ``None`` when the two do not match.
    """
    binding = [None] if binding is None else binding
    if not _match(pattern, target, var, binding):
        return None
    return binding[0] if binding[0] is not None else UnitT()


def _match(pattern, target, var: str, binding: list) -> bool:
    if isinstance(pattern, TyVar) and pattern.name == var:
        if binding[0] is None:
            binding[0] = target
            return True
        return binding[0] == target
    if type(pattern) is not type(target):
        return False
    if isinstance(pattern, Variant) and pattern.labels != target.labels:
        return False
    if isinstance(pattern, EffOps) and pattern.names != target.names:
        return False
    if isinstance(pattern, DelStack) and len(pattern.layers) != len(target.layers):
        return False
    if isinstance(pattern, (MonStack, TyVar, UnitT, Pure)):
        return pattern == target
    return all(
        _match(p, t, var, binding) for p, t in zip(type_children(pattern), type_children(target))
    )


class TypeChecker:
    """
    Kinding and typing judgements for one calculus.

    The monad judgement is cached by ``(monad, base)``; the cache only grows
    with immutable entries and is guarded by a lock.
    """

    def __init__(self, calculus: Calculus):
        self.calculus = calculus
        self._monads: Dict[Tuple[MonadDef, Effect], MonadJudgement] = {}
        self._lock = threading.Lock()

    # ------------------------------------------------------------------
    # Kinding
    # ------------------------------------------------------------------

    def kind_check(self, ty, env: Env = Env(), path: Path = ()) -> None:
        if isinstance(ty, TyVar):
            if ty.name not in env.type_vars:
                raise KindError(f"unbound type variable {ty.name}", "unbound", path)
            return
        if isinstance(ty, EffOps):
            self._require_calculus(Calculus.EFF, "operation effects", path)
        elif isinstance(ty, MonStack):
            self._require_calculus(Calculus.MON, "monad stacks", path)
            for depth, layer in enumerate(ty.layers):
                base = MonStack(ty.layers[:depth]) if depth else Pure()
                self.check_monad(layer, base, path)
            return
        elif isinstance(ty, DelStack):
            self._require_calculus(Calculus.DEL, "answer-type stacks", path)
        for child in type_children(ty):
            self.kind_check(child, env, path)

    def _require_calculus(self, calculus: Calculus, what: str, path: Path) -> None:
        if self.calculus is not calculus:
            raise KindError(
                f"{what} not available in {calculus_display(self.calculus)}", "wrong-calculus", path
            )

    def check_monad(self, monad: MonadDef, base: Effect, path: Path = ()) -> MonadJudgement:
        """
        The monad judgement: ``unit`` and ``bind`` type-check over ``base``.

        ``x : a |- unit : C`` and
        ``y : U_base C, f : U_base (a -> C[b/a]) |- bind : C[b/a]``, all at ``base``.
        """
        key = (monad, base)
        cached = self._monads.get(key)
        if cached is not None:
            return cached
        logger.debug(f"monad judgement cache miss ({len(self._monads)} cached)")
        self._require_calculus(Calculus.MON, "monad layers", path)
        a = monad.type_var
        carrier = monad.carrier
        try:
            self.kind_check(carrier, Env(frozenset([a])), path)
            self.kind_check(base, Env(), path)
            unit_env = Env(frozenset([a])).extend(TyVar(a))
            unit = self.check_comp(monad.unit_body, unit_env, base, carrier, path + (0, 0))
            shifted = subst_tyvar(carrier, a, TyVar(BIND_TYVAR))
            bind_env = Env(frozenset([a, BIND_TYVAR])).extend(
                UType(base, carrier), UType(base, Fun(TyVar(a), shifted))
            )
            bind = self.check_comp(monad.bind_body, bind_env, base, shifted, path + (0, 1))
        except TypeCheckError as exc:
            name = f" {monad.name}" if monad.name else ""
            raise KindError(
                f"ill-formed monad layer{name}: {exc.message}",
                "monad-layer",
                exc.path,
                exc.expected,
                exc.actual,
            ) from exc
        judgement = MonadJudgement(monad, base, unit, bind)
        with self._lock:
            self._monads.setdefault(key, judgement)
        return judgement

    def _kind_annotation(self, ty, env: Env, path: Path) -> None:
        self.kind_check(ty, env, path)

    # ------------------------------------------------------------------
    # Values
    # ------------------------------------------------------------------

    def infer_value(self, v: Value, env: Env, path: Path = ()) -> Derivation:
        if isinstance(v, Var):
            if v.index >= len(env.term_vars):
                raise _err(f"unbound variable index {v.index}", path, "unbound")
            return Derivation("var", v, env.lookup(v.index))
        if isinstance(v, UnitV):
            return Derivation("unit", v, UnitT())
        if isinstance(v, Pair):
            d1 = self.infer_value(v.fst, env, path + (0,))
            d2 = self.infer_value(v.snd, env, path + (1,))
            return Derivation("pair", v, Prod(d1.type, d2.type), premises=(d1, d2))
        if isinstance(v, Inj):
            if v.ann is None:
                raise _err(f"injection {v.label} needs a type annotation", path, "missing-annotation")
            return self.check_value(v, v.ann, env, path)
        if isinstance(v, Thunk):
            if v.ann is None:
                raise _err("thunk needs a type annotation", path, "missing-annotation")
            return self.check_value(v, v.ann, env, path)
        raise TypeError(f"not a value: {v!r}")

    def check_value(self, v: Value, ty: VType, env: Env, path: Path = ()) -> Derivation:
        if isinstance(v, Inj):
            if v.ann is not None:
                if v.ann != ty:
                    raise _err("injection annotation disagrees", path, "mismatch", ty, v.ann)
                self._kind_annotation(v.ann, env, path)
            if not isinstance(ty, Variant):
                raise _err(f"injection {v.label} checked against a non-variant", path, "mismatch", ty)
            arm = ty.lookup(v.label)
            if arm is None:
                raise _err(f"label {v.label} not in variant", path, "mismatch", ty)
            d = self.check_value(v.payload, arm, env, path + (0,))
            return Derivation("inj", v, ty, premises=(d,))
        if isinstance(v, Thunk):
            if v.ann is not None:
                if v.ann != ty:
                    raise _err("thunk annotation disagrees", path, "mismatch", ty, v.ann)
                self._kind_annotation(v.ann, env, path)
            if not isinstance(ty, UType):
                raise _err("thunk checked against a non-thunk type", path, "mismatch", ty)
            d = self.check_comp(v.body, env, ty.effect, ty.ctype, path + (0,))
            return Derivation("thunk", v, ty, premises=(d,))
        if isinstance(v, Pair) and isinstance(ty, Prod):
            d1 = self.check_value(v.fst, ty.fst, env, path + (0,))
            d2 = self.check_value(v.snd, ty.snd, env, path + (1,))
            return Derivation("pair", v, ty, premises=(d1, d2))
        d = self.infer_value(v, env, path)
        if d.type != ty:
            raise _err("value has the wrong type", path, "mismatch", ty, d.type)
        return d

    def _try_infer(self, v: Value, env: Env, path: Path) -> Optional[Derivation]:
        try:
            return self.infer_value(v, env, path)
        except TypeCheckError as exc:
            if exc.reason == "missing-annotation":
                return None
            raise

    # ------------------------------------------------------------------
    # Computations: checking
    # ------------------------------------------------------------------

    def check_comp(
        self, m: Comp, env: Env, effect: Effect, expected: CType, path: Path = ()
    ) -> Derivation:
        if isinstance(m, Return):
            if not isinstance(expected, Returner):
                raise _err("return checked against a non-returner", path, "mismatch", expected)
            d = self.check_value(m.value, expected.vtype, env, path + (0,))
            return Derivation("return", m, expected, effect, (d,))
        if isinstance(m, Let):
            bound = self.synth_comp(m.bound, env, effect, path + (0,))
            if not isinstance(bound.type, Returner):
                raise _err("let binds a non-returner", path + (0,), "mismatch", None, bound.type)
            body = self.check_comp(
                m.body, env.extend(bound.type.vtype), effect, expected, path + (1,)
            )
            return Derivation("let", m, expected, effect, (bound, body))
        if isinstance(m, Force):
            d = self.check_value(m.value, UType(effect, expected), env, path + (0,))
            return Derivation("force", m, expected, effect, (d,))
        if isinstance(m, Lam):
            if not isinstance(expected, Fun):
                raise _err("function checked against a non-function type", path, "mismatch", expected)
            if m.ann is not None:
                self._kind_annotation(m.ann, env, path)
                if m.ann != expected.arg:
                    raise _err("function annotation disagrees", path, "mismatch", expected.arg, m.ann)
            body = self.check_comp(
                m.body, env.extend(expected.arg), effect, expected.result, path + (0,)
            )
            return Derivation("lam", m, expected, effect, (body,))
        if isinstance(m, App):
            arg = self._try_infer(m.arg, env, path + (1,))
            if arg is not None:
                fun = self.check_comp(
                    m.fun, env, effect, Fun(arg.type, expected), path + (0,)
                )
                return Derivation("app", m, expected, effect, (fun, arg))
        if isinstance(m, CPair):
            if not isinstance(expected, CProd):
                raise _err("computation pair checked against a non-product", path, "mismatch", expected)
            d1 = self.check_comp(m.fst, env, effect, expected.fst, path + (0,))
            d2 = self.check_comp(m.snd, env, effect, expected.snd, path + (1,))
            return Derivation("cpair", m, expected, effect, (d1, d2))
        if isinstance(m, Split):
            scrutinee = self.infer_value(m.scrutinee, env, path + (0,))
            if not isinstance(scrutinee.type, Prod):
                raise _err("split of a non-pair", path + (0,), "mismatch", None, scrutinee.type)
            body = self.check_comp(
                m.body,
                env.extend(scrutinee.type.fst, scrutinee.type.snd),
                effect,
                expected,
                path + (1,),
            )
            return Derivation("split", m, expected, effect, (scrutinee, body))
        if isinstance(m, Case):
            if m.ann is not None:
                self._kind_annotation(m.ann, env, path)
                if m.ann != expected:
                    raise _err("case annotation disagrees", path, "mismatch", expected, m.ann)
            return self._case(m, env, effect, expected, path)
        if isinstance(m, OpCall):
            d = self._op_call(m, env, effect, path)
            if d.type != expected:
                raise _err(f"operation {m.op} returns the wrong type", path, "mismatch", expected, d.type)
            return d
        if isinstance(m, Handle):
            return self._handle(m, env, effect, expected, path)
        if isinstance(m, Reflect):
            if not isinstance(expected, Returner):
                raise _err("reflect checked against a non-returner", path, "mismatch", expected)
            self._check_result_annotation(m, expected, env, path)
            base, monad = self._top_monad(effect, path)
            carrier = subst_tyvar(monad.carrier, monad.type_var, expected.vtype)
            body = self.check_comp(m.body, env, base, carrier, path + (0,))
            return Derivation("reflect", m, expected, effect, (body,), extra=(monad, base))
        if isinstance(m, Reify):
            return self._reify(m, env, effect, expected, path)
        if isinstance(m, Shift0):
            if not isinstance(expected, Returner):
                raise _err("shift0 checked against a non-returner", path, "mismatch", expected)
            self._check_result_annotation(m, expected, env, path)
            if not isinstance(effect, DelStack):
                raise _err("shift0 needs a nonempty answer-type stack", path, "empty-stack", None, effect)
            outer, answer = pop_answer(effect)
            k_type = UType(outer, Fun(expected.vtype, answer))
            body = self.check_comp(m.body, env.extend(k_type), outer, answer, path + (0,))
            return Derivation("shift0", m, expected, effect, (body,))
        if isinstance(m, Dollar):
            if m.ann is not None:
                self._kind_annotation(m.ann.effect, env, path)
                self._kind_annotation(m.ann.answer, env, path)
                if m.ann != ResetType(effect, expected):
                    raise _err(
                        "reset annotation disagrees", path, "mismatch", expected, m.ann.answer
                    )
            inner = push_answer(effect, expected)
            body = self.synth_comp(m.body, env, inner, path + (0,))
            if not isinstance(body.type, Returner):
                raise _err("reset body must be a returner", path + (0,), "mismatch", None, body.type)
            cont = self.check_comp(
                m.cont, env.extend(body.type.vtype), effect, expected, path + (1,)
            )
            return Derivation("dollar", m, expected, effect, (body, cont))

        d = self.synth_comp(m, env, effect, path)
        if d.type != expected:
            raise _err("computation has the wrong type", path, "mismatch", expected, d.type)
        return d

    # ------------------------------------------------------------------
    # Computations: synthesis
    # ------------------------------------------------------------------

    def synth_comp(
        self, m: Comp, env: Env, effect: Effect, path: Path = (), hints: Tuple[VType, ...] = ()
    ) -> Derivation:
        """
        Synthesize the type of ``m``; ``hints`` are the types of arguments
        ``m`` is about to be applied to, used by unannotated functions.
        """
        if isinstance(m, Return):
            d = self.infer_value(m.value, env, path + (0,))
            return Derivation("return", m, Returner(d.type), effect, (d,))
        if isinstance(m, Force):
            v = m.value
            if isinstance(v, Thunk) and v.ann is None:
                body = self.synth_comp(v.body, env, effect, path + (0, 0), hints)
                thunk = Derivation("thunk", v, UType(effect, body.type), premises=(body,))
                return Derivation("force", m, body.type, effect, (thunk,))
            d = self.infer_value(v, env, path + (0,))
            if not isinstance(d.type, UType):
                raise _err("force of a non-thunk", path + (0,), "mismatch", None, d.type)
            if not effect_eq(d.type.effect, effect):
                raise _err(
                    "thunk effect differs from the ambient effect",
                    path,
                    "effect-mismatch",
                    effect,
                    d.type.effect,
                )
            return Derivation("force", m, d.type.ctype, effect, (d,))
        if isinstance(m, Let):
            bound = self.synth_comp(m.bound, env, effect, path + (0,))
            if not isinstance(bound.type, Returner):
                raise _err("let binds a non-returner", path + (0,), "mismatch", None, bound.type)
            body = self.synth_comp(m.body, env.extend(bound.type.vtype), effect, path + (1,), hints)
            return Derivation("let", m, body.type, effect, (bound, body))
        if isinstance(m, Lam):
            arg = m.ann if m.ann is not None else (hints[0] if hints else None)
            if arg is None:
                raise _err("function needs a type annotation", path, "missing-annotation")
            if m.ann is not None:
                self._kind_annotation(m.ann, env, path)
                if hints and hints[0] != m.ann:
                    raise _err("argument has the wrong type", path, "mismatch", m.ann, hints[0])
            body = self.synth_comp(m.body, env.extend(arg), effect, path + (0,), hints[1:])
            return Derivation("lam", m, Fun(arg, body.type), effect, (body,))
        if isinstance(m, App):
            arg = self._try_infer(m.arg, env, path + (1,))
            fun_hints = ((arg.type,) if arg is not None else ()) + hints
            fun = self.synth_comp(m.fun, env, effect, path + (0,), fun_hints if arg is not None else ())
            if not isinstance(fun.type, Fun):
                raise _err("application of a non-function", path + (0,), "mismatch", None, fun.type)
            if arg is None:
                arg = self.check_value(m.arg, fun.type.arg, env, path + (1,))
            elif arg.type != fun.type.arg:
                raise _err("argument has the wrong type", path + (1,), "mismatch", fun.type.arg, arg.type)
            return Derivation("app", m, fun.type.result, effect, (fun, arg))
        if isinstance(m, CPair):
            d1 = self.synth_comp(m.fst, env, effect, path + (0,))
            d2 = self.synth_comp(m.snd, env, effect, path + (1,))
            return Derivation("cpair", m, CProd(d1.type, d2.type), effect, (d1, d2))
        if isinstance(m, Prj):
            d = self.synth_comp(m.comp, env, effect, path + (0,))
            if not isinstance(d.type, CProd):
                raise _err("projection of a non-product", path + (0,), "mismatch", None, d.type)
            component = d.type.fst if m.side == 1 else d.type.snd
            return Derivation("prj", m, component, effect, (d,), extra=m.side)
        if isinstance(m, Split):
            scrutinee = self.infer_value(m.scrutinee, env, path + (0,))
            if not isinstance(scrutinee.type, Prod):
                raise _err("split of a non-pair", path + (0,), "mismatch", None, scrutinee.type)
            body = self.synth_comp(
                m.body, env.extend(scrutinee.type.fst, scrutinee.type.snd), effect, path + (1,), hints
            )
            return Derivation("split", m, body.type, effect, (scrutinee, body))
        if isinstance(m, Case):
            if m.ann is not None:
                return self.check_comp(m, env, effect, m.ann, path)
            if not m.arms:
                raise _err("empty case needs a type annotation", path, "missing-annotation")
            return self._case(m, env, effect, None, path, hints)
        if isinstance(m, OpCall):
            return self._op_call(m, env, effect, path)
        if isinstance(m, Handle):
            if m.handler.ann is None:
                raise _err("handler needs a type annotation here", path, "missing-annotation")
            return self._handle(m, env, effect, m.handler.ann.out_ctype, path)
        if isinstance(m, Reflect):
            if m.ann is not None:
                return self.check_comp(m, env, effect, Returner(m.ann), path)
            base, monad = self._top_monad(effect, path)
            body = self.synth_comp(m.body, env, base, path + (0,))
            a = match_type(monad.carrier, body.type, monad.type_var)
            if a is None:
                raise _err("reflected computation does not fit the monad carrier", path + (0,),
                           "mismatch", monad.carrier, body.type)
            return Derivation("reflect", m, Returner(a), effect, (body,), extra=(monad, base))
        if isinstance(m, Reify):
            if m.ann is not None:
                carrier = subst_tyvar(m.monad.carrier, m.monad.type_var, m.ann.vtype)
                return self._reify(m, env, effect, carrier, path)
            self.check_monad(m.monad, effect, path + (0,))
            body = self.synth_comp(m.body, env, push_monad(effect, m.monad), path + (1,))
            if not isinstance(body.type, Returner):
                raise _err("reified computation must be a returner", path + (1,), "mismatch",
                           None, body.type)
            carrier = subst_tyvar(m.monad.carrier, m.monad.type_var, body.type.vtype)
            return Derivation("reify", m, carrier, effect, (body,), extra=(m.monad, effect))
        if isinstance(m, Dollar):
            if m.ann is None:
                raise _err("reset needs an answer type here", path, "missing-annotation")
            return self.check_comp(m, env, effect, m.ann.answer, path)
        if isinstance(m, Shift0):
            if m.ann is not None:
                return self.check_comp(m, env, effect, Returner(m.ann), path)
            raise _err("shift0 result type cannot be synthesized", path, "missing-annotation")
        raise TypeError(f"not a computation: {m!r}")

    # ------------------------------------------------------------------
    # Shared rules
    # ------------------------------------------------------------------

    def _case(
        self,
        m: Case,
        env: Env,
        effect: Effect,
        expected: Optional[CType],
        path: Path,
        hints: Tuple[VType, ...] = (),
    ) -> Derivation:
        scrutinee = self.infer_value(m.scrutinee, env, path + (0,))
        ty = scrutinee.type
        if not isinstance(ty, Variant):
            raise _err("case of a non-variant", path + (0,), "mismatch", None, ty)
        labels = tuple(label for label, _ in m.arms)
        if labels != ty.labels:
            raise _err(
                f"case arms {list(labels)} do not match variant labels {list(ty.labels)}",
                path,
                "mismatch",
                ty,
            )
        arms: List[Derivation] = []
        for pos, ((label, body), (_, arm_ty)) in enumerate(zip(m.arms, ty.arms), start=1):
            if expected is None:
                d = self.synth_comp(body, env.extend(arm_ty), effect, path + (pos,), hints)
                expected = d.type
            else:
                d = self.check_comp(body, env.extend(arm_ty), effect, expected, path + (pos,))
            arms.append(d)
        return Derivation("case", m, expected, effect, (scrutinee, *arms), labels=labels)

    def _op_call(self, m: OpCall, env: Env, effect: Effect, path: Path) -> Derivation:
        arity = effect.arity(m.op) if isinstance(effect, EffOps) else None
        if arity is None:
            raise _err(f"operation {m.op} not in the ambient effect", path, "effect-mismatch", None, effect)
        param, result = arity
        d = self.check_value(m.arg, param, env, path + (0,))
        return Derivation("op", m, Returner(result), effect, (d,), extra=m.op)

    def _top_monad(self, effect: Effect, path: Path) -> Tuple[Effect, MonadDef]:
        if not isinstance(effect, MonStack):
            raise _err("reflect needs a monad layer in the ambient effect", path, "monad-layer",
                       None, effect)
        return pop_monad(effect)

    def _check_result_annotation(self, m: Comp, expected: Returner, env: Env, path: Path) -> None:
        if m.ann is None:
            return
        self._kind_annotation(m.ann, env, path)
        if m.ann != expected.vtype:
            raise _err(f"{type(m).__name__.lower()} annotation disagrees", path, "mismatch",
                       expected.vtype, m.ann)

    def _reify(self, m: Reify, env: Env, effect: Effect, expected: CType, path: Path) -> Derivation:
        self.check_monad(m.monad, effect, path + (0,))
        if m.ann is not None:
            self._kind_annotation(m.ann.vtype, env, path)
            if not effect_eq(m.ann.effect, effect):
                raise _err("reify annotation names another effect", path, "effect-mismatch",
                           effect, m.ann.effect)
            a = m.ann.vtype
            if subst_tyvar(m.monad.carrier, m.monad.type_var, a) != expected:
                raise _err("reify annotation disagrees", path, "mismatch", expected, a)
        else:
            a = match_type(m.monad.carrier, expected, m.monad.type_var)
            if a is None:
                raise _err("reify result does not fit the monad carrier", path, "mismatch",
                           expected, m.monad.carrier)
            if m.monad.type_var not in free_tyvars(m.monad.carrier):
                return self.synth_comp(m, env, effect, path)
        body = self.check_comp(m.body, env, push_monad(effect, m.monad), Returner(a), path + (1,))
        return Derivation("reify", m, expected, effect, (body,), extra=(m.monad, effect))

    def _handle(
        self, m: Handle, env: Env, effect: Effect, expected: CType, path: Path
    ) -> Derivation:
        handler = m.handler
        if handler.ann is not None:
            htype = handler.ann
            self.kind_check(htype, env, path + (1,))
            body = self.check_comp(
                m.body, env, htype.in_effect, Returner(htype.in_vtype), path + (0,)
            )
        else:
            in_effect = self._guess_effect(m.body, env, path + (0,))
            body = self.synth_comp(m.body, env, in_effect, path + (0,))
            if not isinstance(body.type, Returner):
                raise _err("handled computation must be a returner", path + (0,), "mismatch",
                           None, body.type)
            htype = HandlerType(body.type.vtype, in_effect, expected, effect)
        if htype.out_ctype != expected:
            raise _err("handler result type disagrees", path, "mismatch", expected, htype.out_ctype)
        if not effect_eq(htype.out_effect, effect):
            raise _err("handler output effect differs from the ambient effect", path,
                       "effect-mismatch", effect, htype.out_effect)
        clauses = self.check_handler(handler, htype, env, path + (1,))
        return Derivation(
            "handle",
            m,
            expected,
            effect,
            (body, *clauses),
            labels=handler.op_names,
            extra=htype,
        )

    def _guess_effect(self, m: Comp, env: Env, path: Path) -> Effect:
        head = m
        while True:
            if isinstance(head, App):
                head = head.fun
            elif isinstance(head, Let):
                head = head.bound
            else:
                break
        if isinstance(head, Force):
            d = self._try_infer(head.value, env, path)
            if d is not None and isinstance(d.type, UType):
                return d.type.effect
        raise _err("cannot determine the handled effect; annotate the handler", path,
                   "missing-annotation")

    def check_handler(
        self, handler: Handler, htype: HandlerType, env: Env = Env(), path: Path = ()
    ) -> List[Derivation]:
        """Check every clause of ``handler`` against ``htype``; return the clause derivations."""
        if handler.ann is not None and handler.ann != htype:
            raise _err("handler annotation disagrees", path, "mismatch", htype, handler.ann)
        in_ops = effect_ops(htype.in_effect)
        if set(handler.op_names) != set(in_ops):
            missing = sorted(set(in_ops) - set(handler.op_names))
            extra = sorted(set(handler.op_names) - set(in_ops))
            raise _err(
                f"handler clauses must match the handled operations exactly "
                f"(missing {missing}, extra {extra})",
                path,
                "op-set-mismatch",
                htype.in_effect,
            )
        out_c, out_e = htype.out_ctype, htype.out_effect
        ret = self.check_comp(handler.ret, env.extend(htype.in_vtype), out_e, out_c, path + (0,))
        clauses = [ret]
        for pos, (op, body) in enumerate(handler.ops, start=1):
            param, result = in_ops[op]
            k_type = UType(out_e, Fun(result, out_c))
            clauses.append(
                self.check_comp(body, env.extend(param, k_type), out_e, out_c, path + (pos,))
            )
        return clauses

    # ------------------------------------------------------------------
    # Programs
    # ------------------------------------------------------------------

    def check_program(self, m: Comp, expected: Optional[CType] = None) -> Derivation:
        """Type a closed computation at the empty effect."""
        check_tags(m, self.calculus)
        if expected is None:
            return self.synth_comp(m, Env(), Pure())
        return self.check_comp(m, Env(), Pure(), expected)


# ---------------------------------------------------------------------------
# Module-level judgements
# ---------------------------------------------------------------------------


def kind_check(ty, env: Env = Env(), calculus: Calculus = Calculus.MAM) -> None:
    """Raise :class:`KindError` unless ``ty`` is well-kinded in ``calculus``."""
    TypeChecker(calculus).kind_check(ty, env)


def infer_value(v: Value, env: Env = Env(), calculus: Calculus = Calculus.MAM) -> VType:
    return TypeChecker(calculus).infer_value(v, env).type


def check_comp(
    m: Comp,
    env: Env = Env(),
    effect: Effect = Pure(),
    expected: Optional[CType] = None,
    calculus: Calculus = Calculus.MAM,
) -> Derivation:
    """Check ``m`` at ``effect`` against ``expected`` (or synthesize when ``None``)."""
    checker = TypeChecker(calculus)
    check_tags(m, calculus)
    if expected is None:
        return checker.synth_comp(m, env, effect)
    return checker.check_comp(m, env, effect, expected)


def check_monad(monad: MonadDef, base: Effect = Pure()) -> MonadJudgement:
    return TypeChecker(Calculus.MON).check_monad(monad, base)


def first_untypeable(
    terms: Iterable[Comp], expected: CType, calculus: Calculus
) -> Optional[Tuple[int, TypeCheckError]]:
    """
    The first closed term of ``terms`` that does not check at ``expected``.

    Returns:
        ``(index, error)``, or ``None`` when every term checks
    """
    checker = TypeChecker(calculus)
    for index, term in enumerate(terms):
        try:
            checker.check_program(term, expected)
        except TypeCheckError as exc:
            return index, exc
    return None


# ---------------------------------------------------------------------------
# Elaboration
# ---------------------------------------------------------------------------

ELABORATED = (Thunk, Inj, Lam, Reflect, Shift0, Reify, Dollar, Case, Handle)


def _derived_annotation(node: Node, d: Derivation):
    if isinstance(node, (Thunk, Inj)):
        return d.type
    if isinstance(node, Lam):
        return d.type.arg
    if isinstance(node, (Reflect, Shift0)):
        return d.type.vtype
    if isinstance(node, Reify):
        return ReifyType(d.effect, d.premises[0].type.vtype)
    if isinstance(node, Dollar):
        return ResetType(d.effect, d.type)
    if isinstance(node, Case):
        return node.ann if node.arms else d.type
    return None


def _annotate(node: Node, d: Derivation, kinds: Tuple[type, ...]) -> Node:
    """Rebuild ``node`` with the annotations read off ``d``; premises follow the children."""
    if isinstance(node, Var):
        return node
    premises = iter(d.premises)

    def child(sub: Node, _) -> Node:
        return _annotate(sub, next(premises), kinds)

    if isinstance(node, Handle):
        body = child(node.body, 0)
        handler = node.handler.map_children(child)
        if Handle in kinds:
            handler = dataclasses.replace(handler, ann=d.extra)
        return Handle(body, handler)
    rebuilt = node.map_children(child)
    if not isinstance(rebuilt, kinds):
        return rebuilt
    ann = _derived_annotation(rebuilt, d)
    return rebuilt if ann is None else dataclasses.replace(rebuilt, ann=ann)


def elaborate(
    m: Comp,
    env: Env = Env(),
    effect: Effect = Pure(),
    expected: Optional[CType] = None,
    calculus: Calculus = Calculus.MAM,
) -> Comp:
    """
    Annotate ``m`` with the types of its derivation.

    Thunks, injections, functions, reflects, reifies, shift0s, resets,
    handlers and empty cases all receive the annotation that lets the checker
    synthesize them anywhere; monad definitions are left as written. The
    contraction rules carry these annotations over to the continuations they
    build, so every term of a run from an elaborated program type-checks.

    Raises:
        TypeCheckError: If ``m`` is ill-typed
    """
    return _annotate(m, check_comp(m, env, effect, expected, calculus), ELABORATED)


def elaborate_resets(
    m: Comp,
    env: Env = Env(),
    effect: Effect = Pure(),
    expected: Optional[CType] = None,
) -> Comp:
    """
    Annotate every reset in ``m`` with its ambient effect and answer type.

    Raises:
        TypeCheckError: If ``m`` is ill-typed
    """
    return _annotate(m, check_comp(m, env, effect, expected, Calculus.DEL), (Dollar,))


# ---------------------------------------------------------------------------
# Whole-file checking
# ---------------------------------------------------------------------------


@dataclass
class CheckEntry:
    name: str
    kind: str  # def | handler | effect | monad | type | main
    type: Any = None
    error: Optional[TypeCheckError] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"name": self.name, "kind": self.kind, "ok": self.ok}
        if self.type is not None:
            from .effex_surface import print_type

            data["type"] = print_type(self.type)
        if self.error is not None:
            data["error"] = self.error.to_dict()
        return data


@dataclass
class CheckReport:
    calculus: Calculus
    entries: List[CheckEntry] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(entry.ok for entry in self.entries)

    def type_of(self, name: str):
        for entry in self.entries:
            if entry.name == name:
                return entry.type
        raise KeyError(name)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "calculus": self.calculus.value,
            "ok": self.ok,
            "entries": [entry.to_dict() for entry in self.entries],
        }


def check_source(src) -> CheckReport:
    """Check every declaration and ``main`` of a parsed source file."""
    checker = TypeChecker(src.calculus)
    report = CheckReport(src.calculus)

    def attempt(name: str, kind: str, fn) -> None:
        try:
            report.entries.append(CheckEntry(name, kind, fn()))
        except TypeCheckError as exc:
            report.entries.append(CheckEntry(name, kind, None, exc))

    for name, ty in src.types.items():
        if name != "bit":
            attempt(name, "type", lambda ty=ty: (checker.kind_check(ty, Env()), ty)[1])
    for name, eff in src.effects.items():
        attempt(name, "effect", lambda eff=eff: (checker.kind_check(eff, Env()), eff)[1])
    for name, monad in src.monads.items():
        attempt(name, "monad", lambda monad=monad: (checker.check_monad(monad, Pure()), monad.carrier)[1])
    for name, handler in src.handlers.items():
        if handler.ann is not None:
            attempt(
                name,
                "handler",
                lambda h=handler: (checker.check_handler(h, h.ann, Env()), h.ann)[1],
            )
    for name, value in src.definitions:
        sig = src.signatures.get(name)
        if sig is not None:
            attempt(name, "def", lambda v=value, s=sig: checker.check_value(v, s, Env()).type)
        elif isinstance(value, (Thunk, Inj)) and value.ann is None:
            continue
        else:
            attempt(name, "def", lambda v=value: checker.infer_value(v, Env()).type)
    if src.main is not None:
        def main_type():
            check_tags(src.main, src.calculus)
            return checker.synth_comp(src.main, Env(), Pure()).type

        attempt("main", "main", main_type)
    logger.info(f"checked {len(report.entries)} item(s): {'ok' if report.ok else 'errors'}")
    return report
