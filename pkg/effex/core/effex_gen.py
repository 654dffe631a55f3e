"""
Effex Program Generator
=======================

Seeded generators for property tests and the corpus runner.

``ProgramGenerator`` builds closed, well-typed ground returners at the pure
effect by working top-down from a type in checking mode; every position the
checker synthesizes gets an annotated thunk, and candidates the checker still
rejects are drawn again. ``random_term`` builds scope-correct terms with no
typing discipline, for the printer/parser round trip.

Both draw from ``numpy.random.default_rng(seed)`` so a corpus is reproducible
from the seed alone.
"""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import TypeCheckError
from .effex_ast import (
    FLS,
    TRU,
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
    OpCall,
    Pair,
    Prj,
    Reflect,
    Reify,
    Return,
    Shift0,
    Split,
    Thunk,
    UnitV,
    Value,
    Var,
    force_app,
)
from .effex_typesys import TypeChecker
from .effex_types import (
    BIT,
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
    pop_answer,
    pop_monad,
    push_answer,
    push_monad,
    subst_tyvar,
)

logger = logging.getLogger(__name__)

GROUND_TYPES: Tuple[VType, ...] = (UnitT(), BIT, Prod(BIT, BIT))

# operation pool for generated handlers: name -> (parameter, result)
OPERATIONS = {
    "ask": (UnitT(), BIT),
    "emit": (BIT, UnitT()),
    "flip": (UnitT(), BIT),
    "swap": (BIT, BIT),
}

MAX_ATTEMPTS = 200


def state_monad() -> MonadDef:
    """``where a. bit -> F (a * bit)`` with the usual return and bind."""
    carrier = Fun(BIT, Returner(Prod(TyVar("a"), BIT)))
    unit = Lam(Return(Pair(Var(1), Var(0))))
    # fun s -> let r <- force y s in split r as (x, s') in force f x s'
    bind = Lam(Let(force_app(Var(2), Var(0)), Split(Var(0), force_app(Var(4), Var(1), Var(0)))))
    return MonadDef(carrier, unit, bind, name="State")


def exception_monad() -> MonadDef:
    """``where a. F {Err: 1, Ok: a}``."""
    carrier = Returner(Variant.of({"Err": UnitT(), "Ok": TyVar("a")}))
    unit = Return(Inj("Ok", Var(0)))
    bind = Let(
        Force(Var(1)),
        Case(Var(0), (("Err", Return(Inj("Err", UnitV()))), ("Ok", force_app(Var(2), Var(0))))),
    )
    return MonadDef(carrier, unit, bind, name="Exn")


MONADS = (state_monad(), exception_monad())


class ProgramGenerator:
    """
    Random well-typed programs of one calculus.

    Args:
        calculus: Which extension to draw constructs from
        seed: Seed for ``numpy.random.default_rng``
        max_depth: Nesting bound for generated computations
    """

    def __init__(self, calculus: Calculus, seed: int = 2024, max_depth: int = 4):
        self.calculus = calculus
        self.rng = np.random.default_rng(seed)
        self.max_depth = max_depth
        self.checker = TypeChecker(calculus)
        self.rejected = 0

    # -- public -------------------------------------------------------------

    def program(self, ground: Optional[VType] = None) -> Tuple[Comp, Returner]:
        """
        One closed program of type ``F ground`` at the pure effect.

        Returns:
            The program and its type
        """
        if ground is None:
            ground = GROUND_TYPES[self.rng.integers(len(GROUND_TYPES))]
        ctype = Returner(ground)
        for _ in range(MAX_ATTEMPTS):
            m = self.comp(ctype, Pure(), [], self.max_depth)
            try:
                self.checker.check_program(m, ctype)
                return m, ctype
            except TypeCheckError as exc:
                self.rejected += 1
                logger.debug(f"generated candidate rejected: {exc.reason} at {exc.path}")
        logger.warning(f"no well-typed candidate after {MAX_ATTEMPTS} draws; using a leaf")
        return Return(self.value(ground, [], Pure(), 0)), ctype

    def corpus(self, n: int) -> List[Tuple[Comp, Returner]]:
        programs = [self.program() for _ in range(n)]
        logger.info(
            f"generated {n} {self.calculus.value} program(s), {self.rejected} candidate(s) rejected"
        )
        return programs

    # -- helpers ------------------------------------------------------------

    def _flip(self, p: float) -> bool:
        return bool(self.rng.random() < p)

    def _pick(self, items: Sequence):
        return items[int(self.rng.integers(len(items)))]

    def _small_vtype(self, effect: Effect, depth: int) -> VType:
        choices: List[VType] = list(GROUND_TYPES)
        if depth > 1:
            choices.append(UType(effect, Returner(BIT)))
        return self._pick(choices)

    @staticmethod
    def _vars_of(ty, env: List[VType]) -> List[int]:
        return [i for i, t in enumerate(env) if t == ty]

    # -- values -------------------------------------------------------------

    def value(self, ty: VType, env: List[VType], effect: Effect, depth: int) -> Value:
        candidates = self._vars_of(ty, env)
        if candidates and self._flip(0.4):
            return Var(self._pick(candidates))
        if isinstance(ty, UnitT):
            return UnitV()
        if ty == BIT:
            return TRU if self._flip(0.5) else FLS
        if isinstance(ty, Prod):
            return Pair(
                self.value(ty.fst, env, effect, depth), self.value(ty.snd, env, effect, depth)
            )
        if isinstance(ty, Variant):
            label, arm = self._pick(ty.arms)
            return Inj(label, self.value(arm, env, effect, depth), ty)
        if isinstance(ty, UType):
            return Thunk(self.comp(ty.ctype, ty.effect, env, max(depth - 1, 0)), ty)
        raise TypeError(f"cannot generate a value of type {ty}")

    # -- computations -------------------------------------------------------

    def synthesizable(self, ctype: CType, effect: Effect, env: List[VType], depth: int) -> Comp:
        """A computation whose type the checker can synthesize."""
        m = self.comp(ctype, effect, env, depth)
        if isinstance(m, Return):
            return m
        return Force(Thunk(m, UType(effect, ctype)))

    def comp(self, ctype: CType, effect: Effect, env: List[VType], depth: int) -> Comp:
        if depth <= 0:
            return self._leaf(ctype, effect, env)
        options = [self._let, self._app, self._prj, self._force, self._intro]
        if any(isinstance(t, Prod) for t in env):
            options.append(self._split)
        if any(isinstance(t, Variant) for t in env):
            options.append(self._case)
        if self._resumable(ctype, effect, env):
            options += [self._resume, self._resume]
        options += self._extension_options(ctype, effect)
        return self._pick(options)(ctype, effect, env, depth)

    def _leaf(self, ctype: CType, effect: Effect, env: List[VType]) -> Comp:
        if isinstance(ctype, Returner):
            return Return(self.value(ctype.vtype, env, effect, 0))
        if isinstance(ctype, Fun):
            return Lam(self._leaf(ctype.result, effect, [ctype.arg] + env))
        if isinstance(ctype, CProd):
            return CPair(self._leaf(ctype.fst, effect, env), self._leaf(ctype.snd, effect, env))
        raise TypeError(f"cannot generate a computation of type {ctype}")

    def _intro(self, ctype: CType, effect: Effect, env: List[VType], depth: int) -> Comp:
        if isinstance(ctype, Returner):
            return Return(self.value(ctype.vtype, env, effect, depth))
        if isinstance(ctype, Fun):
            return Lam(self.comp(ctype.result, effect, [ctype.arg] + env, depth - 1))
        if isinstance(ctype, CProd):
            return CPair(
                self.comp(ctype.fst, effect, env, depth - 1),
                self.comp(ctype.snd, effect, env, depth - 1),
            )
        raise TypeError(f"cannot generate a computation of type {ctype}")

    def _let(self, ctype, effect, env, depth) -> Comp:
        a = self._small_vtype(effect, depth)
        bound = self.synthesizable(Returner(a), effect, env, depth - 1)
        return Let(bound, self.comp(ctype, effect, [a] + env, depth - 1))

    def _app(self, ctype, effect, env, depth) -> Comp:
        a = self._small_vtype(effect, depth)
        fun = self.comp(Fun(a, ctype), effect, env, depth - 1)
        return App(fun, self.value(a, env, effect, depth - 1))

    def _prj(self, ctype, effect, env, depth) -> Comp:
        other = Returner(self._pick(GROUND_TYPES))
        if self._flip(0.5):
            pair, side = CProd(ctype, other), 1
        else:
            pair, side = CProd(other, ctype), 2
        return Prj(side, self.synthesizable(pair, effect, env, depth - 1))

    def _force(self, ctype, effect, env, depth) -> Comp:
        thunks = self._vars_of(UType(effect, ctype), env)
        if thunks and self._flip(0.5):
            return Force(Var(self._pick(thunks)))
        return Force(Thunk(self.comp(ctype, effect, env, depth - 1), UType(effect, ctype)))

    def _split(self, ctype, effect, env, depth) -> Comp:
        i = self._pick([i for i, t in enumerate(env) if isinstance(t, Prod)])
        ty = env[i]
        return Split(Var(i), self.comp(ctype, effect, [ty.snd, ty.fst] + env, depth - 1))

    def _case(self, ctype, effect, env, depth) -> Comp:
        i = self._pick([i for i, t in enumerate(env) if isinstance(t, Variant)])
        arms = tuple(
            (label, self.comp(ctype, effect, [arm] + env, depth - 1))
            for label, arm in env[i].arms
        )
        return Case(Var(i), arms)

    def _resumable(self, ctype, effect, env) -> List[Tuple[int, VType]]:
        found = []
        for i, t in enumerate(env):
            if (
                isinstance(t, UType)
                and t.effect == effect
                and isinstance(t.ctype, Fun)
                and t.ctype.result == ctype
            ):
                found.append((i, t.ctype.arg))
        return found

    def _resume(self, ctype, effect, env, depth) -> Comp:
        i, arg = self._pick(self._resumable(ctype, effect, env))
        return App(Force(Var(i)), self.value(arg, env, effect, depth - 1))

    # -- extensions ---------------------------------------------------------

    def _extension_options(self, ctype: CType, effect: Effect) -> list:
        options = []
        if self.calculus is Calculus.EFF:
            options.append(self._handle)
            if isinstance(ctype, Returner) and self._ops_returning(ctype.vtype, effect):
                options += [self._op, self._op]
        elif self.calculus is Calculus.MON:
            options.append(self._reify)
            if isinstance(ctype, Returner) and isinstance(effect, MonStack):
                options += [self._reflect, self._reflect]
        elif self.calculus is Calculus.DEL:
            options.append(self._reset)
            if isinstance(ctype, Returner) and isinstance(effect, DelStack):
                options += [self._shift0, self._shift0]
        return options

    @staticmethod
    def _ops_returning(vtype: VType, effect: Effect) -> List[str]:
        if not isinstance(effect, EffOps):
            return []
        return [name for name, _, result in effect.ops if result == vtype]

    def _op(self, ctype, effect, env, depth) -> Comp:
        op = self._pick(self._ops_returning(ctype.vtype, effect))
        param, _ = effect.arity(op)
        return OpCall(op, self.value(param, env, effect, depth - 1))

    def _handle(self, ctype, effect, env, depth) -> Comp:
        names = sorted(OPERATIONS)
        chosen = sorted(
            self.rng.choice(len(names), size=int(self.rng.integers(1, 3)), replace=False)
        )
        inner = EffOps(tuple((names[i],) + OPERATIONS[names[i]] for i in chosen))
        a = self._pick(GROUND_TYPES)
        body = self.comp(Returner(a), inner, env, depth - 1)
        ret = self.comp(ctype, effect, [a] + env, depth - 1)
        clauses = []
        for name, param, result in inner.ops:
            k_type = UType(effect, Fun(result, ctype))
            clauses.append((name, self.comp(ctype, effect, [k_type, param] + env, depth - 1)))
        return Handle(body, Handler(ret, tuple(clauses), HandlerType(a, inner, ctype, effect)))

    def _reify(self, ctype, effect, env, depth) -> Comp:
        monad = self._pick(MONADS)
        a = self._pick(GROUND_TYPES)
        inner = push_monad(effect, monad)
        body = self.synthesizable(Returner(a), inner, env, depth - 1)
        reified = Reify(monad, body)
        if monad.name == "State":
            bound = App(reified, TRU if self._flip(0.5) else FLS)
            result = Prod(a, BIT)
        else:
            bound = reified
            result = subst_tyvar(monad.carrier, "a", a).vtype
        return Let(bound, self.comp(ctype, effect, [result] + env, depth - 1))

    def _reflect(self, ctype, effect, env, depth) -> Comp:
        base, monad = pop_monad(effect)
        carrier = subst_tyvar(monad.carrier, "a", ctype.vtype)
        return Reflect(self.comp(carrier, base, env, depth - 1))

    def _reset(self, ctype, effect, env, depth) -> Comp:
        a = self._pick(GROUND_TYPES)
        inner = push_answer(effect, ctype)
        body = self.synthesizable(Returner(a), inner, env, depth - 1)
        return Dollar(body, self.comp(ctype, effect, [a] + env, depth - 1))

    def _shift0(self, ctype, effect, env, depth) -> Comp:
        outer, answer = pop_answer(effect)
        k_type = UType(outer, Fun(ctype.vtype, answer))
        return Shift0(self.comp(answer, outer, [k_type] + env, depth - 1))


# ---------------------------------------------------------------------------
# Untyped terms
# ---------------------------------------------------------------------------

LABELS = ("Left", "Right")
OP_NAMES = ("get", "put")


class _TermSampler:
    def __init__(self, calculus: Calculus, rng: np.random.Generator):
        self.calculus = calculus
        self.rng = rng

    def _pick(self, items: Sequence):
        return items[int(self.rng.integers(len(items)))]

    def value(self, scope: int, depth: int) -> Value:
        kinds = ["unit", "inj"]
        if scope:
            kinds += ["var", "var"]
        if depth > 0:
            kinds += ["pair", "thunk"]
        kind = self._pick(kinds)
        if kind == "var":
            return Var(int(self.rng.integers(scope)))
        if kind == "unit":
            return UnitV()
        if kind == "inj":
            payload = self.value(scope, depth - 1) if depth > 0 else UnitV()
            return Inj(self._pick(LABELS), payload)
        if kind == "pair":
            return Pair(self.value(scope, depth - 1), self.value(scope, depth - 1))
        return Thunk(self.comp(scope, depth - 1))

    def comp(self, scope: int, depth: int) -> Comp:
        if depth <= 0:
            return Return(self.value(scope, 0))
        kinds = ["return", "let", "force", "lam", "app", "cpair", "prj", "split", "case"]
        if self.calculus is Calculus.EFF:
            kinds += ["op", "handle"]
        elif self.calculus is Calculus.MON:
            kinds += ["reflect", "reify"]
        elif self.calculus is Calculus.DEL:
            kinds += ["shift0", "reset"]
        kind = self._pick(kinds)
        d = depth - 1
        if kind == "return":
            return Return(self.value(scope, d))
        if kind == "let":
            return Let(self.comp(scope, d), self.comp(scope + 1, d))
        if kind == "force":
            return Force(self.value(scope, d))
        if kind == "lam":
            return Lam(self.comp(scope + 1, d))
        if kind == "app":
            return App(self.comp(scope, d), self.value(scope, d))
        if kind == "cpair":
            return CPair(self.comp(scope, d), self.comp(scope, d))
        if kind == "prj":
            return Prj(int(self.rng.integers(1, 3)), self.comp(scope, d))
        if kind == "split":
            return Split(self.value(scope, d), self.comp(scope + 2, d))
        if kind == "case":
            arms = tuple((label, self.comp(scope + 1, d)) for label in LABELS)
            return Case(self.value(scope, d), arms)
        if kind == "op":
            return OpCall(self._pick(OP_NAMES), self.value(scope, d))
        if kind == "handle":
            ops = tuple((op, self.comp(scope + 2, d)) for op in OP_NAMES[: self.rng.integers(3)])
            return Handle(self.comp(scope, d), Handler(self.comp(scope + 1, d), ops))
        if kind == "reflect":
            return Reflect(self.comp(scope, d))
        if kind == "reify":
            return Reify(self._pick(MONADS), self.comp(scope, d))
        if kind == "shift0":
            return Shift0(self.comp(scope + 1, d))
        return Dollar(self.comp(scope, d), self.comp(scope + 1, d))


def random_term(calculus: Calculus, seed: int, max_depth: int = 4) -> Comp:
    """A closed, scope-correct computation of ``calculus``; not necessarily typed."""
    rng = np.random.default_rng(seed)
    return _TermSampler(calculus, rng).comp(0, max_depth)
