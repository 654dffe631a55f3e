"""
Effex Denotational Semantics
============================

Desk-scale set-theoretic semantics for MAM, λeff and proper λmon programs.

Types denote lazily described finite sets (:class:`FinSet`); λeff returners
denote free trees over the signature of their effect, which form an infinite
set as soon as some operation can recurse. Computations are interpreted from
their typing derivations: a value type ``U_E C`` denotes the carrier of the
algebra ``C`` over the monad of ``E``, sequencing is the Kleisli extension
into that algebra, and functions and computation pairs carry the pointwise
algebra structure.

Monad layers of λmon are interpreted by running the derivations of their own
``unit`` and ``bind`` over the monad of the stack below. Whether a layer is
proper is only ever tested at small set sizes, so law checks report
"proper-at-tested-sizes" rather than "proper".
"""

from __future__ import annotations

import itertools
import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..utils.errors import SemanticsError
from .effex_ast import (
    App,
    Case,
    Comp,
    Force,
    Handle,
    Handler,
    Inj,
    Lam,
    Let,
    MonadDef,
    OpCall,
    Return,
    UnitV,
    Var,
    TRU,
    FLS,
    arms_of,
)
from .effex_opsem import NormalForm, run
from .effex_typesys import BIND_TYVAR, Derivation, Env, TypeChecker
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
    ops_effect,
    pop_monad,
)

logger = logging.getLogger(__name__)

INFINITE = math.inf

Cardinality = Union[int, float]

LAWS = ("left-identity", "right-identity", "associativity")


# ---------------------------------------------------------------------------
# Elements
# ---------------------------------------------------------------------------


class Elem:
    """Base class of semantic elements."""


@dataclass(frozen=True)
class EUnit(Elem):
    pass


@dataclass(frozen=True)
class EPair(Elem):
    fst: Any
    snd: Any


@dataclass(frozen=True)
class ETag(Elem):
    label: str
    payload: Any


@dataclass(frozen=True)
class EAtom(Elem):
    """Anonymous element of a type-variable assignment."""

    index: int


@dataclass(frozen=True)
class ELeaf(Elem):
    """``return a`` in a free tree."""

    value: Any


@dataclass(frozen=True)
class ENode(Elem):
    """Formal operation ``op<param>`` with one child per element of its arity."""

    op: str
    param: Any
    children: "EFun"


class EFun(Elem):
    """
    Extensional function over a finite domain.

    The function is evaluated lazily and memoized; equality and hashing go
    through the full table, so they require a finite domain.
    """

    __slots__ = ("domain", "_fn", "_memo", "_table")

    def __init__(self, domain: "FinSet", fn: Callable[[Any], Any]):
        self.domain = domain
        self._fn = fn
        self._memo: Dict[Any, Any] = {}
        self._table: Optional[Tuple[Tuple[Any, Any], ...]] = None

    @classmethod
    def from_table(cls, domain: "FinSet", table: Mapping[Any, Any]) -> "EFun":
        fun = cls(domain, table.__getitem__)
        fun._memo = dict(table)
        return fun

    def __call__(self, arg):
        try:
            return self._memo[arg]
        except KeyError:
            result = self._memo[arg] = self._fn(arg)
            return result

    @property
    def table(self) -> Tuple[Tuple[Any, Any], ...]:
        if self._table is None:
            if self.domain.cardinality == INFINITE:
                raise SemanticsError("cannot tabulate a function over an infinite domain")
            self._table = tuple((x, self(x)) for x in self.domain)
        return self._table

    def __eq__(self, other) -> bool:
        if not isinstance(other, EFun):
            return NotImplemented
        return self is other or self.table == other.table

    def __hash__(self) -> int:
        return hash(self.table)

    def __repr__(self) -> str:
        return f"EFun({show_element(self)})"


# ---------------------------------------------------------------------------
# Finite sets
# ---------------------------------------------------------------------------


class FinSet:
    """
    Lazily described set with canonical enumeration order.

    ``cardinality`` is exact (``INFINITE`` for unbounded free trees);
    iterating an infinite set raises :class:`SemanticsError`.
    """

    @property
    def cardinality(self) -> Cardinality:
        raise NotImplementedError

    def _iter(self) -> Iterator:
        raise NotImplementedError

    def __iter__(self) -> Iterator:
        if self.cardinality == INFINITE:
            raise SemanticsError(f"cannot enumerate the infinite set {self.describe()}")
        return self._iter()

    def __len__(self) -> int:
        if self.cardinality == INFINITE:
            raise SemanticsError(f"{self.describe()} is infinite")
        return int(self.cardinality)

    def sample(self, rng: np.random.Generator):
        raise NotImplementedError

    def describe(self) -> str:
        return type(self).__name__


def _mul(a: Cardinality, b: Cardinality) -> Cardinality:
    if a == 0 or b == 0:
        return 0
    return a * b


def _pow(base: Cardinality, exponent: Cardinality) -> Cardinality:
    if exponent == 0:
        return 1
    if base in (0, 1):
        return base
    if base == INFINITE or exponent == INFINITE:
        return INFINITE
    return int(base) ** int(exponent)


@dataclass(frozen=True, eq=False)
class UnitSet(FinSet):
    @property
    def cardinality(self) -> Cardinality:
        return 1

    def _iter(self):
        yield EUnit()

    def sample(self, rng):
        return EUnit()

    def describe(self) -> str:
        return "1"


@dataclass(frozen=True, eq=False)
class AtomSet(FinSet):
    size: int

    @property
    def cardinality(self) -> Cardinality:
        return self.size

    def _iter(self):
        return (EAtom(i) for i in range(self.size))

    def sample(self, rng):
        if not self.size:
            raise SemanticsError("cannot sample the empty set")
        return EAtom(int(rng.integers(self.size)))

    def describe(self) -> str:
        return f"atoms({self.size})"


@dataclass(frozen=True, eq=False)
class ProductSet(FinSet):
    fst: FinSet
    snd: FinSet

    @property
    def cardinality(self) -> Cardinality:
        return _mul(self.fst.cardinality, self.snd.cardinality)

    def _iter(self):
        return (EPair(a, b) for a, b in itertools.product(self.fst, self.snd))

    def sample(self, rng):
        return EPair(self.fst.sample(rng), self.snd.sample(rng))

    def describe(self) -> str:
        return f"({self.fst.describe()} x {self.snd.describe()})"


@dataclass(frozen=True, eq=False)
class SumSet(FinSet):
    arms: Tuple[Tuple[str, FinSet], ...]

    @property
    def cardinality(self) -> Cardinality:
        return sum((s.cardinality for _, s in self.arms), 0)

    def _iter(self):
        for label, s in self.arms:
            for x in s:
                yield ETag(label, x)

    def sample(self, rng):
        live = [(label, s) for label, s in self.arms if s.cardinality != 0]
        if not live:
            raise SemanticsError("cannot sample the empty set")
        label, s = live[int(rng.integers(len(live)))]
        return ETag(label, s.sample(rng))

    def describe(self) -> str:
        return "{" + ", ".join(f"{label}: {s.describe()}" for label, s in self.arms) + "}"


@dataclass(frozen=True, eq=False)
class FunctionSet(FinSet):
    dom: FinSet
    cod: FinSet

    @property
    def cardinality(self) -> Cardinality:
        return _pow(self.cod.cardinality, self.dom.cardinality)

    def _iter(self):
        points = list(self.dom)
        for values in itertools.product(list(self.cod), repeat=len(points)):
            yield EFun.from_table(self.dom, dict(zip(points, values)))

    def sample(self, rng):
        points = list(self.dom)
        return EFun.from_table(self.dom, {x: self.cod.sample(rng) for x in points})

    def describe(self) -> str:
        return f"({self.dom.describe()} -> {self.cod.describe()})"


Signature = Dict[str, Tuple[FinSet, FinSet]]


@dataclass(frozen=True, eq=False)
class FreeTreeSet(FinSet):
    """Finite trees over ``signature`` with leaves in ``leaves``."""

    signature: Tuple[Tuple[str, FinSet, FinSet], ...]
    leaves: FinSet
    max_depth: int = 3

    def _nonempty(self) -> bool:
        if self.leaves.cardinality != 0:
            return True
        return any(p.cardinality != 0 and r.cardinality == 0 for _, p, r in self.signature)

    @property
    def cardinality(self) -> Cardinality:
        if not self._nonempty():
            return 0
        for _, param, arity in self.signature:
            if param.cardinality != 0 and arity.cardinality != 0:
                return INFINITE
        return self.leaves.cardinality + sum(
            (p.cardinality for _, p, r in self.signature if r.cardinality == 0), 0
        )

    def _iter(self):
        for x in self.leaves:
            yield ELeaf(x)
        for op, param, arity in self.signature:
            for p in param:
                yield ENode(op, p, EFun.from_table(arity, {}))

    def trees(self, depth: int) -> Iterator:
        """Every tree of height at most ``depth`` (finite arities only)."""
        yield from (ELeaf(x) for x in self.leaves)
        if depth <= 0:
            return
        smaller = list(self.trees(depth - 1))
        for op, param, arity in self.signature:
            points = list(arity)
            for p in param:
                for kids in itertools.product(smaller, repeat=len(points)):
                    yield ENode(op, p, EFun.from_table(arity, dict(zip(points, kids))))

    def sample(self, rng, depth: Optional[int] = None):
        depth = self.max_depth if depth is None else depth
        nodes = [
            (op, p, r)
            for op, p, r in self.signature
            if p.cardinality != 0 and r.cardinality != INFINITE
        ]
        has_leaves = self.leaves.cardinality != 0
        if not nodes or depth <= 0 or (has_leaves and rng.random() < 0.5):
            if has_leaves:
                return ELeaf(self.leaves.sample(rng))
            nodes = [n for n in nodes if n[2].cardinality == 0]
            if not nodes:
                raise SemanticsError("cannot sample the empty set")
        op, param, arity = nodes[int(rng.integers(len(nodes)))]
        kids = {r: self.sample(rng, depth - 1) for r in arity}
        return ENode(op, param.sample(rng), EFun.from_table(arity, kids))

    def describe(self) -> str:
        ops = ", ".join(op for op, _, _ in self.signature)
        return f"T{{{ops}}}({self.leaves.describe()})"


Assignment = Dict[str, FinSet]


def enumerate_set(s: FinSet, limit: int = 4096) -> List:
    """Every element of ``s``, refusing sets above ``limit`` elements."""
    if s.cardinality > limit:
        raise SemanticsError(f"{s.describe()} has {s.cardinality} elements, above {limit}")
    return list(s)


# ---------------------------------------------------------------------------
# Semantic monads
# ---------------------------------------------------------------------------


class SemMonad:
    """A monad on finite sets given by its carrier, unit and Kleisli extension."""

    def carrier(self, a: FinSet) -> FinSet:
        raise NotImplementedError

    def unit(self, x, a: FinSet):
        raise NotImplementedError

    def bind(self, t, f: Callable, a: FinSet, b: FinSet):
        raise NotImplementedError


class IdentityMonad(SemMonad):
    """The empty effect."""

    def carrier(self, a):
        return a

    def unit(self, x, a):
        return x

    def bind(self, t, f, a, b):
        return f(t)


class FreeMonad(SemMonad):
    """Free trees over an operation signature."""

    def __init__(self, signature: Tuple[Tuple[str, FinSet, FinSet], ...]):
        self.signature = signature

    def carrier(self, a):
        return FreeTreeSet(self.signature, a)

    def unit(self, x, a):
        return ELeaf(x)

    def bind(self, t, f, a=None, b=None):
        if isinstance(t, ELeaf):
            return f(t.value)
        children = t.children
        return ENode(t.op, t.param, EFun(children.domain, lambda r: self.bind(children(r), f)))

    def join(self, tt):
        return self.bind(tt, lambda t: t)

    def fmap(self, t, g):
        return self.bind(t, lambda x: ELeaf(g(x)))


class LayeredMonad(SemMonad):
    """A user monad layer interpreted over the monad of the stack below."""

    def __init__(self, judgement, base: SemMonad):
        self.judgement = judgement
        self.base = base
        self.monad: MonadDef = judgement.monad
        self.base_effect: Effect = judgement.base

    def carrier(self, a):
        return den_ctype(self.monad.carrier, self.base_effect, {self.monad.type_var: a})

    def unit(self, x, a):
        theta = {self.monad.type_var: a}
        return Denoter(theta).den(self.judgement.unit, (x,))

    def bind(self, t, f, a, b):
        theta = {self.monad.type_var: a, BIND_TYVAR: b}
        fun = f if isinstance(f, EFun) else EFun(a, f)
        return Denoter(theta).den(self.judgement.bind, (fun, t))


_MON_CHECKER = TypeChecker(Calculus.MON)
_monads: Dict[Effect, SemMonad] = {}
_monads_lock = threading.Lock()


def signature_of(effect: EffOps, theta: Optional[Assignment] = None) -> Tuple[Tuple[str, FinSet, FinSet], ...]:
    """Operation symbols with their parameter and arity sets."""
    theta = theta or {}
    return tuple(
        (op, den_vtype(param, theta), den_vtype(result, theta)) for op, param, result in effect.ops
    )


def semantic_monad(effect: Effect) -> SemMonad:
    """The monad an effect denotes; cached per effect."""
    cached = _monads.get(effect)
    if cached is not None:
        return cached
    if isinstance(effect, Pure):
        monad: SemMonad = IdentityMonad()
    elif isinstance(effect, EffOps):
        monad = FreeMonad(signature_of(effect))
    elif isinstance(effect, MonStack):
        base, top = pop_monad(effect)
        judgement = _MON_CHECKER.check_monad(top, base)
        monad = LayeredMonad(judgement, semantic_monad(base))
    elif isinstance(effect, DelStack):
        raise SemanticsError("answer-type stacks have no direct denotation")
    else:
        raise TypeError(f"not an effect: {effect!r}")
    with _monads_lock:
        return _monads.setdefault(effect, monad)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


def den_vtype(ty: VType, theta: Optional[Assignment] = None, calculus: Optional[Calculus] = None) -> FinSet:
    """
    The set a value type denotes.

    Raises:
        SemanticsError: For unassigned type variables or answer-type stacks
    """
    theta = theta or {}
    if isinstance(ty, TyVar):
        if ty.name not in theta:
            raise SemanticsError(f"no set assigned to type variable {ty.name}")
        return theta[ty.name]
    if isinstance(ty, UnitT):
        return UnitSet()
    if isinstance(ty, Prod):
        return ProductSet(den_vtype(ty.fst, theta), den_vtype(ty.snd, theta))
    if isinstance(ty, Variant):
        return SumSet(tuple((label, den_vtype(t, theta)) for label, t in ty.arms))
    if isinstance(ty, UType):
        return den_ctype(ty.ctype, ty.effect, theta)
    raise TypeError(f"not a value type: {ty!r}")


def den_ctype(ty: CType, effect: Effect, theta: Optional[Assignment] = None) -> FinSet:
    """Carrier of the algebra ``ty`` over the monad of ``effect``."""
    theta = theta or {}
    if isinstance(ty, Returner):
        return semantic_monad(effect).carrier(den_vtype(ty.vtype, theta))
    if isinstance(ty, Fun):
        return FunctionSet(den_vtype(ty.arg, theta), den_ctype(ty.result, effect, theta))
    if isinstance(ty, CProd):
        return ProductSet(den_ctype(ty.fst, effect, theta), den_ctype(ty.snd, effect, theta))
    raise TypeError(f"not a computation type: {ty!r}")


def cardinality(ty, theta: Optional[Assignment] = None, effect: Effect = Pure(),
                verify_laws: bool = False) -> Cardinality:
    """
    Exact size of the set ``ty`` denotes (``INFINITE`` for recursive free trees).

    With ``verify_laws`` every monad layer mentioned by ``ty`` is law-checked
    first.

    Raises:
        SemanticsError: If a layer fails its law check
    """
    if verify_laws:
        for monad, base in _layers_in(ty):
            report = check_monad_laws(monad, base)
            if not report.ok:
                raise SemanticsError(f"improper monad layer {monad.name or ''}".strip())
    if isinstance(ty, VType):
        return den_vtype(ty, theta).cardinality
    return den_ctype(ty, effect, theta).cardinality


def _layers_in(ty) -> List[Tuple[MonadDef, Effect]]:
    from .effex_types import type_children

    found: List[Tuple[MonadDef, Effect]] = []
    if isinstance(ty, MonStack):
        for depth, layer in enumerate(ty.layers):
            base = MonStack(ty.layers[:depth]) if depth else Pure()
            found.append((layer, base))
    for child in type_children(ty):
        found.extend(_layers_in(child))
    return found


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


class Denoter:
    """Interprets derivations under a fixed type-variable assignment."""

    def __init__(self, theta: Optional[Assignment] = None):
        self.theta = theta or {}

    def vset(self, ty: VType) -> FinSet:
        return den_vtype(ty, self.theta)

    def extend(self, ctype: CType, effect: Effect, t, f: Callable, a: FinSet):
        """Kleisli extension of ``f`` into the algebra ``ctype``, applied to ``t``."""
        if isinstance(ctype, Returner):
            return semantic_monad(effect).bind(t, f, a, self.vset(ctype.vtype))
        if isinstance(ctype, Fun):
            return EFun(
                self.vset(ctype.arg),
                lambda x: self.extend(ctype.result, effect, t, lambda v: f(v)(x), a),
            )
        if isinstance(ctype, CProd):
            return EPair(
                self.extend(ctype.fst, effect, t, lambda v: f(v).fst, a),
                self.extend(ctype.snd, effect, t, lambda v: f(v).snd, a),
            )
        raise TypeError(f"not a computation type: {ctype!r}")

    def den(self, d: Derivation, env: Sequence = ()):
        rule = d.rule
        env = tuple(env)
        if rule == "var":
            return env[d.subject.index]
        if rule == "unit":
            return EUnit()
        if rule == "pair":
            return EPair(self.den(d.premises[0], env), self.den(d.premises[1], env))
        if rule == "inj":
            return ETag(d.subject.label, self.den(d.premises[0], env))
        if rule in ("thunk", "force", "reflect", "reify"):
            return self.den(d.premises[0], env)
        if rule == "return":
            value = self.den(d.premises[0], env)
            return semantic_monad(d.effect).unit(value, self.vset(d.type.vtype))
        if rule == "let":
            bound, body = d.premises
            t = self.den(bound, env)
            return self.extend(
                d.type,
                d.effect,
                t,
                lambda x: self.den(body, (x,) + env),
                self.vset(bound.type.vtype),
            )
        if rule == "lam":
            body = d.premises[0]
            return EFun(self.vset(d.type.arg), lambda x: self.den(body, (x,) + env))
        if rule == "app":
            fun, arg = d.premises
            return self.den(fun, env)(self.den(arg, env))
        if rule == "cpair":
            return EPair(self.den(d.premises[0], env), self.den(d.premises[1], env))
        if rule == "prj":
            pair = self.den(d.premises[0], env)
            return pair.fst if d.extra == 1 else pair.snd
        if rule == "split":
            pair = self.den(d.premises[0], env)
            return self.den(d.premises[1], (pair.snd, pair.fst) + env)
        if rule == "case":
            tag = self.den(d.premises[0], env)
            arm = d.premises[1 + d.labels.index(tag.label)]
            return self.den(arm, (tag.payload,) + env)
        if rule == "op":
            _, result = d.effect.arity(d.extra)
            arity = self.vset(result)
            return ENode(d.extra, self.den(d.premises[0], env), EFun(arity, ELeaf))
        if rule == "handle":
            fold = self.handler_fold(d, env)
            return fold(self.den(d.premises[0], env))
        if rule in ("shift0", "dollar"):
            raise SemanticsError("λdel has no direct denotation")
        raise SemanticsError(f"no denotation for rule {rule}")

    def handler_fold(self, d: Derivation, env: tuple) -> Callable:
        """Map a handled computation's denotation to the handler's result."""
        htype: HandlerType = d.extra
        ret, *clauses = d.premises[1:]
        by_op = dict(zip(d.labels, clauses))

        def on_return(x):
            return self.den(ret, (x,) + env)

        if not isinstance(htype.in_effect, EffOps):
            return on_return
        arities = {op: self.vset(r) for op, _, r in htype.in_effect.ops}

        def fold(tree):
            if isinstance(tree, ELeaf):
                return on_return(tree.value)
            children = tree.children
            k = EFun(arities[tree.op], lambda r: fold(children(r)))
            return self.den(by_op[tree.op], (k, tree.param) + env)

        return fold


def den_term(d: Derivation, theta: Optional[Assignment] = None, env: Sequence = ()):
    """Denotation of derivation ``d`` at the environment ``env`` (newest first)."""
    return Denoter(theta).den(d, env)


def den_program(m: Comp, calculus: Calculus):
    """Denotation of a closed program typed at the empty effect."""
    derivation = TypeChecker(calculus).check_program(m)
    return den_term(derivation)


@dataclass
class AdequacyResult:
    ok: bool
    program: Any
    value: Any
    status: str


def adequacy_check(m: Comp, calculus: Calculus, fuel: int = 100_000) -> AdequacyResult:
    """Compare the denotation of ``m`` with that of the value it runs to."""
    checker = TypeChecker(calculus)
    derivation = checker.check_program(m)
    trace = run(m, fuel, record=False)
    if not isinstance(trace.status, NormalForm):
        return AdequacyResult(False, None, None, type(trace.status).__name__)
    program = den_term(derivation)
    value = den_term(checker.check_program(Return(trace.status.value), derivation.type))
    return AdequacyResult(program == value, program, value, "normal-form")


# ---------------------------------------------------------------------------
# Handler algebras
# ---------------------------------------------------------------------------


@dataclass
class HandlerAlgebra:
    """The algebra a handler's operation clauses put on its result carrier."""

    handler_type: HandlerType
    monad: FreeMonad
    carrier: FinSet
    apply: Callable

    def laws_hold(self, rng: np.random.Generator, samples: int = 20, depth: int = 2) -> bool:
        """``c(return x) = x`` and ``c(fmap c xss) = c(join xss)`` on sampled trees."""
        trees = FreeTreeSet(self.monad.signature, self.carrier, depth)
        nested = FreeTreeSet(self.monad.signature, trees, depth)
        for _ in range(samples):
            x = self.carrier.sample(rng)
            if self.apply(ELeaf(x)) != x:
                return False
            xss = nested.sample(rng)
            lhs = self.apply(self.monad.fmap(xss, self.apply))
            rhs = self.apply(self.monad.join(xss))
            if lhs != rhs:
                return False
        return True


def handler_algebra(handler: Handler, htype: HandlerType,
                    theta: Optional[Assignment] = None) -> HandlerAlgebra:
    """
    The algebra of a closed handler's operation clauses on ``[[C]]``.

    Raises:
        SemanticsError: If ``htype`` does not handle an operation effect
    """
    if not isinstance(htype.in_effect, EffOps):
        raise SemanticsError("only handlers of operation effects define an algebra")
    checker = TypeChecker(Calculus.EFF)
    clauses = checker.check_handler(handler, htype, Env())
    denoter = Denoter(theta)
    arities = {op: denoter.vset(r) for op, _, r in htype.in_effect.ops}
    by_op = dict(zip(handler.op_names, clauses[1:]))
    monad = semantic_monad(htype.in_effect)

    def apply(tree):
        if isinstance(tree, ELeaf):
            return tree.value
        children = tree.children
        k = EFun(arities[tree.op], lambda r: apply(children(r)))
        return denoter.den(by_op[tree.op], (k, tree.param))

    carrier = den_ctype(htype.out_ctype, htype.out_effect, theta)
    return HandlerAlgebra(htype, monad, carrier, apply)


# ---------------------------------------------------------------------------
# Monad laws
# ---------------------------------------------------------------------------


@dataclass
class LawResult:
    law: str
    size: int
    cases: int
    exhaustive: bool
    ok: bool
    witness: Optional[Dict[str, str]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "law": self.law,
            "size": self.size,
            "cases": self.cases,
            "exhaustive": self.exhaustive,
            "ok": self.ok,
            "witness": self.witness,
        }


@dataclass
class LawReport:
    monad: str
    results: List[LawResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    @property
    def verdict(self) -> str:
        return "proper-at-tested-sizes" if self.ok else "improper"

    def failure(self) -> Optional[LawResult]:
        return next((r for r in self.results if not r.ok), None)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "monad": self.monad,
            "verdict": self.verdict,
            "results": [r.to_dict() for r in self.results],
        }


def _cases(spaces: Sequence[FinSet], limit: int, rng) -> Tuple[Iterator, int, bool]:
    total: Cardinality = 1
    for s in spaces:
        total = _mul(total, s.cardinality)
    if total <= limit:
        return itertools.product(*spaces), int(total), True
    logger.warning(f"sampling {limit} of {total} cases")
    draws = (tuple(s.sample(rng) for s in spaces) for _ in range(limit))
    return draws, limit, False


def check_monad_laws(
    monad: MonadDef,
    base: Effect = Pure(),
    sizes: Sequence[int] = (0, 1, 2),
    law_cases: int = 400,
    seed: int = 2024,
) -> LawReport:
    """
    Check the three monad laws of a layer at small set assignments.

    Every type variable is assigned a set of ``n`` atoms for each ``n`` in
    ``sizes``. Law instances are enumerated when there are at most
    ``law_cases`` of them, otherwise ``law_cases`` are drawn with a seeded
    generator.
    """
    rng = np.random.default_rng(seed)
    judgement = _MON_CHECKER.check_monad(monad, base)
    layer = LayeredMonad(judgement, semantic_monad(base))
    report = LawReport(monad.name or "monad")
    for n in sizes:
        a = AtomSet(n)
        ta = layer.carrier(a)
        kleisli = FunctionSet(a, ta)

        def run_law(law: str, spaces: Sequence[FinSet], holds: Callable) -> None:
            cases, count, exhaustive = _cases(spaces, law_cases, rng)
            witness = None
            for case in cases:
                if not holds(*case):
                    witness = {f"arg{i}": show_element(x) for i, x in enumerate(case)}
                    break
            logger.debug(f"{law} at size {n}: {count} case(s), exhaustive={exhaustive}")
            report.results.append(LawResult(law, n, count, exhaustive, witness is None, witness))

        run_law(
            "left-identity",
            [a, kleisli],
            lambda x, f: layer.bind(layer.unit(x, a), f, a, a) == f(x),
        )
        run_law(
            "right-identity",
            [ta],
            lambda t: layer.bind(t, lambda x: layer.unit(x, a), a, a) == t,
        )
        run_law(
            "associativity",
            [ta, kleisli, kleisli],
            lambda t, f, g: layer.bind(layer.bind(t, f, a, a), g, a, a)
            == layer.bind(t, lambda x: layer.bind(f(x), g, a, a), a, a),
        )
    return report


# ---------------------------------------------------------------------------
# Ticks and the pigeonhole demonstration
# ---------------------------------------------------------------------------

TICK_EFFECT = ops_effect({"tick": (UnitT(), UnitT())})


def tick_program(n: int) -> Comp:
    """``tick (); ...; tick (); return ()`` with ``n`` ticks, at ``{tick: 1 -> 1}``."""
    m: Comp = Return(UnitV())
    for _ in range(n):
        m = Let(OpCall("tick", UnitV()), m.shift(1))
    return m


def counter_type(k: int) -> Variant:
    return Variant.of({f"C{i}": UnitT() for i in range(k + 1)})


def counting_handler(k: int, target: int) -> Handler:
    """
    Count ticks into a counter saturating at ``k``; answer whether it equals ``target``.

    Handles ``F 1 ! {tick}`` into ``counter -> F bit`` at the empty effect.
    """
    counter = counter_type(k)

    def c(i: int) -> Inj:
        return Inj(f"C{i}", UnitV(), counter)

    # return x -> fun c -> case c of { Ci -> return (i == target) }
    ret = Lam(
        Case(
            Var(0),
            arms_of({f"C{i}": Return(TRU if i == target else FLS) for i in range(k + 1)}),
        )
    )
    # tick(p; k) -> fun c -> case c of { Ci -> force k () C(i+1) }
    tick = Lam(
        Case(
            Var(0),
            arms_of(
                {
                    f"C{i}": App(App(Force(Var(2)), UnitV()), c(min(i + 1, k)))
                    for i in range(k + 1)
                }
            ),
        )
    )
    htype = HandlerType(UnitT(), TICK_EFFECT, Fun(counter, Returner(BIT)), Pure())
    return Handler(ret, (("tick", tick),), htype)


def counting_program(k: int, target: int, n: int) -> Comp:
    """``(handle tick^n with H) C0``."""
    counter = counter_type(k)
    return App(Handle(tick_program(n), counting_handler(k, target)), Inj("C0", UnitV(), counter))


@dataclass
class PairWitness:
    n: int
    m: int
    result_n: str
    result_m: str

    @property
    def distinct(self) -> bool:
        return self.result_n != self.result_m


@dataclass
class PigeonholeReport:
    k: int
    target: str
    target_cardinality: Cardinality
    pairs: List[PairWitness] = field(default_factory=list)

    @property
    def programs(self) -> int:
        return self.k + 1

    @property
    def exceeds(self) -> bool:
        return self.programs > self.target_cardinality

    @property
    def ok(self) -> bool:
        return self.exceeds and all(p.distinct for p in self.pairs)

    def to_dict(self) -> Dict[str, Any]:
        card = self.target_cardinality
        return {
            "k": self.k,
            "target": self.target,
            "cardinality": "infinite" if card == INFINITE else int(card),
            "programs": self.programs,
            "exceeds": self.exceeds,
            "pairs": [
                {"n": p.n, "m": p.m, "result_n": p.result_n, "result_m": p.result_m,
                 "distinct": p.distinct}
                for p in self.pairs
            ],
            "ok": self.ok,
        }

    def to_text(self) -> str:
        card = self.target_cardinality
        lines = [
            f"candidate type {self.target} has {card} element(s)",
            f"tick^0 .. tick^{self.k}: {self.programs} program(s), "
            f"{self.programs} > {card}: {'yes' if self.exceeds else 'no'}",
        ]
        for p in self.pairs:
            mark = "distinct" if p.distinct else "EQUAL"
            lines.append(
                f"  H({p.n},{p.m}): tick^{p.n} -> {p.result_n}, tick^{p.m} -> {p.result_m} [{mark}]"
            )
        if not self.pairs:
            lines.append("  no pairs to distinguish")
        return "\n".join(lines)


def pigeonhole_demo(k: int, target_type, theta: Optional[Assignment] = None,
                    fuel: int = 10_000) -> PigeonholeReport:
    """
    Show that ``tick^0 .. tick^k`` cannot all map into a type of fewer elements.

    For every pair ``n < m`` a counting handler is built that sends ``tick^n``
    and ``tick^m`` to different booleans; both programs are type-checked and
    run.

    When ``k + 1`` does not exceed the target cardinality the report is
    degenerate: ``exceeds`` is false and no pair is built.

    Raises:
        SemanticsError: If ``k`` is negative
    """
    from .effex_surface import print_type, show_result

    if k < 0:
        raise SemanticsError(f"k must be non-negative, got {k}")
    size = cardinality(target_type, theta)
    report = PigeonholeReport(k, print_type(target_type), size)
    if not report.exceeds:
        logger.warning(f"pigeonhole demo: {k + 1} program(s) do not exceed {size} element(s)")
        return report
    checker = TypeChecker(Calculus.EFF)
    for n in range(k + 1):
        for m in range(n + 1, k + 1):
            results = []
            for count in (n, m):
                program = counting_program(k, n, count)
                checker.check_program(program, Returner(BIT))
                trace = run(program, fuel, record=False)
                if not isinstance(trace.status, NormalForm):
                    raise SemanticsError(f"counting program did not finish: {trace.status}")
                results.append(show_result(trace.status.value))
            report.pairs.append(PairWitness(n, m, results[0], results[1]))
    logger.info(f"pigeonhole demo for k={k}: {len(report.pairs)} pair(s)")
    return report


# ---------------------------------------------------------------------------
# Display
# ---------------------------------------------------------------------------


def show_element(e) -> str:
    if isinstance(e, EUnit):
        return "()"
    if isinstance(e, EPair):
        return f"({show_element(e.fst)}, {show_element(e.snd)})"
    if isinstance(e, ETag):
        if isinstance(e.payload, EUnit):
            return {"True": "tru", "False": "fls"}.get(e.label, e.label)
        return f"{e.label}({show_element(e.payload)})"
    if isinstance(e, EAtom):
        return f"a{e.index}"
    if isinstance(e, ELeaf):
        return f"return {show_element(e.value)}"
    if isinstance(e, ENode):
        try:
            kids = ", ".join(show_element(v) for _, v in e.children.table)
        except SemanticsError:
            kids = "..."
        return f"{e.op}({show_element(e.param)}; {kids})"
    if isinstance(e, EFun):
        try:
            entries = ", ".join(f"{show_element(x)} -> {show_element(y)}" for x, y in e.table)
        except SemanticsError:
            return "<function>"
        return "{" + entries + "}"
    return repr(e)
