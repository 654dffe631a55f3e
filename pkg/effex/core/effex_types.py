"""
Effex Types - shared type syntax
================================

Value types, computation types, effects and handler types of the four
calculi. Term annotations mention these, so they live apart from the checker
to avoid circular imports.

Every collection is stored as a sorted tuple, which makes structural equality
and hashing canonical. Empty effects of every calculus normalise to ``Pure``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Dict, Iterable, Iterator, Mapping, Optional, Tuple, Union

if TYPE_CHECKING:  # pragma: no cover
    from .effex_ast import MonadDef


class Calculus(Enum):
    """The four calculi sharing the call-by-push-value core."""

    MAM = "mam"
    EFF = "eff"
    MON = "mon"
    DEL = "del"

    @classmethod
    def from_name(cls, name: str) -> "Calculus":
        key = name.lower().lstrip(".")
        for calc in cls:
            if calc.value == key:
                return calc
        raise ValueError(f"unknown calculus {name!r} (expected one of mam, eff, mon, del)")

    def __str__(self) -> str:
        return self.value


class TypeExpr:
    """Common base of all type-level syntax."""

    def __str__(self) -> str:
        from .effex_surface import print_type

        return print_type(self)


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------


class VType(TypeExpr):
    pass


@dataclass(frozen=True)
class TyVar(VType):
    name: str


@dataclass(frozen=True)
class UnitT(VType):
    pass


@dataclass(frozen=True)
class Prod(VType):
    fst: VType
    snd: VType


@dataclass(frozen=True)
class Variant(VType):
    """Labelled sum; ``arms`` is sorted by label."""

    arms: Tuple[Tuple[str, VType], ...]

    def __post_init__(self) -> None:
        labels = [label for label, _ in self.arms]
        if labels != sorted(labels):
            object.__setattr__(self, "arms", tuple(sorted(self.arms, key=lambda a: a[0])))
            labels.sort()
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate variant labels in {labels}")

    @classmethod
    def of(cls, arms: Mapping[str, VType]) -> "Variant":
        return cls(tuple(sorted(arms.items())))

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(label for label, _ in self.arms)

    def lookup(self, label: str) -> Optional[VType]:
        for name, ty in self.arms:
            if name == label:
                return ty
        return None


@dataclass(frozen=True)
class UType(VType):
    """Thunk type ``U_E C``."""

    effect: "Effect"
    ctype: "CType"


# ---------------------------------------------------------------------------
# Computation types
# ---------------------------------------------------------------------------


class CType(TypeExpr):
    pass


@dataclass(frozen=True)
class Returner(CType):
    """``F A``."""

    vtype: VType


@dataclass(frozen=True)
class Fun(CType):
    arg: VType
    result: CType


@dataclass(frozen=True)
class CProd(CType):
    fst: CType
    snd: CType


# ---------------------------------------------------------------------------
# Effects
# ---------------------------------------------------------------------------


class Effect(TypeExpr):
    pass


@dataclass(frozen=True)
class Pure(Effect):
    """The empty effect, shared by all calculi."""

    pass


@dataclass(frozen=True)
class EffOps(Effect):
    """Operation arities ``{op: A -> B}``, sorted by name and never empty."""

    ops: Tuple[Tuple[str, VType, VType], ...]

    def __post_init__(self) -> None:
        names = [name for name, _, _ in self.ops]
        if names != sorted(names):
            object.__setattr__(self, "ops", tuple(sorted(self.ops, key=lambda o: o[0])))
            names.sort()
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate operation names in {names}")
        if not names:
            raise ValueError("EffOps must not be empty, use Pure")

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(name for name, _, _ in self.ops)

    def arity(self, op: str) -> Optional[Tuple[VType, VType]]:
        for name, param, result in self.ops:
            if name == op:
                return param, result
        return None


@dataclass(frozen=True)
class MonStack(Effect):
    """Monad layers, bottom first. Never empty."""

    layers: Tuple["MonadDef", ...]

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("MonStack must not be empty, use Pure")


@dataclass(frozen=True)
class DelStack(Effect):
    """Answer types, bottom first. Never empty."""

    layers: Tuple[CType, ...]

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("DelStack must not be empty, use Pure")


@dataclass(frozen=True)
class HandlerType(TypeExpr):
    """``A ! E => C ! E'``."""

    in_vtype: VType
    in_effect: Effect
    out_ctype: CType
    out_effect: Effect


AnyType = Union[VType, CType, Effect, HandlerType]


# ---------------------------------------------------------------------------
# Smart constructors and stack helpers
# ---------------------------------------------------------------------------


def ops_effect(ops: Mapping[str, Tuple[VType, VType]]) -> Effect:
    if not ops:
        return Pure()
    return EffOps(tuple(sorted((name, p, r) for name, (p, r) in ops.items())))


def effect_ops(effect: Effect) -> Dict[str, Tuple[VType, VType]]:
    if isinstance(effect, EffOps):
        return {name: (p, r) for name, p, r in effect.ops}
    return {}


def mon_stack(layers: Iterable["MonadDef"]) -> Effect:
    layers = tuple(layers)
    return MonStack(layers) if layers else Pure()


def del_stack(layers: Iterable[CType]) -> Effect:
    layers = tuple(layers)
    return DelStack(layers) if layers else Pure()


def stack_layers(effect: Effect) -> tuple:
    if isinstance(effect, (MonStack, DelStack)):
        return effect.layers
    return ()


def push_monad(effect: Effect, monad: "MonadDef") -> Effect:
    return mon_stack(stack_layers(effect) + (monad,))


def push_answer(effect: Effect, answer: CType) -> Effect:
    return del_stack(stack_layers(effect) + (answer,))


def pop_monad(effect: Effect) -> Tuple[Effect, "MonadDef"]:
    if not isinstance(effect, MonStack):
        raise ValueError("no monad layer to pop")
    return mon_stack(effect.layers[:-1]), effect.layers[-1]


def pop_answer(effect: Effect) -> Tuple[Effect, CType]:
    if not isinstance(effect, DelStack):
        raise ValueError("no answer type to pop")
    return del_stack(effect.layers[:-1]), effect.layers[-1]


# ---------------------------------------------------------------------------
# Built-in types
# ---------------------------------------------------------------------------

BIT = Variant.of({"False": UnitT(), "True": UnitT()})
EMPTY = Variant(())
PURE = Pure()


# ---------------------------------------------------------------------------
# Traversals
# ---------------------------------------------------------------------------


def subst_tyvar(ty, name: str, replacement: VType):
    """
    Replace the free type variable ``name`` by ``replacement``.

    Monad layers are closed apart from their own bound variable, so they are
    left untouched.
    """
    if isinstance(ty, TyVar):
        return replacement if ty.name == name else ty
    if isinstance(ty, (UnitT, Pure, MonStack)):
        return ty
    if isinstance(ty, Prod):
        return Prod(subst_tyvar(ty.fst, name, replacement), subst_tyvar(ty.snd, name, replacement))
    if isinstance(ty, Variant):
        return Variant(tuple((lab, subst_tyvar(t, name, replacement)) for lab, t in ty.arms))
    if isinstance(ty, UType):
        return UType(
            subst_tyvar(ty.effect, name, replacement), subst_tyvar(ty.ctype, name, replacement)
        )
    if isinstance(ty, Returner):
        return Returner(subst_tyvar(ty.vtype, name, replacement))
    if isinstance(ty, Fun):
        return Fun(subst_tyvar(ty.arg, name, replacement), subst_tyvar(ty.result, name, replacement))
    if isinstance(ty, CProd):
        return CProd(subst_tyvar(ty.fst, name, replacement), subst_tyvar(ty.snd, name, replacement))
    if isinstance(ty, EffOps):
        return EffOps(
            tuple(
                (op, subst_tyvar(p, name, replacement), subst_tyvar(r, name, replacement))
                for op, p, r in ty.ops
            )
        )
    if isinstance(ty, DelStack):
        return DelStack(tuple(subst_tyvar(c, name, replacement) for c in ty.layers))
    if isinstance(ty, HandlerType):
        return HandlerType(
            subst_tyvar(ty.in_vtype, name, replacement),
            subst_tyvar(ty.in_effect, name, replacement),
            subst_tyvar(ty.out_ctype, name, replacement),
            subst_tyvar(ty.out_effect, name, replacement),
        )
    raise TypeError(f"not a type: {ty!r}")


def type_children(ty) -> Iterator:
    """Immediate type-level children, excluding monad layers."""
    if isinstance(ty, Prod):
        yield from (ty.fst, ty.snd)
    elif isinstance(ty, Variant):
        yield from (t for _, t in ty.arms)
    elif isinstance(ty, UType):
        yield from (ty.effect, ty.ctype)
    elif isinstance(ty, Returner):
        yield ty.vtype
    elif isinstance(ty, Fun):
        yield from (ty.arg, ty.result)
    elif isinstance(ty, CProd):
        yield from (ty.fst, ty.snd)
    elif isinstance(ty, EffOps):
        for _, p, r in ty.ops:
            yield from (p, r)
    elif isinstance(ty, DelStack):
        yield from ty.layers
    elif isinstance(ty, HandlerType):
        yield from (ty.in_vtype, ty.in_effect, ty.out_ctype, ty.out_effect)


def free_tyvars(ty) -> frozenset:
    if isinstance(ty, TyVar):
        return frozenset([ty.name])
    result: frozenset = frozenset()
    for child in type_children(ty):
        result |= free_tyvars(child)
    return result


def is_ground(ty: VType) -> bool:
    """Ground types contain neither thunks nor type variables."""
    if isinstance(ty, (UType, TyVar)):
        return False
    return all(is_ground(child) for child in type_children(ty))


def is_effect_free(ty) -> bool:
    """True when no effect other than ``Pure`` occurs anywhere in ``ty``."""
    if isinstance(ty, (EffOps, MonStack, DelStack)):
        return False
    return all(is_effect_free(child) for child in type_children(ty))


def effect_eq(a: Effect, b: Effect) -> bool:
    """
    Equality of effects.

    Monad definitions are stored with a canonical bound type variable and
    de Bruijn bodies, so structural equality is alpha-equivalence.
    """
    return a == b
