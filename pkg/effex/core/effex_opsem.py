"""
Effex Operational Semantics
===========================

Deterministic small-step semantics shared by the four calculi.

A computation is decomposed into an evaluation context (a stack of frames)
and a redex. Basic frames are ``let □ in N``, ``□ V`` and ``prj_i □``;
delimiter frames are ``handle □ with H``, ``reify[M] □`` and
``reset □ as x in N``. A control operator (operation call, reflect, shift0)
is never a redex on its own: the redex is the nearest enclosing delimiter,
with the basic frames in between forming the hoisted continuation.

``contract`` applies a rule at the root of a redex. It works on open terms
too, which the congruence search in :mod:`effex_xlate` relies on.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from ..utils.errors import MalformedTermError
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
    Value,
    Var,
    instantiate,
    scope_check,
)
from .effex_types import CProd, CType, Fun, Prod, Returner, UType, Variant, VType, subst_tyvar

logger = logging.getLogger(__name__)

DEFAULT_FUEL = 1_000_000


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LetFrame:
    body: Comp


@dataclass(frozen=True)
class AppFrame:
    arg: Value


@dataclass(frozen=True)
class PrjFrame:
    side: int


@dataclass(frozen=True)
class HandleFrame:
    handler: Handler


@dataclass(frozen=True)
class ReifyFrame:
    monad: MonadDef
    ann: Optional[ReifyType] = None


@dataclass(frozen=True)
class DollarFrame:
    cont: Comp
    ann: Optional[ResetType] = None


Frame = Union[LetFrame, AppFrame, PrjFrame, HandleFrame, ReifyFrame, DollarFrame]
BASIC_FRAMES = (LetFrame, AppFrame, PrjFrame)
DELIMITER_FRAMES = (HandleFrame, ReifyFrame, DollarFrame)

# control operator -> (delimiter frame it is caught by, stuck reason without one)
CONTROL = {
    OpCall: (HandleFrame, "unhandled-op"),
    Reflect: (ReifyFrame, "reflect-without-reify"),
    Shift0: (DollarFrame, "shift-without-reset"),
}


def plug(frames: Sequence[Frame], m: Comp) -> Comp:
    """Fill the context ``frames`` (outermost first) with ``m``."""
    for frame in reversed(frames):
        if isinstance(frame, LetFrame):
            m = Let(m, frame.body)
        elif isinstance(frame, AppFrame):
            m = App(m, frame.arg)
        elif isinstance(frame, PrjFrame):
            m = Prj(frame.side, m)
        elif isinstance(frame, HandleFrame):
            m = Handle(m, frame.handler)
        elif isinstance(frame, ReifyFrame):
            m = Reify(frame.monad, m, frame.ann)
        else:
            m = Dollar(m, frame.cont, frame.ann)
    return m


def shift_frames(frames: Sequence[Frame], by: int = 1) -> List[Frame]:
    """Weaken every frame by ``by`` fresh binders."""
    shifted: List[Frame] = []
    for frame in frames:
        if isinstance(frame, LetFrame):
            shifted.append(LetFrame(frame.body.shift(by, 1)))
        elif isinstance(frame, AppFrame):
            shifted.append(AppFrame(frame.arg.shift(by)))
        elif isinstance(frame, HandleFrame):
            shifted.append(HandleFrame(frame.handler.shift(by)))
        elif isinstance(frame, DollarFrame):
            shifted.append(DollarFrame(frame.cont.shift(by, 1), frame.ann))
        else:
            shifted.append(frame)
    return shifted


def _peel(m: Comp) -> Tuple[Optional[Frame], Optional[Comp]]:
    """Split one frame off ``m``, or ``(None, None)`` if ``m`` is not framed."""
    if isinstance(m, Let):
        return LetFrame(m.body), m.bound
    if isinstance(m, App):
        return AppFrame(m.arg), m.fun
    if isinstance(m, Prj):
        return PrjFrame(m.side), m.comp
    if isinstance(m, Handle):
        return HandleFrame(m.handler), m.body
    if isinstance(m, Reify):
        return ReifyFrame(m.monad, m.ann), m.body
    if isinstance(m, Dollar):
        return DollarFrame(m.cont, m.ann), m.body
    return None, None


def hoist(m: Comp) -> Tuple[List[Frame], Comp]:
    """Split ``m`` into its basic frames and the first non-basic subterm."""
    frames: List[Frame] = []
    while isinstance(m, (Let, App, Prj)):
        frame, m = _peel(m)
        frames.append(frame)
    return frames, m


# ---------------------------------------------------------------------------
# Decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    """``context[redex]``; ``context`` lists frames outermost first."""

    context: Tuple[Frame, ...]
    redex: Comp

    @property
    def depth(self) -> int:
        return len(self.context)


@dataclass(frozen=True)
class AlreadyValue:
    value: Value


@dataclass(frozen=True)
class StuckAt:
    reason: str
    context: Tuple[Frame, ...] = ()
    subject: Optional[Comp] = None


def decompose(m: Comp) -> Union[Decomposition, AlreadyValue, StuckAt]:
    """Find the unique evaluation context and redex of ``m``."""
    frames: List[Frame] = []
    while True:
        frame, inner = _peel(m)
        if frame is not None:
            frames.append(frame)
            m = inner
            continue
        break

    if isinstance(m, Return):
        if not frames:
            return AlreadyValue(m.value)
        return _redex_of(frames, m, is_return=True)
    control = CONTROL.get(type(m))
    if control is not None:
        delimiter, reason = control
        for i in range(len(frames) - 1, -1, -1):
            if isinstance(frames[i], DELIMITER_FRAMES):
                if not isinstance(frames[i], delimiter):
                    break
                if isinstance(m, OpCall) and frames[i].handler.clause(m.op) is None:
                    return StuckAt("unhandled-op", tuple(frames), m)
                return Decomposition(tuple(frames[:i]), plug(frames[i:], m))
        return StuckAt(reason, tuple(frames), m)
    if isinstance(m, (Lam, CPair)):
        if not frames:
            return StuckAt("terminal", (), m)
        return _redex_of(frames, m, is_return=False)
    if _contract(m) is not None:
        return Decomposition(tuple(frames), m)
    reason = "ill-formed-case" if isinstance(m, Case) else "ill-formed"
    return StuckAt(reason, tuple(frames), m)


def _redex_of(frames: List[Frame], m: Comp, is_return: bool):
    redex = plug(frames[-1:], m)
    if _contract(redex) is not None:
        return Decomposition(tuple(frames[:-1]), redex)
    return StuckAt("ill-formed", tuple(frames), m)


# ---------------------------------------------------------------------------
# Contraction
# ---------------------------------------------------------------------------


def _continuation(frames: Sequence[Frame], wrap, arg: Optional[VType] = None, ann=None) -> Thunk:
    """
    ``thunk (λx. wrap(CF[return x]))`` with ``CF`` weakened under the new binder.

    ``arg`` and ``ann`` annotate the binder and the thunk when the delimiter
    and the control operator carry their types.
    """
    return Thunk(Lam(wrap(plug(shift_frames(frames), Return(Var(0)))), arg), ann)


def _ascribe(m: Comp, ctype: CType) -> Comp:
    """Push a known type into the unannotated introduction forms at the head of ``m``."""
    if isinstance(m, Return) and isinstance(ctype, Returner):
        return Return(_ascribe_value(m.value, ctype.vtype))
    if isinstance(m, Lam) and isinstance(ctype, Fun):
        return Lam(_ascribe(m.body, ctype.result), m.ann if m.ann is not None else ctype.arg)
    if isinstance(m, CPair) and isinstance(ctype, CProd):
        return CPair(_ascribe(m.fst, ctype.fst), _ascribe(m.snd, ctype.snd))
    if isinstance(m, Let):
        return Let(m.bound, _ascribe(m.body, ctype))
    if isinstance(m, Split):
        return Split(m.scrutinee, _ascribe(m.body, ctype))
    if isinstance(m, Case):
        arms = tuple((label, _ascribe(body, ctype)) for label, body in m.arms)
        return Case(m.scrutinee, arms, m.ann if m.arms else ctype)
    if isinstance(m, (Reflect, Shift0)) and m.ann is None and isinstance(ctype, Returner):
        return type(m)(m.body, ctype.vtype)
    return m


def _ascribe_value(v: Value, vtype: VType) -> Value:
    if isinstance(v, Pair) and isinstance(vtype, Prod):
        return Pair(_ascribe_value(v.fst, vtype.fst), _ascribe_value(v.snd, vtype.snd))
    if isinstance(v, Inj) and v.ann is None and isinstance(vtype, Variant):
        arm = vtype.lookup(v.label)
        payload = v.payload if arm is None else _ascribe_value(v.payload, arm)
        return Inj(v.label, payload, vtype)
    if isinstance(v, Thunk) and v.ann is None and isinstance(vtype, UType):
        return Thunk(v.body, vtype)
    return v


def _contract(m: Comp) -> Optional[Tuple[str, Comp]]:
    if isinstance(m, Force):
        if isinstance(m.value, Thunk):
            return "force-thunk", m.value.body
        return None
    if isinstance(m, Let):
        if isinstance(m.bound, Return):
            return "let-return", instantiate(m.body, m.bound.value)
        return None
    if isinstance(m, App):
        if isinstance(m.fun, Lam):
            return "app-lam", instantiate(m.fun.body, m.arg)
        return None
    if isinstance(m, Prj):
        if isinstance(m.comp, CPair):
            return "prj-cpair", m.comp.fst if m.side == 1 else m.comp.snd
        return None
    if isinstance(m, Split):
        if isinstance(m.scrutinee, Pair):
            return "split-pair", instantiate(m.body, m.scrutinee.fst, m.scrutinee.snd)
        return None
    if isinstance(m, Case):
        if isinstance(m.scrutinee, Inj):
            arm = m.arm(m.scrutinee.label)
            if arm is not None:
                return "case-inj", instantiate(arm, m.scrutinee.payload)
        return None
    if isinstance(m, Handle):
        if isinstance(m.body, Return):
            return "handle-return", instantiate(m.handler.ret, m.body.value)
        frames, control = hoist(m.body)
        if isinstance(control, OpCall):
            clause = m.handler.clause(control.op)
            if clause is None:
                return None
            handler = m.handler.shift(1)
            k = _continuation(frames, lambda body: Handle(body, handler))
            return "handle-op", instantiate(clause, control.arg, k)
        return None
    if isinstance(m, Reify):
        typed = m.ann
        if isinstance(m.body, Return):
            reduct = instantiate(m.monad.unit_body, m.body.value)
            if typed is not None:
                reduct = _ascribe(reduct, _carrier_at(m.monad, typed.vtype))
            return "reify-return", reduct
        frames, control = hoist(m.body)
        if isinstance(control, Reflect):
            wrap = lambda body: Reify(m.monad, body, typed)  # noqa: E731
            if typed is None or control.ann is None:
                f = _continuation(frames, wrap)
                return "reify-reflect", instantiate(m.monad.bind_body, Thunk(control.body), f)
            a, result = control.ann, _carrier_at(m.monad, typed.vtype)
            reflected = Thunk(control.body, UType(typed.effect, _carrier_at(m.monad, a)))
            f = _continuation(frames, wrap, a, UType(typed.effect, Fun(a, result)))
            return "reify-reflect", _ascribe(instantiate(m.monad.bind_body, reflected, f), result)
        return None
    if isinstance(m, Dollar):
        if isinstance(m.body, Return):
            return "dollar-return", instantiate(m.cont, m.body.value)
        frames, control = hoist(m.body)
        if isinstance(control, Shift0):
            cont = m.cont.shift(1, 1)
            wrap = lambda body: Dollar(body, cont, m.ann)  # noqa: E731
            if m.ann is None or control.ann is None:
                k = _continuation(frames, wrap)
            else:
                k_type = UType(m.ann.effect, Fun(control.ann, m.ann.answer))
                k = _continuation(frames, wrap, control.ann, k_type)
            return "dollar-shift", instantiate(control.body, k)
        return None
    return None


def _carrier_at(monad: MonadDef, vtype: VType) -> CType:
    return subst_tyvar(monad.carrier, monad.type_var, vtype)


def contract(redex: Comp) -> Optional[Tuple[str, Comp]]:
    """
    Apply the rule matching the root of ``redex``.

    Returns:
        ``(rule name, reduct)``, or ``None`` when the root is not a redex
    """
    return _contract(redex)


def beta_step(redex: Comp, context: Sequence[Frame] = ()) -> Comp:
    """Contract ``redex`` and plug the reduct back into ``context``."""
    result = _contract(redex)
    if result is None:
        raise ValueError(f"not a redex: {type(redex).__name__}")
    return plug(context, result[1])


def step(m: Comp) -> Optional[Tuple[str, int, Comp]]:
    """One step of ``m`` as ``(rule, depth, result)``, or ``None`` if it cannot step."""
    found = decompose(m)
    if not isinstance(found, Decomposition):
        return None
    rule, reduct = _contract(found.redex)
    return rule, found.depth, plug(found.context, reduct)


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalForm:
    value: Value

    def to_dict(self) -> Dict[str, Any]:
        from .effex_surface import show_result

        return {"kind": "normal-form", "value": show_result(self.value)}


@dataclass(frozen=True)
class OutOfFuel:
    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "out-of-fuel"}


@dataclass(frozen=True)
class Stuck:
    reason: str

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "stuck", "reason": self.reason}


Status = Union[NormalForm, OutOfFuel, Stuck]


@dataclass(frozen=True)
class TraceStep:
    depth: int
    rule: str
    term: Comp


@dataclass
class Trace:
    steps: List[TraceStep] = field(default_factory=list)
    status: Status = OutOfFuel()
    final: Optional[Comp] = None
    count: int = 0

    @property
    def rules(self) -> List[str]:
        return [s.rule for s in self.steps]

    def to_dict(self) -> Dict[str, Any]:
        from .effex_surface import print_term

        return {
            "steps": [
                {"rule": s.rule, "depth": s.depth, "term": print_term(s.term)} for s in self.steps
            ],
            "count": self.count,
            "status": self.status.to_dict(),
        }


def run(m: Comp, fuel: int = DEFAULT_FUEL, record: bool = True) -> Trace:
    """
    Reduce ``m`` until it is a value, gets stuck or ``fuel`` steps are spent.

    Args:
        m: Closed computation
        fuel: Maximum number of steps
        record: Keep every intermediate term in the trace

    Raises:
        MalformedTermError: If ``m`` has free variables
    """
    scope_check(m, 0)
    trace = Trace()
    current = m
    while True:
        found = decompose(current)
        if isinstance(found, AlreadyValue):
            trace.status = NormalForm(found.value)
            break
        if isinstance(found, StuckAt):
            trace.status = Stuck(found.reason)
            break
        if trace.count >= fuel:
            logger.warning(f"fuel exhausted after {fuel} steps")
            trace.status = OutOfFuel()
            break
        rule, reduct = _contract(found.redex)
        current = plug(found.context, reduct)
        trace.count += 1
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug(f"step {trace.count}: {rule} at depth {found.depth}")
        if record:
            trace.steps.append(TraceStep(found.depth, rule, current))
    trace.final = current
    return trace


def evaluate(m: Comp, fuel: int = DEFAULT_FUEL) -> Value:
    """
    Run ``m`` and return its value.

    Raises:
        MalformedTermError: If the run does not reach a normal form
    """
    trace = run(m, fuel, record=False)
    if not isinstance(trace.status, NormalForm):
        raise MalformedTermError(f"evaluation did not finish: {trace.status.to_dict()}")
    return trace.status.value
