"""Condition-labelled structural operational semantics.

Transitions carry a satisfiable condition instead of an evaluation map;
instantiating each transition at every satisfying map recovers the
map-indexed semantics exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import terms as T
from .conditions import (
    And,
    CTrue,
    Cmp,
    Condition,
    TRUE,
    cond_signature,
    eval_cond,
    subst_map_cond,
)
from .data_algebra import EvalMap, FlexVarDecl, Lit, enumerate_maps, eval_data
from .errors import ExplorationLimitError, GuardednessError
from .parser import render_action, render_cond, render_term
from .sos_sigma import SigmaLts, ambient_domain

_UNFOLD_LIMIT = 10_000


class _LabelRegistry:
    """Canonical representative per semantic equivalence class of conditions."""

    def __init__(self, ctx: T.Context):
        self.ctx = ctx
        self.by_signature: dict = {}

    def _flatten(self, phi: Condition, acc: list):
        if isinstance(phi, And):
            self._flatten(phi.left, acc)
            self._flatten(phi.right, acc)
        elif not isinstance(phi, CTrue):
            acc.append(phi)

    def normalize(self, phi: Condition) -> Optional[Condition]:
        """None when unsatisfiable; otherwise the canonical equivalent label."""
        vars_, bits = cond_signature(phi, self.ctx.carrier, self.ctx.enum_bound)
        if not any(bits):
            return None
        if all(bits):
            return TRUE
        key = (vars_, bits)
        hit = self.by_signature.get(key)
        if hit is not None:
            return hit
        conjuncts: list = []
        self._flatten(phi, conjuncts)
        uniq = []
        for c in sorted(conjuncts, key=render_cond):
            if c not in uniq:
                uniq.append(c)
        out = uniq[0]
        for c in uniq[1:]:
            out = And(out, c)
        self.by_signature[key] = out
        return out


class _CondSos:
    def __init__(self, ctx: T.Context, registry: Optional[_LabelRegistry] = None):
        self.ctx = ctx
        self.registry = registry or _LabelRegistry(ctx)
        self.step_cache: dict = {}
        self.term_cache: dict = {}
        self.depth = 0

    def _canon(self, t):
        return T.canonical(t, self.ctx.carrier)

    def _conj(self, phi: Condition, psi: Condition) -> Optional[Condition]:
        return self.registry.normalize(And(phi, psi))

    def _data_eq(self, args1, args2) -> Condition:
        out: Optional[Condition] = None
        for e1, e2 in zip(args1, args2):
            eq = Cmp("=", e1, e2)
            out = eq if out is None else And(out, eq)
        return out if out is not None else TRUE

    def _sync(self, moves_x, moves_y):
        out = []
        for phi, ax, tx in moves_x:
            for psi, ay, ty in moves_y:
                if isinstance(ax, T.BasicAction) and isinstance(ay, T.BasicAction):
                    c = self.ctx.gamma.result(ax.name, ay.name)
                    if c is None:
                        continue
                    label = self._conj(phi, psi)
                    if label is not None:
                        out.append((label, T.BasicAction(c), tx, ty))
                elif isinstance(ax, T.ParamAction) and isinstance(ay, T.ParamAction):
                    if len(ax.args) != len(ay.args):
                        continue
                    c = self.ctx.gamma.result(ax.name, ay.name)
                    if c is None:
                        continue
                    label = self._conj(And(phi, psi), self._data_eq(ax.args, ay.args))
                    if label is not None:
                        out.append((label, T.ParamAction(c, ax.args), tx, ty))
        return out

    def steps(self, t: T.ProcTerm) -> tuple:
        hit = self.step_cache.get(t)
        if hit is not None:
            return hit
        self.depth += 1
        if self.depth > _UNFOLD_LIMIT:
            raise GuardednessError("unguarded recursion detected during unfolding")
        try:
            moves = self._steps(t)
        finally:
            self.depth -= 1
        seen = []
        for m in moves:
            if m not in seen:
                seen.append(m)
        result = tuple(seen)
        self.step_cache[t] = result
        return result

    def _steps(self, t):
        if isinstance(t, T.Atom):
            return [(TRUE, t.action, T.EPSILON)]
        if isinstance(t, (T.Inaction, T.Empty)):
            return []
        if isinstance(t, T.Alt):
            return list(self.steps(t.left)) + list(self.steps(t.right))
        if isinstance(t, T.Seq):
            out = [
                (phi, a, self._canon(T.Seq(target, t.right)))
                for phi, a, target in self.steps(t.left)
            ]
            for phi in self.terminating(t.left):
                for psi, a, target in self.steps(t.right):
                    label = self._conj(phi, psi)
                    if label is not None:
                        out.append((label, a, target))
            return out
        if isinstance(t, T.Par):
            left_moves = self.steps(t.left)
            right_moves = self.steps(t.right)
            out = [
                (phi, a, self._canon(T.Par(tgt, t.right))) for phi, a, tgt in left_moves
            ]
            out += [
                (phi, a, self._canon(T.Par(t.left, tgt))) for phi, a, tgt in right_moves
            ]
            out += [
                (phi, c, self._canon(T.Par(tx, ty)))
                for phi, c, tx, ty in self._sync(left_moves, right_moves)
            ]
            return out
        if isinstance(t, T.LeftMerge):
            return [
                (phi, a, self._canon(T.Par(tgt, t.right)))
                for phi, a, tgt in self.steps(t.left)
            ]
        if isinstance(t, T.CommMerge):
            return [
                (phi, c, self._canon(T.Par(tx, ty)))
                for phi, c, tx, ty in self._sync(self.steps(t.left), self.steps(t.right))
            ]
        if isinstance(t, T.Encap):
            return [
                (phi, a, self._canon(T.Encap(t.patterns, tgt)))
                for phi, a, tgt in self.steps(t.body)
                if not T.matches_any(a, t.patterns)
            ]
        if isinstance(t, T.Abstr):
            out = []
            for phi, a, tgt in self.steps(t.body):
                label_action = T.TAU if T.matches_any(a, t.patterns) else a
                out.append((phi, label_action, self._canon(T.Abstr(t.patterns, tgt))))
            return out
        if isinstance(t, T.Guard):
            out = []
            for phi, a, tgt in self.steps(t.body):
                label = self._conj(phi, t.cond)
                if label is not None:
                    out.append((label, a, tgt))
            return out
        if isinstance(t, T.Eval):
            carried = t.emap
            out = []
            for phi, a, tgt in self.steps(t.body):
                resolved = subst_map_cond(phi, carried)
                if not eval_cond(resolved, EvalMap(()), self.ctx.carrier):
                    continue
                if isinstance(a, T.AssignAction):
                    value = eval_data(a.expr, carried, self.ctx.carrier)
                    action = T.AssignAction(a.var, Lit(value))
                    updated = carried.updated(a.var, value)
                    out.append((TRUE, action, self._canon(T.Eval(updated, tgt))))
                else:
                    if isinstance(a, T.ParamAction):
                        action = T.ParamAction(
                            a.name,
                            tuple(
                                Lit(eval_data(e, carried, self.ctx.carrier))
                                for e in a.args
                            ),
                        )
                    else:
                        action = a
                    out.append((TRUE, action, self._canon(T.Eval(carried, tgt))))
            return out
        if isinstance(t, T.RecConst):
            T.require_glrs(t.spec)
            return list(self.steps(self._canon(T.unfold(t))))
        if isinstance(t, T.RecVar):
            raise GuardednessError(f"free recursion variable {t.name!r} has no transitions")
        raise TypeError(f"not a process term: {t!r}")

    def terminating(self, t: T.ProcTerm) -> tuple:
        hit = self.term_cache.get(t)
        if hit is not None:
            return hit
        self.depth += 1
        if self.depth > _UNFOLD_LIMIT:
            raise GuardednessError("unguarded recursion detected during unfolding")
        try:
            conds = self._terminating(t)
        finally:
            self.depth -= 1
        seen = []
        for c in conds:
            if c not in seen:
                seen.append(c)
        result = tuple(seen)
        self.term_cache[t] = result
        return result

    def _terminating(self, t):
        if isinstance(t, T.Empty):
            return [TRUE]
        if isinstance(t, (T.Inaction, T.Atom, T.LeftMerge, T.CommMerge)):
            return []
        if isinstance(t, T.Alt):
            return list(self.terminating(t.left)) + list(self.terminating(t.right))
        if isinstance(t, (T.Seq, T.Par)):
            out = []
            for phi in self.terminating(t.left):
                for psi in self.terminating(t.right):
                    label = self._conj(phi, psi)
                    if label is not None:
                        out.append(label)
            return out
        if isinstance(t, (T.Encap, T.Abstr)):
            return list(self.terminating(t.body))
        if isinstance(t, T.Guard):
            out = []
            for phi in self.terminating(t.body):
                label = self._conj(phi, t.cond)
                if label is not None:
                    out.append(label)
            return out
        if isinstance(t, T.Eval):
            out = []
            for phi in self.terminating(t.body):
                resolved = subst_map_cond(phi, t.emap)
                if eval_cond(resolved, EvalMap(()), self.ctx.carrier):
                    out.append(TRUE)
            return out
        if isinstance(t, T.RecConst):
            T.require_glrs(t.spec)
            return list(self.terminating(self._canon(T.unfold(t))))
        if isinstance(t, T.RecVar):
            raise GuardednessError(f"free recursion variable {t.name!r} cannot terminate")
        raise TypeError(f"not a process term: {t!r}")


def step_cond(t: T.ProcTerm, ctx: T.Context) -> set:
    """Derivable (condition, action, target) triples of a closed term."""
    return set(_CondSos(ctx).steps(T.canonical(t, ctx.carrier)))


def terminates_cond(t: T.ProcTerm, ctx: T.Context) -> set:
    return set(_CondSos(ctx).terminating(T.canonical(t, ctx.carrier)))


@dataclass
class CondLts:
    states: list
    root: int
    domain: tuple
    transitions: list  # per state: tuple of (Condition, Action, target id)
    terminating: set  # of (state id, Condition)
    state_ids: dict = field(default_factory=dict)

    @property
    def num_transitions(self) -> int:
        return sum(len(ts) for ts in self.transitions)

    def to_json_dict(self) -> dict:
        trans = []
        for src, ts in enumerate(self.transitions):
            for cond, action, tgt in ts:
                trans.append(
                    {
                        "from": src,
                        "cond": render_cond(cond),
                        "action": render_action(action),
                        "to": tgt,
                    }
                )
        trans.sort(key=lambda d: (d["from"], d["cond"], d["action"], d["to"]))
        term = sorted(
            [{"state": s, "cond": render_cond(c)} for s, c in self.terminating],
            key=lambda d: (d["state"], d["cond"]),
        )
        return {
            "states": [render_term(s) for s in self.states],
            "root": self.root,
            "domain": list(self.domain),
            "transitions": trans,
            "terminating": term,
        }


def build_cond_lts(
    t: T.ProcTerm,
    ctx: T.Context,
    domain: Optional[tuple] = None,
    bound: Optional[int] = None,
) -> CondLts:
    if not T.is_closed(t):
        raise GuardednessError("cannot explore a term with free recursion variables")
    bound = bound if bound is not None else ctx.state_bound
    if domain is None:
        domain = ambient_domain(t, ctx)
    sos = _CondSos(ctx)
    root = T.canonical(t, ctx.carrier)
    states = [root]
    ids = {root: 0}
    transitions = [()]
    terminating = set()
    queue = [0]
    n_transitions = 0
    while queue:
        sid = queue.pop(0)
        state = states[sid]
        out = []
        for cond, action, target in sos.steps(state):
            tid = ids.get(target)
            if tid is None:
                tid = len(states)
                if tid >= bound:
                    raise ExplorationLimitError(bound, len(states), n_transitions)
                ids[target] = tid
                states.append(target)
                transitions.append(())
                queue.append(tid)
            out.append((cond, action, tid))
            n_transitions += 1
        for cond in sos.terminating(state):
            terminating.add((sid, cond))
        transitions[sid] = tuple(out)
    return CondLts(
        states=states,
        root=0,
        domain=tuple(domain),
        transitions=transitions,
        terminating=terminating,
        state_ids=ids,
    )


def expand_to_sigma(clts: CondLts, ctx: T.Context, domain: Optional[tuple] = None) -> SigmaLts:
    """Instantiate every condition-labelled fact at each of its satisfying maps."""
    if domain is None:
        domain = clts.domain
    maps = tuple(enumerate_maps(FlexVarDecl(tuple(domain)), ctx.carrier, ctx.enum_bound))
    transitions = []
    for ts in clts.transitions:
        out = []
        for sigma in maps:
            for cond, action, tgt in ts:
                if eval_cond(cond, sigma, ctx.carrier):
                    entry = (sigma, action, tgt)
                    if entry not in out:
                        out.append(entry)
        transitions.append(tuple(out))
    terminating = set()
    for sid, cond in clts.terminating:
        for sigma in maps:
            if eval_cond(cond, sigma, ctx.carrier):
                terminating.add((sid, sigma))
    return SigmaLts(
        states=list(clts.states),
        root=clts.root,
        domain=tuple(domain),
        maps=maps,
        transitions=transitions,
        terminating=terminating,
        state_ids=dict(clts.state_ids),
    )
