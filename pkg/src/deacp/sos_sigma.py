"""Map-indexed structural operational semantics and bounded LTS construction.

Transitions are indexed by an evaluation map and an atomic action (or the
silent step); termination is indexed by an evaluation map. A term wrapped in
an evaluation operator behaves identically under every ambient map, so LTS
construction enumerates ambient maps only over the flexible variables that
occur outside carried maps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import terms as T
from .conditions import eval_cond
from .data_algebra import EvalMap, FlexVarDecl, Lit, enumerate_maps, eval_data
from .errors import ExplorationLimitError, GuardednessError
from .parser import render_action, render_term

_UNFOLD_LIMIT = 10_000


class _Sos:
    """Rule engine with per-(term, map) memoization."""

    def __init__(self, ctx: T.Context):
        self.ctx = ctx
        self.step_cache: dict = {}
        self.term_cache: dict = {}
        self.depth = 0

    def _eval(self, e, sigma):
        return eval_data(e, sigma, self.ctx.carrier)

    def _eval_action(self, alpha, sigma):
        if isinstance(alpha, T.ParamAction):
            return T.ParamAction(
                alpha.name, tuple(Lit(self._eval(e, sigma)) for e in alpha.args)
            )
        if isinstance(alpha, T.AssignAction):
            return T.AssignAction(alpha.var, Lit(self._eval(alpha.expr, sigma)))
        return alpha

    def _sync(self, moves_x, moves_y, sigma):
        """Synchronization moves of two move sets under the communication function."""
        out = []
        for ax, tx in moves_x:
            for ay, ty in moves_y:
                if isinstance(ax, T.BasicAction) and isinstance(ay, T.BasicAction):
                    c = self.ctx.gamma.result(ax.name, ay.name)
                    if c is not None:
                        out.append((T.BasicAction(c), tx, ty))
                elif isinstance(ax, T.ParamAction) and isinstance(ay, T.ParamAction):
                    if len(ax.args) != len(ay.args):
                        continue
                    c = self.ctx.gamma.result(ax.name, ay.name)
                    if c is None:
                        continue
                    if all(
                        self._eval(e1, sigma) == self._eval(e2, sigma)
                        for e1, e2 in zip(ax.args, ay.args)
                    ):
                        out.append((T.ParamAction(c, ax.args), tx, ty))
        return out

    def steps(self, t: T.ProcTerm, sigma: EvalMap) -> tuple:
        """All pairs (action, canonical target) derivable for t under sigma."""
        key = (t, sigma)
        hit = self.step_cache.get(key)
        if hit is not None:
            return hit
        self.depth += 1
        if self.depth > _UNFOLD_LIMIT:
            raise GuardednessError("unguarded recursion detected during unfolding")
        try:
            moves = self._steps(t, sigma)
        finally:
            self.depth -= 1
        seen = []
        for m in moves:
            if m not in seen:
                seen.append(m)
        result = tuple(seen)
        self.step_cache[key] = result
        return result

    def _canon(self, t):
        return T.canonical(t, self.ctx.carrier)

    def _steps(self, t, sigma):
        if isinstance(t, T.Atom):
            return [(t.action, T.EPSILON)]
        if isinstance(t, (T.Inaction, T.Empty)):
            return []
        if isinstance(t, T.Alt):
            return list(self.steps(t.left, sigma)) + list(self.steps(t.right, sigma))
        if isinstance(t, T.Seq):
            out = [
                (a, self._canon(T.Seq(target, t.right)))
                for a, target in self.steps(t.left, sigma)
            ]
            if self.terminates(t.left, sigma):
                out.extend(self.steps(t.right, sigma))
            return out
        if isinstance(t, T.Par):
            left_moves = self.steps(t.left, sigma)
            right_moves = self.steps(t.right, sigma)
            out = [(a, self._canon(T.Par(tgt, t.right))) for a, tgt in left_moves]
            out += [(a, self._canon(T.Par(t.left, tgt))) for a, tgt in right_moves]
            out += [
                (c, self._canon(T.Par(tx, ty)))
                for c, tx, ty in self._sync(left_moves, right_moves, sigma)
            ]
            return out
        if isinstance(t, T.LeftMerge):
            return [
                (a, self._canon(T.Par(tgt, t.right)))
                for a, tgt in self.steps(t.left, sigma)
            ]
        if isinstance(t, T.CommMerge):
            return [
                (c, self._canon(T.Par(tx, ty)))
                for c, tx, ty in self._sync(
                    self.steps(t.left, sigma), self.steps(t.right, sigma), sigma
                )
            ]
        if isinstance(t, T.Encap):
            return [
                (a, self._canon(T.Encap(t.patterns, tgt)))
                for a, tgt in self.steps(t.body, sigma)
                if not T.matches_any(a, t.patterns)
            ]
        if isinstance(t, T.Abstr):
            out = []
            for a, tgt in self.steps(t.body, sigma):
                label = T.TAU if T.matches_any(a, t.patterns) else a
                out.append((label, self._canon(T.Abstr(t.patterns, tgt))))
            return out
        if isinstance(t, T.Guard):
            if eval_cond(t.cond, sigma, self.ctx.carrier):
                return list(self.steps(t.body, sigma))
            return []
        if isinstance(t, T.Eval):
            carried = t.emap
            out = []
            for a, tgt in self.steps(t.body, carried):
                if isinstance(a, T.AssignAction):
                    value = self._eval(a.expr, carried)
                    label = T.AssignAction(a.var, Lit(value))
                    updated = carried.updated(a.var, value)
                    out.append((label, self._canon(T.Eval(updated, tgt))))
                else:
                    out.append(
                        (self._eval_action(a, carried), self._canon(T.Eval(carried, tgt)))
                    )
            return out
        if isinstance(t, T.RecConst):
            T.require_glrs(t.spec)
            return list(self.steps(self._canon(T.unfold(t)), sigma))
        if isinstance(t, T.RecVar):
            raise GuardednessError(f"free recursion variable {t.name!r} has no transitions")
        raise TypeError(f"not a process term: {t!r}")

    def terminates(self, t: T.ProcTerm, sigma: EvalMap) -> bool:
        key = (t, sigma)
        hit = self.term_cache.get(key)
        if hit is not None:
            return hit
        self.depth += 1
        if self.depth > _UNFOLD_LIMIT:
            raise GuardednessError("unguarded recursion detected during unfolding")
        try:
            result = self._terminates(t, sigma)
        finally:
            self.depth -= 1
        self.term_cache[key] = result
        return result

    def _terminates(self, t, sigma):
        if isinstance(t, T.Empty):
            return True
        if isinstance(t, (T.Inaction, T.Atom, T.LeftMerge, T.CommMerge)):
            return False
        if isinstance(t, T.Alt):
            return self.terminates(t.left, sigma) or self.terminates(t.right, sigma)
        if isinstance(t, (T.Seq, T.Par)):
            return self.terminates(t.left, sigma) and self.terminates(t.right, sigma)
        if isinstance(t, (T.Encap, T.Abstr)):
            return self.terminates(t.body, sigma)
        if isinstance(t, T.Guard):
            return eval_cond(t.cond, sigma, self.ctx.carrier) and self.terminates(
                t.body, sigma
            )
        if isinstance(t, T.Eval):
            # Termination of an evaluated process is ambient-independent.
            return self.terminates(t.body, t.emap)
        if isinstance(t, T.RecConst):
            T.require_glrs(t.spec)
            return self.terminates(self._canon(T.unfold(t)), sigma)
        if isinstance(t, T.RecVar):
            raise GuardednessError(f"free recursion variable {t.name!r} cannot terminate")
        raise TypeError(f"not a process term: {t!r}")


def step(t: T.ProcTerm, sigma: EvalMap, ctx: T.Context) -> set:
    """Derivable (action, target) pairs of a closed term under one map."""
    return set(_Sos(ctx).steps(T.canonical(t, ctx.carrier), sigma))


def terminates(t: T.ProcTerm, sigma: EvalMap, ctx: T.Context) -> bool:
    return _Sos(ctx).terminates(T.canonical(t, ctx.carrier), sigma)


@dataclass
class SigmaLts:
    """Explored transition system over canonical terms.

    domain lists the flexible variables the ambient maps range over; every
    transition and termination fact is indexed by a total map over domain.
    """

    states: list
    root: int
    domain: tuple
    maps: tuple
    transitions: list  # per state: tuple of (EvalMap, Action, target id)
    terminating: set  # of (state id, EvalMap)
    state_ids: dict = field(default_factory=dict)

    @property
    def num_transitions(self) -> int:
        return sum(len(ts) for ts in self.transitions)

    def is_tau_free(self) -> bool:
        return all(
            not isinstance(a, T.TauAction)
            for ts in self.transitions
            for _, a, _ in ts
        )

    def to_json_dict(self) -> dict:
        trans = []
        for src, ts in enumerate(self.transitions):
            for sigma, action, tgt in ts:
                trans.append(
                    {
                        "from": src,
                        "map": sigma.as_dict(),
                        "action": render_action(action),
                        "to": tgt,
                    }
                )
        trans.sort(key=lambda d: (d["from"], sorted(d["map"].items()), d["action"], d["to"]))
        term = sorted(
            [{"state": s, "map": m.as_dict()} for s, m in self.terminating],
            key=lambda d: (d["state"], sorted(d["map"].items())),
        )
        return {
            "states": [render_term(s) for s in self.states],
            "root": self.root,
            "domain": list(self.domain),
            "transitions": trans,
            "terminating": term,
        }


def ambient_domain(t: T.ProcTerm, ctx: T.Context) -> tuple:
    """Declared variables that can influence t's behaviour, in declaration order."""
    occurring = T.occurring_flex_vars(t)
    return tuple(v for v in ctx.decl if v in occurring)


def build_lts(
    t: T.ProcTerm,
    ctx: T.Context,
    domain: Optional[tuple] = None,
    bound: Optional[int] = None,
) -> SigmaLts:
    """Breadth-first closure of the step relation over every enumerated map."""
    if not T.is_closed(t):
        raise GuardednessError("cannot explore a term with free recursion variables")
    bound = bound if bound is not None else ctx.state_bound
    if domain is None:
        domain = ambient_domain(t, ctx)
    maps = tuple(enumerate_maps(FlexVarDecl(tuple(domain)), ctx.carrier, ctx.enum_bound))
    sos = _Sos(ctx)
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
        for sigma in maps:
            for action, target in sos.steps(state, sigma):
                tid = ids.get(target)
                if tid is None:
                    tid = len(states)
                    if tid >= bound:
                        raise ExplorationLimitError(bound, len(states), n_transitions)
                    ids[target] = tid
                    states.append(target)
                    transitions.append(())
                    queue.append(tid)
                out.append((sigma, action, tid))
                n_transitions += 1
            if sos.terminates(state, sigma):
                terminating.add((sid, sigma))
        transitions[sid] = tuple(out)
    return SigmaLts(
        states=states,
        root=0,
        domain=tuple(domain),
        maps=maps,
        transitions=transitions,
        terminating=terminating,
        state_ids=ids,
    )


def lts_equal_up_to_renaming(l1: SigmaLts, l2: SigmaLts) -> bool:
    """Equality of two explored systems keyed by canonical state terms."""
    if l1.domain != l2.domain:
        return False
    if set(l1.states) != set(l2.states):
        return False
    if l1.states[l1.root] != l2.states[l2.root]:
        return False
    def edge_set(l):
        out = set()
        for src, ts in enumerate(l.transitions):
            for sigma, action, tgt in ts:
                out.add((l.states[src], sigma, action, l.states[tgt]))
        return out
    if edge_set(l1) != edge_set(l2):
        return False
    term1 = {(l1.states[s], m) for s, m in l1.terminating}
    term2 = {(l2.states[s], m) for s, m in l2.terminating}
    return term1 == term2
