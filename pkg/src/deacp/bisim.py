"""Equivalence checking: data-equivalent action classes, silent closure,
rooted branching bisimulation on map-indexed systems, the condition-labelled
analogue decided per satisfying map, and the agreement experiment."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from . import terms as T
from .data_algebra import EvalMap, FlexVarDecl, enumerate_maps, eval_data, data_flex_vars
from .errors import DeacpError, DeclarationError, ShapeError
from .parser import render_action, render_term
from .sos_cond import CondLts, build_cond_lts, expand_to_sigma
from .sos_sigma import SigmaLts, build_lts


# --- data-equivalent actions --------------------------------------------------

def _data_equal_valid(e1, e2, ctx: T.Context, cache: Optional[dict] = None) -> bool:
    """Whether e1 = e2 holds under every evaluation of their flexible variables."""
    if e1 == e2:
        return True
    key = (e1, e2)
    if cache is not None and key in cache:
        return cache[key]
    names = tuple(sorted(data_flex_vars(e1) | data_flex_vars(e2)))
    result = True
    for sigma in enumerate_maps(FlexVarDecl(names), ctx.carrier, ctx.enum_bound):
        if eval_data(e1, sigma, ctx.carrier) != eval_data(e2, sigma, ctx.carrier):
            result = False
            break
    if cache is not None:
        cache[key] = result
        cache[(e2, e1)] = result
    return result


def actions_equivalent(a1: T.Action, a2: T.Action, ctx: T.Context,
                       cache: Optional[dict] = None) -> bool:
    """The data-equivalence relation on atomic actions and the silent step."""
    if a1 == a2:
        return True
    if isinstance(a1, T.TauAction) or isinstance(a2, T.TauAction):
        return False
    if isinstance(a1, T.BasicAction) or isinstance(a2, T.BasicAction):
        return False  # syntactic equality already failed
    if isinstance(a1, T.ParamAction) and isinstance(a2, T.ParamAction):
        if a1.name != a2.name or len(a1.args) != len(a2.args):
            return False
        return all(_data_equal_valid(e1, e2, ctx, cache) for e1, e2 in zip(a1.args, a2.args))
    if isinstance(a1, T.AssignAction) and isinstance(a2, T.AssignAction):
        return a1.var == a2.var and _data_equal_valid(a1.expr, a2.expr, ctx, cache)
    return False


def action_class(alpha: T.Action, ctx: T.Context, sigma: Optional[EvalMap] = None):
    """Canonical representative of alpha's data-equivalence class.

    Data arguments are evaluated, under sigma when given; open arguments
    without a map are an error.
    """
    def value(e):
        if sigma is not None:
            return eval_data(e, sigma, ctx.carrier)
        if data_flex_vars(e):
            raise DeclarationError("open data argument with no evaluation map")
        return eval_data(e, EvalMap(()), ctx.carrier)

    if isinstance(alpha, T.TauAction):
        return ("tau",)
    if isinstance(alpha, T.BasicAction):
        return ("basic", alpha.name)
    if isinstance(alpha, T.ParamAction):
        return ("param", alpha.name, tuple(value(e) for e in alpha.args))
    if isinstance(alpha, T.AssignAction):
        return ("assign", alpha.var, value(alpha.expr))
    raise TypeError(f"not an action: {alpha!r}")


# --- silent closure -------------------------------------------------------------

def silent_closure(lts: SigmaLts, state: int, sigma: EvalMap) -> frozenset:
    """States reachable from state through silent steps under sigma, reflexively."""
    seen = {state}
    frontier = [state]
    while frontier:
        s = frontier.pop()
        for sig, action, tgt in lts.transitions[s]:
            if sig == sigma and isinstance(action, T.TauAction) and tgt not in seen:
                seen.add(tgt)
                frontier.append(tgt)
    return frozenset(seen)


# --- results ----------------------------------------------------------------------

@dataclass
class BisimResult:
    equivalent: bool
    witness: Optional[tuple] = None  # pairs (left state id, right state id)
    counterexample: Optional[dict] = None
    relation: frozenset = frozenset()

    def to_json_dict(self) -> dict:
        out = {"equivalent": self.equivalent}
        if self.equivalent:
            out["witness"] = [list(p) for p in sorted(self.witness or ())]
        else:
            out["counterexample"] = self.counterexample
        return out


def _violation(l1, l2, pair, side, kind, sigma, action=None, target=None):
    i, j = pair
    return {
        "left_state": render_term(l1.states[i]),
        "right_state": render_term(l2.states[j]),
        "left_id": i,
        "right_id": j,
        "side": side,
        "kind": kind,
        "map": sigma.as_dict(),
        "action": render_action(action) if action is not None else None,
        "target": render_term(target) if target is not None else None,
    }


class _Indexed:
    """Per-state, per-map transition and silent-closure indexes."""

    def __init__(self, lts: SigmaLts):
        self.lts = lts
        self.by_sigma = []
        for ts in lts.transitions:
            index: dict = {}
            for sigma, action, tgt in ts:
                index.setdefault(sigma, []).append((action, tgt))
            self.by_sigma.append(index)
        self._closures: dict = {}

    def closure(self, state: int, sigma: EvalMap) -> frozenset:
        key = (state, sigma)
        hit = self._closures.get(key)
        if hit is None:
            hit = silent_closure(self.lts, state, sigma)
            self._closures[key] = hit
        return hit

    def moves(self, state: int, sigma: EvalMap):
        return self.by_sigma[state].get(sigma, ())


def _check_domains(l1, l2):
    if l1.domain != l2.domain:
        raise ShapeError(
            f"ambient domains differ: {l1.domain} vs {l2.domain}; "
            "build both systems over the union of their occurring variables"
        )


def rooted_branching_bisim(l1: SigmaLts, l2: SigmaLts, ctx: T.Context) -> BisimResult:
    """Greatest-fixpoint pair refinement deciding rooted branching bisimilarity.

    Starts from all cross pairs and deletes, in lexicographic order, every
    pair violating a transfer condition until stable; the root condition is
    then tested on the designated root pair against the surviving relation.
    """
    _check_domains(l1, l2)
    ix1, ix2 = _Indexed(l1), _Indexed(l2)
    act_cache: dict = {}

    def acts_eq(a, b):
        if a == b:
            return True
        key = (a, b)
        hit = act_cache.get(key)
        if hit is None:
            hit = actions_equivalent(a, b, ctx, act_cache)
            act_cache[key] = hit
        return hit

    relation = set(itertools.product(range(len(l1.states)), range(len(l2.states))))
    violations: dict = {}

    def transfer_ok(i, j):
        for sigma, action, target in l1.transitions[i]:
            matched = False
            for u in ix2.closure(j, sigma):
                if (i, u) not in relation:
                    continue
                if isinstance(action, T.TauAction) and (target, u) in relation:
                    matched = True
                    break
                for a2, t2 in ix2.moves(u, sigma):
                    if acts_eq(action, a2) and (target, t2) in relation:
                        matched = True
                        break
                if matched:
                    break
            if not matched:
                return _violation(l1, l2, (i, j), "left", "step", sigma,
                                  action, l1.states[target])
        for sigma, action, target in l2.transitions[j]:
            matched = False
            for u in ix1.closure(i, sigma):
                if (u, j) not in relation:
                    continue
                if isinstance(action, T.TauAction) and (u, target) in relation:
                    matched = True
                    break
                for a1, t1 in ix1.moves(u, sigma):
                    if acts_eq(action, a1) and (t1, target) in relation:
                        matched = True
                        break
                if matched:
                    break
            if not matched:
                return _violation(l1, l2, (i, j), "right", "step", sigma,
                                  action, l2.states[target])
        for sid, sigma in l1.terminating:
            if sid != i:
                continue
            if not any(
                (i, u) in relation and (u, sigma) in l2.terminating
                for u in ix2.closure(j, sigma)
            ):
                return _violation(l1, l2, (i, j), "left", "termination", sigma)
        for sid, sigma in l2.terminating:
            if sid != j:
                continue
            if not any(
                (u, j) in relation and (u, sigma) in l1.terminating
                for u in ix1.closure(i, sigma)
            ):
                return _violation(l1, l2, (i, j), "right", "termination", sigma)
        return None

    changed = True
    while changed:
        changed = False
        for pair in sorted(relation):
            bad = transfer_ok(*pair)
            if bad is not None:
                relation.discard(pair)
                violations[pair] = bad
                changed = True

    root_pair = (l1.root, l2.root)
    if root_pair not in relation:
        return BisimResult(False, counterexample=violations.get(root_pair),
                           relation=frozenset(relation))

    # Root condition: single-step matching plus termination agreement.
    for sigma, action, target in l1.transitions[l1.root]:
        if not any(
            acts_eq(action, a2) and (target, t2) in relation
            for a2, t2 in ix2.moves(l2.root, sigma)
        ):
            return BisimResult(False, counterexample=_violation(
                l1, l2, root_pair, "left", "root-step", sigma, action,
                l1.states[target]), relation=frozenset(relation))
    for sigma, action, target in l2.transitions[l2.root]:
        if not any(
            acts_eq(action, a1) and (t1, target) in relation
            for a1, t1 in ix1.moves(l1.root, sigma)
        ):
            return BisimResult(False, counterexample=_violation(
                l1, l2, root_pair, "right", "root-step", sigma, action,
                l2.states[target]), relation=frozenset(relation))
    for sigma in l1.maps:
        left_term = (l1.root, sigma) in l1.terminating
        right_term = (l2.root, sigma) in l2.terminating
        if left_term != right_term:
            return BisimResult(False, counterexample=_violation(
                l1, l2, root_pair, "left" if left_term else "right",
                "root-termination", sigma), relation=frozenset(relation))

    return BisimResult(True, witness=tuple(sorted(relation)),
                       relation=frozenset(relation))


def verify_branching_bisimulation(l1: SigmaLts, l2: SigmaLts, relation,
                                  ctx: T.Context, root: bool = True) -> list:
    """Replay the transfer conditions (and optionally the root condition)
    for every pair of a claimed witness; returns the violations found."""
    rel = set(relation)
    ix1, ix2 = _Indexed(l1), _Indexed(l2)
    act_cache: dict = {}
    issues = []
    for i, j in sorted(rel):
        for sigma, action, target in l1.transitions[i]:
            ok = False
            for u in ix2.closure(j, sigma):
                if (i, u) not in rel:
                    continue
                if isinstance(action, T.TauAction) and (target, u) in rel:
                    ok = True
                    break
                if any(actions_equivalent(action, a2, ctx, act_cache) and (target, t2) in rel
                       for a2, t2 in ix2.moves(u, sigma)):
                    ok = True
                    break
            if not ok:
                issues.append(_violation(l1, l2, (i, j), "left", "step", sigma, action,
                                         l1.states[target]))
        for sigma, action, target in l2.transitions[j]:
            ok = False
            for u in ix1.closure(i, sigma):
                if (u, j) not in rel:
                    continue
                if isinstance(action, T.TauAction) and (u, target) in rel:
                    ok = True
                    break
                if any(actions_equivalent(action, a1, ctx, act_cache) and (t1, target) in rel
                       for a1, t1 in ix1.moves(u, sigma)):
                    ok = True
                    break
            if not ok:
                issues.append(_violation(l1, l2, (i, j), "right", "step", sigma, action,
                                         l2.states[target]))
        for sid, sigma in l1.terminating:
            if sid == i and not any(
                (i, u) in rel and (u, sigma) in l2.terminating
                for u in ix2.closure(j, sigma)
            ):
                issues.append(_violation(l1, l2, (i, j), "left", "termination", sigma))
        for sid, sigma in l2.terminating:
            if sid == j and not any(
                (u, j) in rel and (u, sigma) in l1.terminating
                for u in ix1.closure(i, sigma)
            ):
                issues.append(_violation(l1, l2, (i, j), "right", "termination", sigma))
    if root and (l1.root, l2.root) not in rel:
        issues.append({"kind": "root-missing"})
    return issues


def replay_counterexample(l1: SigmaLts, l2: SigmaLts, result: BisimResult,
                          ctx: T.Context) -> bool:
    """Confirm a negative verdict: the recorded observation is derivable on its
    side and unmatchable against the surviving relation."""
    ce = result.counterexample
    if ce is None:
        return False
    i, j = ce["left_id"], ce["right_id"]
    sigma = EvalMap.of(ce["map"])
    rel = set(result.relation)
    src = l1 if ce["side"] == "left" else l2
    sid = i if ce["side"] == "left" else j
    if ce["kind"].endswith("termination"):
        if ce["kind"] == "root-termination":
            return ((sid, sigma) in src.terminating) != (
                ((j if ce["side"] == "left" else i), sigma)
                in (l2 if ce["side"] == "left" else l1).terminating
            )
        if (sid, sigma) not in src.terminating:
            return False
        other = l2 if ce["side"] == "left" else l1
        other_id = j if ce["side"] == "left" else i
        closure = silent_closure(other, other_id, sigma)
        for u in closure:
            pair = (i, u) if ce["side"] == "left" else (u, j)
            if pair in rel and (u, sigma) in other.terminating:
                return False
        return True
    # Step kinds: find the observed transition, then exhaust responses.
    observed = None
    for sig, action, tgt in src.transitions[sid]:
        if sig == sigma and render_action(action) == ce["action"] \
                and render_term(src.states[tgt]) == ce["target"]:
            observed = (action, tgt)
            break
    if observed is None:
        return False
    action, target = observed
    other = l2 if ce["side"] == "left" else l1
    other_id = j if ce["side"] == "left" else i
    act_cache: dict = {}
    if ce["kind"] == "root-step":
        candidates = [(other_id, a, t) for s, a, t in other.transitions[other_id]
                      if s == sigma]
    else:
        candidates = []
        for u in silent_closure(other, other_id, sigma):
            pair = (i, u) if ce["side"] == "left" else (u, j)
            if pair not in rel:
                continue
            if isinstance(action, T.TauAction):
                stay = (target, u) if ce["side"] == "left" else (u, target)
                if stay in rel:
                    return False
            for s, a, t in other.transitions[u]:
                if s == sigma:
                    candidates.append((u, a, t))
    for _, a, t in candidates:
        if actions_equivalent(action, a, ctx, act_cache):
            pair = (target, t) if ce["side"] == "left" else (t, target)
            if pair in rel:
                return False
    return True


# --- signature-based refinement for silent-step-free systems ---------------------

def strong_bisim_signature(l1: SigmaLts, l2: SigmaLts, ctx: T.Context) -> bool:
    """Partition refinement by transition signatures; sound for systems
    without silent steps, where branching and strong equivalence coincide."""
    _check_domains(l1, l2)
    if not (l1.is_tau_free() and l2.is_tau_free()):
        raise ShapeError("signature refinement requires silent-step-free systems")
    # Canonical ids for action-equivalence classes across both systems.
    class_reps: list = []
    class_of: dict = {}
    act_cache: dict = {}

    def act_id(a):
        hit = class_of.get(a)
        if hit is not None:
            return hit
        for idx, rep in enumerate(class_reps):
            if actions_equivalent(a, rep, ctx, act_cache):
                class_of[a] = idx
                return idx
        class_reps.append(a)
        class_of[a] = len(class_reps) - 1
        return class_of[a]

    sides = (l1, l2)
    states = [(0, i) for i in range(len(l1.states))] + [
        (1, j) for j in range(len(l2.states))
    ]
    block = {
        s: frozenset(sig for sid, sig in sides[s[0]].terminating if sid == s[1])
        for s in states
    }
    while True:
        signature = {}
        for side, sid in states:
            lts = sides[side]
            sig = frozenset(
                (sigma, act_id(action), block[(side, tgt)])
                for sigma, action, tgt in lts.transitions[sid]
            )
            signature[(side, sid)] = (block[(side, sid)], sig)
        fresh = {}
        renumber = {}
        for s in states:
            key = signature[s]
            if key not in renumber:
                renumber[key] = len(renumber)
            fresh[s] = renumber[key]
        if fresh == block:
            break
        block = fresh
    return block[(0, l1.root)] == block[(1, l2.root)]


# --- the condition-labelled equivalence, decided per satisfying map ---------------

def rooted_ab_bisim(c1: CondLts, c2: CondLts, ctx: T.Context,
                    domain: Optional[tuple] = None) -> BisimResult:
    """Decide the condition-labelled equivalence by instantiating every
    transition at each satisfying map.

    Over a finite carrier each condition denotes a finite set of maps, so the
    finite covering sets in the transfer clauses can always be refined to
    per-map granularity; a silent path matches only if every state it passes
    through stays related to the observing state.
    """
    if domain is None:
        merged = list(c1.domain)
        for v in c2.domain:
            if v not in merged:
                merged.append(v)
        domain = tuple(v for v in ctx.decl if v in merged)
    l1 = expand_to_sigma(c1, ctx, domain)
    l2 = expand_to_sigma(c2, ctx, domain)
    ix1, ix2 = _Indexed(l1), _Indexed(l2)
    act_cache: dict = {}

    def acts_eq(a, b):
        return a == b or actions_equivalent(a, b, ctx, act_cache)

    relation = set(itertools.product(range(len(l1.states)), range(len(l2.states))))
    violations: dict = {}

    def match_from(side, i, j, sigma, action, target):
        """Silent path whose every intermediate state is related to the
        observing state, ending in a matching move or a silent stay."""
        if side == "left":
            ix, other, related = ix2, l2, (lambda u: (i, u) in relation)
            pair_t = lambda v: (target, v) in relation
            start = j
        else:
            ix, other, related = ix1, l1, (lambda u: (u, j) in relation)
            pair_t = lambda v: (v, target) in relation
            start = i
        seen = {start}
        frontier = [start]
        while frontier:
            u = frontier.pop()
            if isinstance(action, T.TauAction) and pair_t(u) and (u == start or related(u)):
                return True
            for a2, t2 in ix.moves(u, sigma):
                if acts_eq(action, a2) and pair_t(t2) and (u == start or related(u)):
                    return True
            for a2, t2 in ix.moves(u, sigma):
                if isinstance(a2, T.TauAction) and t2 not in seen and related(t2):
                    seen.add(t2)
                    frontier.append(t2)
        return False

    def termination_from(side, i, j, sigma):
        if side == "left":
            ix, other, related = ix2, l2, (lambda u: (i, u) in relation)
            start = j
        else:
            ix, other, related = ix1, l1, (lambda u: (u, j) in relation)
            start = i
        seen = {start}
        frontier = [start]
        while frontier:
            u = frontier.pop()
            if (u, sigma) in other.terminating and (u == start or related(u)):
                return True
            for a2, t2 in ix.moves(u, sigma):
                if isinstance(a2, T.TauAction) and t2 not in seen and related(t2):
                    seen.add(t2)
                    frontier.append(t2)
        return False

    def transfer_ok(i, j):
        for sigma, action, target in l1.transitions[i]:
            if not match_from("left", i, j, sigma, action, target):
                return _violation(l1, l2, (i, j), "left", "step", sigma, action,
                                  l1.states[target])
        for sigma, action, target in l2.transitions[j]:
            if not match_from("right", i, j, sigma, action, target):
                return _violation(l1, l2, (i, j), "right", "step", sigma, action,
                                  l2.states[target])
        for sid, sigma in l1.terminating:
            if sid == i and not termination_from("left", i, j, sigma):
                return _violation(l1, l2, (i, j), "left", "termination", sigma)
        for sid, sigma in l2.terminating:
            if sid == j and not termination_from("right", i, j, sigma):
                return _violation(l1, l2, (i, j), "right", "termination", sigma)
        return None

    changed = True
    while changed:
        changed = False
        for pair in sorted(relation):
            bad = transfer_ok(*pair)
            if bad is not None:
                relation.discard(pair)
                violations[pair] = bad
                changed = True

    root_pair = (l1.root, l2.root)
    if root_pair not in relation:
        return BisimResult(False, counterexample=violations.get(root_pair),
                           relation=frozenset(relation))
    for sigma, action, target in l1.transitions[l1.root]:
        if not any(acts_eq(action, a2) and (target, t2) in relation
                   for a2, t2 in ix2.moves(l2.root, sigma)):
            return BisimResult(False, counterexample=_violation(
                l1, l2, root_pair, "left", "root-step", sigma, action,
                l1.states[target]), relation=frozenset(relation))
    for sigma, action, target in l2.transitions[l2.root]:
        if not any(acts_eq(action, a1) and (t1, target) in relation
                   for a1, t1 in ix1.moves(l1.root, sigma)):
            return BisimResult(False, counterexample=_violation(
                l1, l2, root_pair, "right", "root-step", sigma, action,
                l2.states[target]), relation=frozenset(relation))
    for sigma in l1.maps:
        if ((l1.root, sigma) in l1.terminating) != ((l2.root, sigma) in l2.terminating):
            return BisimResult(False, counterexample=_violation(
                l1, l2, root_pair, "left", "root-termination", sigma),
                relation=frozenset(relation))
    return BisimResult(True, witness=tuple(sorted(relation)),
                       relation=frozenset(relation))


# --- convenience entry points ------------------------------------------------------

def shared_domain(t1: T.ProcTerm, t2: T.ProcTerm, ctx: T.Context) -> tuple:
    occ = T.occurring_flex_vars(t1) | T.occurring_flex_vars(t2)
    return tuple(v for v in ctx.decl if v in occ)


def decide_rb(t1: T.ProcTerm, t2: T.ProcTerm, ctx: T.Context) -> BisimResult:
    """Rooted branching bisimilarity of two closed terms."""
    domain = shared_domain(t1, t2, ctx)
    l1 = build_lts(t1, ctx, domain=domain)
    l2 = build_lts(t2, ctx, domain=domain)
    return rooted_branching_bisim(l1, l2, ctx)


def decide_rab(t1: T.ProcTerm, t2: T.ProcTerm, ctx: T.Context) -> BisimResult:
    """The condition-labelled equivalence of two closed terms."""
    domain = shared_domain(t1, t2, ctx)
    c1 = build_cond_lts(t1, ctx, domain=domain)
    c2 = build_cond_lts(t2, ctx, domain=domain)
    return rooted_ab_bisim(c1, c2, ctx, domain)


# --- agreement experiment ----------------------------------------------------------

@dataclass
class ConjectureReport:
    total: int = 0
    both_equivalent: int = 0
    both_inequivalent: int = 0
    rb_only: int = 0
    rab_only: int = 0
    divergent: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    @property
    def agreements(self) -> int:
        return self.both_equivalent + self.both_inequivalent

    def to_json_dict(self) -> dict:
        return {
            "total": self.total,
            "both_equivalent": self.both_equivalent,
            "both_inequivalent": self.both_inequivalent,
            "rb_only": self.rb_only,
            "rab_only": self.rab_only,
            "divergent": self.divergent,
            "skipped": self.skipped,
        }

    def summary(self) -> str:
        lines = [
            f"pairs checked: {self.total}",
            f"agree (both equivalent): {self.both_equivalent}",
            f"agree (both inequivalent): {self.both_inequivalent}",
            f"divergent (branching only): {self.rb_only}",
            f"divergent (condition-labelled only): {self.rab_only}",
            f"skipped: {len(self.skipped)}",
        ]
        for d in self.divergent:
            lines.append(f"  divergence: {d['left']}  vs  {d['right']}"
                         f"  rb={d['rb']} rab={d['rab']}")
        return "\n".join(lines)


def conjecture_experiment(ctx: T.Context, size: int = 0, seed: int = 0,
                          config=None, pairs=None) -> ConjectureReport:
    """Compare the two equivalences on a corpus of term pairs — randomly
    generated from the configuration, or supplied explicitly.

    A divergence is reported as a finding, never raised as a failure.
    """
    if pairs is None:
        from . import gen

        pairs = gen.pair_corpus(ctx, size, seed=seed, config=config)
    report = ConjectureReport()
    for t1, t2 in pairs:
        report.total += 1
        try:
            rb = decide_rb(t1, t2, ctx).equivalent
            rab = decide_rab(t1, t2, ctx).equivalent
        except DeacpError as exc:
            report.skipped.append({
                "left": render_term(t1), "right": render_term(t2),
                "reason": str(exc),
            })
            report.total -= 1
            continue
        if rb and rab:
            report.both_equivalent += 1
        elif not rb and not rab:
            report.both_inequivalent += 1
        else:
            if rb:
                report.rb_only += 1
            else:
                report.rab_only += 1
            report.divergent.append({
                "left": render_term(t1), "right": render_term(t2),
                "rb": rb, "rab": rab,
            })
    return report
