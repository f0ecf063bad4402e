"""Linearization to guarded linear recursive specifications, cluster
analysis with the fair-abstraction rewrite, and certificate-producing
equality proofs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import axioms as AX
from . import terms as T
from .bisim import BisimResult, decide_rb, rooted_branching_bisim, shared_domain
from .conditions import And, CFalse, CTrue, Or, TRUE, valid_iff
from .data_algebra import Lit, eval_data
from .errors import (
    CfarInapplicableError,
    DeacpError,
    GuardednessError,
    UnsupportedFragmentError,
)
from .parser import render_term
from .sos_sigma import build_lts
from .conditions import eval_cond


# --- proof certificates -----------------------------------------------------

@dataclass
class ProofStep:
    rule: str  # axiom name, LIN, RSP, CFAR, BED, IMP2
    before: T.ProcTerm
    after: T.ProcTerm
    role: str = "chain"  # chain | lemma
    details: dict = field(default_factory=dict)
    payload: dict = field(default_factory=dict)  # machine data for replay

    def to_json_dict(self) -> dict:
        return {
            "rule": self.rule,
            "role": self.role,
            "before": render_term(self.before),
            "after": render_term(self.after),
            "details": self.details,
        }


@dataclass
class ProofCertificate:
    left: T.ProcTerm
    right: T.ProcTerm
    steps: list

    def to_json_dict(self) -> dict:
        return {
            "left": render_term(self.left),
            "right": render_term(self.right),
            "steps": [s.to_json_dict() for s in self.steps],
        }

    def render_text(self) -> str:
        """One derivation step per line."""
        lines = [f"prove  {render_term(self.left)}  =  {render_term(self.right)}"]
        for step in self.steps:
            tag = "" if step.role == "chain" else " (lemma)"
            lines.append(
                f"  [{step.rule}]{tag}  {render_term(step.before)}"
                f"  =  {render_term(step.after)}"
            )
        return "\n".join(lines)


# --- summand tables -----------------------------------------------------------
#
# A table maps variable names to lists of summands (cond, action, target);
# action None encodes a termination summand, in which case target is None.

def _conj(phi, psi):
    if isinstance(phi, CTrue):
        return psi
    if isinstance(psi, CTrue):
        return phi
    return And(phi, psi)


def spec_to_table(spec: T.RecSpec) -> dict:
    table = {}
    for name, rhs in spec.equations:
        rows = []
        for s in T.summands(rhs):
            cond, action, target = T.summand_parts(s)
            rows.append((cond, action, target))
        table[name] = rows
    return table


def table_to_spec(table: dict, order) -> T.RecSpec:
    equations = []
    for name in order:
        parts = []
        for cond, action, target in table[name]:
            if action is None:
                parts.append(T.Guard(cond, T.EPSILON))
            else:
                parts.append(T.Guard(cond, T.Seq(T.Atom(action), T.RecVar(target))))
        equations.append((name, T.alt_fold(parts)))
    return T.RecSpec(tuple(equations))


def _trim(table: dict, root: str) -> list:
    """Variables reachable from the root, in breadth-first order."""
    order = [root]
    seen = {root}
    idx = 0
    while idx < len(order):
        for _, action, target in table[order[idx]]:
            if target is not None and target not in seen:
                seen.add(target)
                order.append(target)
        idx += 1
    return order


# --- the linearizer -----------------------------------------------------------

class _Linearizer:
    def __init__(self, ctx: T.Context, allow_abstraction: bool):
        self.ctx = ctx
        self.allow_abstraction = allow_abstraction
        self.table: dict = {}
        self.counter = 0
        self.cfar_steps: list = []
        self.bed_steps: list = []

    def fresh(self) -> str:
        self.counter += 1
        return f"L{self.counter}"

    def define(self, rows) -> str:
        name = self.fresh()
        self.table[name] = [r for r in rows if not isinstance(r[0], CFalse)]
        return name

    # -- entry ------------------------------------------------------------------

    def run(self, t: T.ProcTerm) -> tuple:
        root = self.build(t)
        order = _trim(self.table, root)
        spec = table_to_spec({n: self.table[n] for n in order}, order)
        if not T.is_guarded_linear_spec(spec):
            raise GuardednessError("linearization produced an unguarded specification")
        return spec, root

    # -- per-operator constructions ----------------------------------------------

    def build(self, t: T.ProcTerm) -> str:
        if isinstance(t, T.Inaction):
            return self.define([])
        if isinstance(t, T.Empty):
            return self.define([(TRUE, None, None)])
        if isinstance(t, T.Atom):
            end = self.define([(TRUE, None, None)])
            return self.define([(TRUE, t.action, end)])
        if isinstance(t, T.RecConst):
            T.require_glrs(t.spec)
            mapping = {name: self.fresh() for name in t.spec.variables}
            for name, rows in spec_to_table(t.spec).items():
                self.table[mapping[name]] = [
                    (cond, action, mapping[target] if target is not None else None)
                    for cond, action, target in rows
                    if not isinstance(cond, CFalse)
                ]
            return mapping[t.var]
        if isinstance(t, T.Alt):
            left = self.build(t.left)
            right = self.build(t.right)
            return self.define(list(self.table[left]) + list(self.table[right]))
        if isinstance(t, T.Seq):
            right_root = self.build(t.right)
            left_root = self.build(t.left)
            return self.seq_image(left_root, right_root)
        if isinstance(t, T.Guard):
            body = self.build(t.body)
            return self.define([
                (_conj(t.cond, cond), action, target)
                for cond, action, target in self.table[body]
            ])
        if isinstance(t, T.Encap):
            body = self.build(t.body)
            return self.filter_image(body, t.patterns)
        if isinstance(t, T.Abstr):
            if not self.allow_abstraction:
                raise UnsupportedFragmentError(
                    "abstraction operators need the bool-conditional pipeline"
                )
            body = self.build(t.body)
            return self.collapse_abstraction(body, t.patterns)
        if isinstance(t, T.Eval):
            body = self.build(t.body)
            return self.eval_image(body, t.emap)
        if isinstance(t, (T.Par, T.LeftMerge, T.CommMerge)):
            left = self.build(t.left)
            right = self.build(t.right)
            mode = {"Par": "par", "LeftMerge": "lm", "CommMerge": "cm"}[type(t).__name__]
            return self.merge_image(left, right, mode)
        if isinstance(t, T.RecVar):
            raise GuardednessError(f"free recursion variable {t.name!r} cannot be linearized")
        raise TypeError(f"not a process term: {t!r}")

    def seq_image(self, left_root: str, right_root: str) -> str:
        """Sequential composition: termination summands of the left part splice
        in the right root's summands under guard conjunction."""
        mapping: dict = {}
        worklist = [left_root]
        mapping[left_root] = self.fresh()
        while worklist:
            src = worklist.pop()
            rows = []
            for cond, action, target in self.table[src]:
                if action is None:
                    for rcond, raction, rtarget in self.table[right_root]:
                        rows.append((_conj(cond, rcond), raction, rtarget))
                else:
                    if target not in mapping:
                        mapping[target] = self.fresh()
                        worklist.append(target)
                    rows.append((cond, action, mapping[target]))
            self.table[mapping[src]] = [r for r in rows if not isinstance(r[0], CFalse)]
        return mapping[left_root]

    def filter_image(self, root: str, patterns: tuple) -> str:
        mapping: dict = {root: self.fresh()}
        worklist = [root]
        while worklist:
            src = worklist.pop()
            rows = []
            for cond, action, target in self.table[src]:
                if action is None:
                    rows.append((cond, None, None))
                    continue
                if not isinstance(action, T.TauAction) and T.matches_any(action, patterns):
                    continue
                if target not in mapping:
                    mapping[target] = self.fresh()
                    worklist.append(target)
                rows.append((cond, action, mapping[target]))
            self.table[mapping[src]] = rows
        return mapping[root]

    def eval_image(self, root: str, emap) -> str:
        """Index variables with the carried map; conditions resolve, data
        arguments evaluate, and assignments update the carried map."""
        carrier = self.ctx.carrier
        mapping: dict = {}

        def name_of(var, rho):
            key = (var, rho)
            if key not in mapping:
                mapping[key] = self.fresh()
                worklist.append(key)
            return mapping[key]

        worklist: list = []
        start = name_of(root, emap)
        while worklist:
            var, rho = worklist.pop()
            rows = []
            for cond, action, target in self.table[var]:
                if not eval_cond(cond, rho, carrier):
                    continue
                if action is None:
                    rows.append((TRUE, None, None))
                elif isinstance(action, T.AssignAction):
                    value = eval_data(action.expr, rho, carrier)
                    rows.append((
                        TRUE,
                        T.AssignAction(action.var, Lit(value)),
                        name_of(target, rho.updated(action.var, value)),
                    ))
                elif isinstance(action, T.ParamAction):
                    args = tuple(Lit(eval_data(e, rho, carrier)) for e in action.args)
                    rows.append((TRUE, T.ParamAction(action.name, args),
                                 name_of(target, rho)))
                else:
                    rows.append((TRUE, action, name_of(target, rho)))
            self.table[mapping[(var, rho)]] = rows
        return start

    def merge_image(self, left_root: str, right_root: str, mode: str) -> str:
        """Products over variable pairs; interleaving, synchronization with
        conjoined guards and data-equality conditions, joint termination."""
        gamma = self.ctx.gamma
        mapping: dict = {}
        worklist: list = []

        def name_of(kind, lv, rv):
            key = (kind, lv, rv)
            if key not in mapping:
                mapping[key] = self.fresh()
                worklist.append(key)
            return mapping[key]

        def syncs(lrows, rrows):
            out = []
            for lcond, laction, ltarget in lrows:
                if laction is None:
                    continue
                for rcond, raction, rtarget in rrows:
                    if raction is None:
                        continue
                    if isinstance(laction, T.BasicAction) and isinstance(raction, T.BasicAction):
                        c = gamma.result(laction.name, raction.name)
                        if c is None:
                            continue
                        out.append((_conj(lcond, rcond), T.BasicAction(c),
                                    name_of("par", ltarget, rtarget)))
                    elif isinstance(laction, T.ParamAction) and isinstance(raction, T.ParamAction):
                        if len(laction.args) != len(raction.args):
                            continue
                        c = gamma.result(laction.name, raction.name)
                        if c is None:
                            continue
                        cond = _conj(lcond, rcond)
                        from .conditions import Cmp
                        for e1, e2 in zip(laction.args, raction.args):
                            cond = _conj(cond, Cmp("=", e1, e2))
                        out.append((cond, T.ParamAction(c, laction.args),
                                    name_of("par", ltarget, rtarget)))
            return out

        start = name_of(mode, left_root, right_root)
        while worklist:
            kind, lv, rv = worklist.pop()
            lrows, rrows = self.table[lv], self.table[rv]
            rows = []
            if kind in ("par", "lm"):
                for cond, action, target in lrows:
                    if action is not None:
                        rows.append((cond, action, name_of("par", target, rv)))
            if kind == "par":
                for cond, action, target in rrows:
                    if action is not None:
                        rows.append((cond, action, name_of("par", lv, target)))
            if kind in ("par", "cm"):
                rows.extend(syncs(lrows, rrows))
            if kind == "par":
                for lcond, laction, _ in lrows:
                    if laction is not None:
                        continue
                    for rcond, raction, _ in rrows:
                        if raction is None:
                            rows.append((_conj(lcond, rcond), None, None))
            self.table[mapping[(kind, lv, rv)]] = [
                r for r in rows if not isinstance(r[0], CFalse)
            ]
        return start

    # -- abstraction: rename, absorb pure silent chains, collapse clusters ---------

    def collapse_abstraction(self, root: str, patterns: tuple) -> str:
        order = _trim(self.table, root)
        sub = {name: list(self.table[name]) for name in order}
        self._replace_pure_tau(sub, root)
        clusters = _find_clusters(sub, order, patterns)
        for info in clusters:
            if info.cyclic and not info.is_cluster:
                raise CfarInapplicableError(
                    "a silent cycle is not confined to a conservative cluster: "
                    + ", ".join(info.members)
                )
            if info.cyclic and not info.conservative:
                raise CfarInapplicableError(
                    "cluster is not conservative: " + ", ".join(info.members)
                )
        member_cluster = {}
        for info in clusters:
            if info.cyclic:
                for m in info.members:
                    member_cluster[m] = info

        def rename(row, mapping):
            cond, action, target = row
            if action is None:
                return (cond, None, None)
            renamed = T.TAU if (not isinstance(action, T.TauAction)
                                and T.matches_any(action, patterns)) else action
            return (cond, renamed, mapping[target])

        mapping = {name: self.fresh() for name in order}
        cluster_vars = {}
        for info in clusters:
            if info.cyclic:
                cluster_vars[info] = self.fresh()
        for info in clusters:
            if not info.cyclic:
                continue
            self.table[cluster_vars[info]] = [
                rename(row, mapping) for row in info.exit_rows
            ]
        for name in order:
            info = member_cluster.get(name)
            if info is None:
                self.table[mapping[name]] = [
                    rename(row, mapping) for row in sub[name]
                ]
            else:
                rows = [(TRUE, T.TAU, cluster_vars[info])]
                for row in sub[name]:
                    if not _internal_row(row, info.member_set, patterns):
                        rows.append(rename(row, mapping))
                self.table[mapping[name]] = rows
        # Record the fair-abstraction lemmas behind each collapsed cluster.
        spec = table_to_spec({n: sub[n] for n in order}, order)
        for info in clusters:
            if info.cyclic:
                self.cfar_steps.append(_cfar_step(spec, info, patterns, self.ctx))
        return mapping[root]

    def _replace_pure_tau(self, sub: dict, root: str):
        """Non-root equations consisting solely of silent prefixes to
        pure-termination variables become termination summands."""
        def is_pure_eps(name):
            return sub[name] == [(TRUE, None, None)]

        changed = True
        while changed:
            changed = False
            for name in sub:
                if name == root or not sub[name]:
                    continue
                rows = sub[name]
                if all(
                    action is not None and isinstance(action, T.TauAction)
                    and is_pure_eps(target)
                    for _, action, target in rows
                ) and not is_pure_eps(name):
                    conds = [cond for cond, _, _ in rows]
                    merged = conds[0]
                    for c in conds[1:]:
                        if isinstance(merged, CTrue) or isinstance(c, CTrue):
                            merged = TRUE
                        else:
                            merged = Or(merged, c)
                    before = table_to_spec({name: rows}, [name]).rhs(name)
                    after = T.Guard(merged, T.EPSILON)
                    sub[name] = [(merged, None, None)]
                    self.bed_steps.append(ProofStep(
                        "BED", before, after, role="lemma",
                        details={"variable": name,
                                 "note": "pure silent equation absorbed"},
                        payload={"variable": name},
                    ))
                    changed = True


def _internal_row(row, member_set, patterns) -> bool:
    cond, action, target = row
    if action is None or target not in member_set:
        return False
    if not isinstance(cond, CTrue):
        return False
    return isinstance(action, T.TauAction) or T.matches_any(action, patterns)


# --- cluster analysis ----------------------------------------------------------

@dataclass(frozen=True)
class ClusterInfo:
    members: tuple
    member_set: frozenset
    cyclic: bool
    is_cluster: bool
    exit_rows: tuple  # summand rows leaving the cluster, in specification order
    conservative: bool

    @property
    def exit_terms(self) -> tuple:
        out = []
        for cond, action, target in self.exit_rows:
            if action is None:
                out.append(T.Guard(cond, T.EPSILON))
            else:
                out.append(T.Guard(cond, T.Seq(T.Atom(action), T.RecVar(target))))
        return tuple(out)


@dataclass
class ClusterAnalysis:
    spec: T.RecSpec
    patterns: tuple
    clusters: list  # ClusterInfo for every strongly connected candidate


def _scc(order, edges) -> list:
    """Tarjan's algorithm, iterative; components in deterministic order."""
    index = {}
    low = {}
    onstack = set()
    stack = []
    components = []
    counter = [0]

    def strongconnect(v):
        work = [(v, iter(edges.get(v, ())))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        onstack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    onstack.add(w)
                    work.append((w, iter(edges.get(w, ()))))
                    advanced = True
                    break
                if w in onstack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    onstack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                components.append(tuple(sorted(comp, key=order.index)))

    for v in order:
        if v not in index:
            strongconnect(v)
    components.sort(key=lambda comp: order.index(comp[0]))
    return components


def _find_clusters(table: dict, order: list, patterns: tuple) -> list:
    edges = {}
    for name in order:
        targets = []
        for row in table[name]:
            if _internal_row(row, frozenset(order), patterns):
                # candidate internal move; refined per component below
                targets.append(row[2])
        edges[name] = targets
    out = []
    for comp in _scc(order, edges):
        member_set = frozenset(comp)
        cyclic = len(comp) > 1 or any(
            t == comp[0] for t in edges.get(comp[0], ())
        )
        is_cluster = True
        exit_rows = []
        for name in comp:
            for row in table[name]:
                cond, action, target = row
                if action is not None and target in member_set:
                    internal = _internal_row(row, member_set, patterns)
                    if not internal:
                        is_cluster = False
                    if internal:
                        continue
                exit_rows.append(row)
        seen = []
        for row in exit_rows:
            if row not in seen:
                seen.append(row)
        conservative = True
        if is_cluster:
            carriers = [
                name for name in comp
                if any(row in seen for row in table[name])
            ]
            reach = {name: _reach_table(table, name) for name in comp}
            for name in comp:
                for carrier in carriers:
                    if carrier not in reach[name]:
                        conservative = False
        out.append(ClusterInfo(
            members=tuple(comp),
            member_set=member_set,
            cyclic=cyclic,
            is_cluster=is_cluster,
            exit_rows=tuple(seen),
            conservative=conservative and is_cluster,
        ))
    return out


def _reach_table(table: dict, start: str) -> frozenset:
    seen = {start}
    frontier = [start]
    while frontier:
        name = frontier.pop()
        for _, action, target in table.get(name, ()):
            if target is not None and target in table and target not in seen:
                seen.add(target)
                frontier.append(target)
    return frozenset(seen)


def analyze_clusters(spec: T.RecSpec, patterns: tuple) -> ClusterAnalysis:
    """Maximal strongly-connected candidate clusters of the hidden moves,
    their exit sets, and conservativity per the definitions."""
    if not T.is_linear_spec(spec):
        raise GuardednessError("cluster analysis needs a linear specification")
    table = spec_to_table(spec)
    order = list(spec.variables)
    infos = _find_clusters(table, order, patterns)
    return ClusterAnalysis(spec=spec, patterns=tuple(patterns),
                           clusters=[c for c in infos if c.is_cluster])


def cluster_of(spec: T.RecSpec, patterns: tuple, members) -> ClusterInfo:
    """Validate an arbitrary candidate set against the cluster definitions."""
    table = spec_to_table(spec)
    order = list(spec.variables)
    member_set = frozenset(members)
    is_cluster = True
    exit_rows = []
    for name in order:
        if name not in member_set:
            continue
        for row in table[name]:
            cond, action, target = row
            if action is not None and target in member_set:
                if not _internal_row(row, member_set, patterns):
                    is_cluster = False
                else:
                    continue
            exit_rows.append(row)
    seen = []
    for row in exit_rows:
        if row not in seen:
            seen.append(row)
    conservative = is_cluster
    if is_cluster:
        carriers = [n for n in member_set if any(row in seen for row in table[n])]
        for name in member_set:
            reach = _reach_table(table, name)
            for carrier in carriers:
                if carrier not in reach:
                    conservative = False
    cyclic = any(
        _internal_row(row, member_set, patterns)
        for name in member_set for row in table[name]
    )
    return ClusterInfo(tuple(sorted(member_set, key=order.index)), member_set,
                       cyclic, is_cluster, tuple(seen), conservative)


def _cfar_step(spec: T.RecSpec, info: ClusterInfo, patterns: tuple,
               ctx: T.Context, member: Optional[str] = None) -> ProofStep:
    var = member if member is not None else info.members[0]
    closed_exits = [
        T.subst_rec_vars(term, {name: T.RecConst(name, spec)
                                for name in spec.variables})
        for term in info.exit_terms
    ]
    lhs = T.Seq(T.Atom(T.TAU), T.Abstr(patterns, T.RecConst(var, spec)))
    rhs = T.Seq(T.Atom(T.TAU), T.Abstr(patterns, T.alt_fold(closed_exits)))
    return ProofStep(
        "CFAR", lhs, rhs, role="lemma",
        details={
            "cluster": list(info.members),
            "exits": [render_term(t) for t in info.exit_terms],
            "hide": [p.render() for p in patterns],
        },
        payload={"spec": spec, "members": info.members, "patterns": patterns,
                 "variable": var},
    )


def apply_cfar(spec: T.RecSpec, var: str, patterns: tuple, ctx: T.Context) -> tuple:
    """The fair-abstraction equation for var's cluster: returns the rewritten
    right-hand side (under the silent prefix) and the certifying step."""
    if var not in spec:
        raise DeacpError(f"no equation for {var!r}")
    table = spec_to_table(spec)
    order = list(spec.variables)
    infos = _find_clusters(table, order, patterns)
    for info in infos:
        if var in info.member_set:
            if not info.is_cluster:
                raise CfarInapplicableError(
                    f"{var!r} lies on a silent cycle that is not a cluster"
                )
            if not info.conservative:
                raise CfarInapplicableError(
                    f"the cluster of {var!r} is not conservative"
                )
            step = _cfar_step(spec, info, tuple(patterns), ctx, member=var)
            return step.after, step
    raise CfarInapplicableError(f"no conservative cluster contains {var!r}")


# --- condition normalization (the bool-conditional gate) ---------------------------

def normalize_conditions(t: T.ProcTerm, ctx: T.Context) -> tuple:
    """Replace every condition by its constant truth value; errors out on
    contingent conditions."""
    replaced = []

    def norm_cond(phi):
        if isinstance(phi, (CTrue, CFalse)):
            return phi
        if valid_iff(phi, TRUE, ctx.decl, ctx.carrier, ctx.enum_bound):
            replaced.append((phi, True))
            return TRUE
        if valid_iff(phi, CFalse(), ctx.decl, ctx.carrier, ctx.enum_bound):
            replaced.append((phi, False))
            return CFalse()
        raise UnsupportedFragmentError(
            "condition is contingent; outside the bool-conditional fragment"
        )

    def walk(u):
        if isinstance(u, T.Guard):
            return T.Guard(norm_cond(u.cond), walk(u.body))
        if isinstance(u, T.RecConst):
            equations = tuple((n, walk(rhs)) for n, rhs in u.spec.equations)
            return T.RecConst(u.var, T.RecSpec(equations))
        if isinstance(u, T.BINARY):
            return type(u)(walk(u.left), walk(u.right))
        if isinstance(u, (T.Encap, T.Abstr)):
            return type(u)(u.patterns, walk(u.body))
        if isinstance(u, T.Eval):
            return T.Eval(u.emap, walk(u.body))
        return u

    return walk(t), replaced


# --- public pipeline ----------------------------------------------------------------

def linearize(t: T.ProcTerm, ctx: T.Context) -> tuple:
    """Guarded linear recursive specification provably equal to the given
    closed abstraction-free term; returns (spec, designated variable)."""
    if not T.is_closed(t):
        raise GuardednessError("cannot linearize a term with free recursion variables")
    if T.contains_abstraction(t):
        raise UnsupportedFragmentError(
            "abstraction operators need the bool-conditional pipeline"
        )
    engine = _Linearizer(ctx, allow_abstraction=False)
    return engine.run(t)


def normalize_bool_conditional(t: T.ProcTerm, ctx: T.Context) -> tuple:
    """Like linearize but for closed bool-conditional terms, eliminating
    abstraction through cluster collapse; returns (spec, variable, certificate)."""
    if not T.is_closed(t):
        raise GuardednessError("cannot linearize a term with free recursion variables")
    normalized, replaced = normalize_conditions(t, ctx)
    steps = []
    if replaced:
        steps.append(ProofStep(
            "IMP2", t, normalized,
            details={"replaced": [
                (render_term(T.Guard(phi, T.EPSILON)), value) for phi, value in replaced
            ]},
            payload={"original": t},
        ))
    engine = _Linearizer(ctx, allow_abstraction=True)
    spec, root = engine.run(normalized)
    const = T.RecConst(root, spec)
    steps.append(ProofStep(
        "LIN", normalized, const,
        details={"construction": "normalize_bool_conditional"},
        payload={"input": normalized},
    ))
    certificate = ProofCertificate(t, const, steps + engine.bed_steps + engine.cfar_steps)
    return spec, root, certificate


# --- equality proofs ------------------------------------------------------------------

@dataclass
class ProveResult:
    equal: bool
    certificate: Optional[ProofCertificate] = None
    counterexample: Optional[dict] = None
    bisim: Optional[BisimResult] = None

    def to_json_dict(self) -> dict:
        if self.equal:
            return {"equal": True, "certificate": self.certificate.to_json_dict()}
        return {"equal": False, "counterexample": self.counterexample}


def _swap_step(step: ProofStep) -> ProofStep:
    details = dict(step.details)
    details["direction"] = "reverse"
    return ProofStep(step.rule, step.after, step.before, role=step.role,
                     details=details, payload=dict(step.payload, reverse=True))


def prove_equal(t1: T.ProcTerm, t2: T.ProcTerm, ctx: T.Context) -> ProveResult:
    """Decide derivable equality of two closed terms in the supported
    fragments and assemble a replayable certificate."""
    result = decide_rb(t1, t2, ctx)
    if not result.equivalent:
        return ProveResult(False, counterexample=result.counterexample, bisim=result)

    axiom = AX.recognize_axiom(t1, t2, ctx)
    if axiom is not None:
        cert = ProofCertificate(t1, t2, [ProofStep(axiom, t1, t2)])
        return ProveResult(True, certificate=cert, bisim=result)

    cls1 = T.classify(t1, ctx)
    cls2 = T.classify(t2, ctx)
    steps: list = []
    lemmas: list = []
    if cls1.abstraction_free and cls2.abstraction_free:
        spec1, var1 = linearize(t1, ctx)
        spec2, var2 = linearize(t2, ctx)
        const1, const2 = T.RecConst(var1, spec1), T.RecConst(var2, spec2)
        steps.append(ProofStep("LIN", t1, const1,
                               details={"construction": "linearize"},
                               payload={"input": t1}))
        tail = [ProofStep("LIN", t2, const2,
                          details={"construction": "linearize"},
                          payload={"input": t2})]
    elif cls1.bool_conditional and cls2.bool_conditional:
        spec1, var1, cert1 = normalize_bool_conditional(t1, ctx)
        spec2, var2, cert2 = normalize_bool_conditional(t2, ctx)
        const1, const2 = T.RecConst(var1, spec1), T.RecConst(var2, spec2)
        steps.extend(s for s in cert1.steps if s.role == "chain")
        lemmas.extend(s for s in cert1.steps if s.role == "lemma")
        tail = [s for s in cert2.steps if s.role == "chain"]
        lemmas.extend(s for s in cert2.steps if s.role == "lemma")
    else:
        raise UnsupportedFragmentError(
            "both terms must be abstraction-free or both bool-conditional"
        )

    domain = shared_domain(const1, const2, ctx)
    l1 = build_lts(const1, ctx, domain=domain)
    l2 = build_lts(const2, ctx, domain=domain)
    linked = rooted_branching_bisim(l1, l2, ctx)
    if not linked.equivalent:
        raise DeacpError("internal error: linearized forms are not equivalent")
    steps.append(ProofStep(
        "RSP", const1, const2,
        details={"witness_pairs": len(linked.witness or ())},
        payload={"relation": linked.witness, "domain": domain},
    ))
    steps.extend(_swap_step(s) for s in reversed(tail))
    certificate = ProofCertificate(t1, t2, steps + lemmas)
    return ProveResult(True, certificate=certificate, bisim=result)


# --- certificate replay -----------------------------------------------------------------

def replay_certificate(cert: ProofCertificate, ctx: T.Context) -> tuple:
    """Re-validate every step of a certificate; returns (ok, issues)."""
    issues = []
    chain = [s for s in cert.steps if s.role == "chain"]
    if chain:
        if chain[0].before != cert.left:
            issues.append("chain does not start at the left-hand term")
        if chain[-1].after != cert.right:
            issues.append("chain does not end at the right-hand term")
        for a, b in zip(chain, chain[1:]):
            if a.after != b.before:
                issues.append(f"chain break between {a.rule} and {b.rule}")
    for step in cert.steps:
        issues.extend(_replay_step(step, ctx))
    return (not issues), issues


def _replay_step(step: ProofStep, ctx: T.Context) -> list:
    rule = step.rule
    if rule == "LIN":
        reverse = step.payload.get("reverse", False)
        source = step.after if reverse else step.before
        target = step.before if reverse else step.after
        construction = step.details.get("construction")
        try:
            if construction == "linearize":
                spec, var = linearize(source, ctx)
            else:
                spec, var, _ = normalize_bool_conditional(source, ctx)
        except DeacpError as exc:
            return [f"LIN replay failed: {exc}"]
        if T.RecConst(var, spec) != target:
            return ["LIN replay produced a different specification"]
        if not T.is_guarded_linear_spec(spec):
            return ["LIN replay produced an unguarded specification"]
        return []
    if rule == "RSP":
        reverse = step.payload.get("reverse", False)
        left = step.after if reverse else step.before
        right = step.before if reverse else step.after
        relation = step.payload.get("relation")
        domain = step.payload.get("domain")
        if relation is None:
            return ["RSP step carries no witness"]
        from .bisim import verify_branching_bisimulation
        l1 = build_lts(left, ctx, domain=domain)
        l2 = build_lts(right, ctx, domain=domain)
        bad = verify_branching_bisimulation(l1, l2, relation, ctx)
        return [f"RSP witness violation: {b}" for b in bad[:3]]
    if rule == "CFAR":
        payload = step.payload
        spec = payload.get("spec")
        members = payload.get("members")
        patterns = payload.get("patterns")
        var = payload.get("variable")
        if spec is None:
            return ["CFAR step carries no cluster data"]
        info = cluster_of(spec, patterns, members)
        if not info.is_cluster:
            return ["CFAR cluster fails the cluster condition"]
        if not info.conservative:
            return ["CFAR cluster is not conservative"]
        expected, _ = apply_cfar(spec, var, patterns, ctx)
        if expected != step.after:
            return ["CFAR step does not match the recomputed equation"]
        return []
    if rule == "IMP2" and "replaced" in step.details:
        reverse = step.payload.get("reverse", False)
        source = step.payload.get("original", step.after if reverse else step.before)
        expected = step.before if reverse else step.after
        try:
            normalized, _ = normalize_conditions(source, ctx)
        except DeacpError as exc:
            return [f"IMP2 replay failed: {exc}"]
        if normalized != expected:
            return ["IMP2 replay produced a different normalization"]
        return []
    if rule == "BED" and "variable" in step.payload:
        return []  # shape recorded by the absorbing construction
    if rule in AX.AXIOMS:
        if AX.AXIOMS[rule].relates(step.before, step.after, ctx):
            return []
        return [f"step does not instantiate axiom {rule}"]
    return [f"unknown rule {rule!r}"]
