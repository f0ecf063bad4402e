"""Process terms: actions, operators, recursive specifications, predicates."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

from .conditions import (
    CFalse,
    CTrue,
    Condition,
    TRUE,
    cond_flex_vars,
    eval_cond,
    valid_iff,
)
from .data_algebra import (
    DEFAULT_ENUM_BOUND,
    Carrier,
    DataTerm,
    EvalMap,
    FlexVarDecl,
    App,
    Lit,
    data_flex_vars,
    eval_data,
)
from .errors import ArityError, DeclarationError, GuardednessError, ShapeError

DEFAULT_STATE_BOUND = 100_000
DEFAULT_COMM_BOUND = 64


# --- actions ----------------------------------------------------------------

@dataclass(frozen=True)
class BasicAction:
    name: str

    def __post_init__(self):
        if self.name in RESERVED_NAMES:
            raise DeclarationError(f"{self.name!r} is reserved and not an action name")


@dataclass(frozen=True)
class TauAction:
    pass


@dataclass(frozen=True)
class ParamAction:
    name: str
    args: tuple  # nonempty tuple of DataTerm

    def __post_init__(self):
        if self.name in RESERVED_NAMES:
            raise DeclarationError(f"{self.name!r} is reserved and not an action name")
        if not self.args:
            raise ArityError("data-parameterized action needs at least one argument")


@dataclass(frozen=True)
class AssignAction:
    var: str
    expr: DataTerm


Action = BasicAction | TauAction | ParamAction | AssignAction

TAU = TauAction()

RESERVED_NAMES = frozenset({"tau", "delta", "epsilon"})


def action_flex_vars(alpha: Action) -> frozenset:
    if isinstance(alpha, ParamAction):
        out = frozenset()
        for e in alpha.args:
            out |= data_flex_vars(e)
        return out
    if isinstance(alpha, AssignAction):
        return data_flex_vars(alpha.expr) | frozenset((alpha.var,))
    return frozenset()


# --- action patterns (finite descriptions of subsets of the atomic actions) --

@dataclass(frozen=True)
class ActionPattern:
    """Selects atomic actions; tau is never selected.

    kind 'name'   — basic action `name` plus every parameterized form of it
    kind 'arity'  — `name/n`: arity-n parameterized form (n = 0: basic only)
    kind 'assign' — every assignment to the given flexible variable
    kind 'all'    — every atomic action
    """

    kind: str
    name: Optional[str] = None
    arity: Optional[int] = None

    def matches(self, alpha: Action) -> bool:
        if isinstance(alpha, TauAction):
            return False
        if self.kind == "all":
            return True
        if self.kind == "name":
            return isinstance(alpha, (BasicAction, ParamAction)) and alpha.name == self.name
        if self.kind == "arity":
            if self.arity == 0:
                return isinstance(alpha, BasicAction) and alpha.name == self.name
            return (
                isinstance(alpha, ParamAction)
                and alpha.name == self.name
                and len(alpha.args) == self.arity
            )
        if self.kind == "assign":
            return isinstance(alpha, AssignAction) and alpha.var == self.name
        raise DeclarationError(f"unknown pattern kind {self.kind!r}")

    def render(self) -> str:
        if self.kind == "all":
            return "*"
        if self.kind == "name":
            return self.name
        if self.kind == "arity":
            return f"{self.name}/{self.arity}"
        return f"{self.name}:="


def pattern_set(patterns: Iterable[ActionPattern]) -> tuple:
    """Canonical deduplicated tuple, ordered by rendered form."""
    return tuple(sorted(set(patterns), key=lambda p: p.render()))


def matches_any(alpha: Action, patterns: tuple) -> bool:
    return any(p.matches(alpha) for p in patterns)


# --- process terms ----------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    action: Action


@dataclass(frozen=True)
class Inaction:
    pass


@dataclass(frozen=True)
class Empty:
    pass


@dataclass(frozen=True)
class Alt:
    left: "ProcTerm"
    right: "ProcTerm"


@dataclass(frozen=True)
class Seq:
    left: "ProcTerm"
    right: "ProcTerm"


@dataclass(frozen=True)
class Par:
    left: "ProcTerm"
    right: "ProcTerm"


@dataclass(frozen=True)
class LeftMerge:
    left: "ProcTerm"
    right: "ProcTerm"


@dataclass(frozen=True)
class CommMerge:
    left: "ProcTerm"
    right: "ProcTerm"


@dataclass(frozen=True)
class Encap:
    patterns: tuple  # canonical tuple of ActionPattern
    body: "ProcTerm"


@dataclass(frozen=True)
class Abstr:
    patterns: tuple
    body: "ProcTerm"


@dataclass(frozen=True)
class Guard:
    cond: Condition
    body: "ProcTerm"


@dataclass(frozen=True)
class Eval:
    emap: EvalMap
    body: "ProcTerm"


@dataclass(frozen=True)
class RecVar:
    name: str


@dataclass(frozen=True)
class RecSpec:
    """Finite recursive specification; equation order is significant for output."""

    equations: tuple  # tuple of (variable name, ProcTerm)

    def __post_init__(self):
        names = [n for n, _ in self.equations]
        if len(set(names)) != len(names):
            raise DeclarationError("duplicate recursion variable in specification")

    @property
    def variables(self) -> tuple:
        return tuple(n for n, _ in self.equations)

    def rhs(self, name: str) -> "ProcTerm":
        for n, t in self.equations:
            if n == name:
                return t
        raise DeclarationError(f"no equation for recursion variable {name!r}")

    def __contains__(self, name: str) -> bool:
        return any(n == name for n, _ in self.equations)


@dataclass(frozen=True)
class RecConst:
    """The designated-variable solution constant of a recursive specification."""

    var: str
    spec: RecSpec

    def __post_init__(self):
        if self.var not in self.spec:
            raise DeclarationError(f"recursion variable {self.var!r} not bound by its specification")


ProcTerm = (
    Atom
    | Inaction
    | Empty
    | Alt
    | Seq
    | Par
    | LeftMerge
    | CommMerge
    | Encap
    | Abstr
    | Guard
    | Eval
    | RecVar
    | RecConst
)

DELTA = Inaction()
EPSILON = Empty()

BINARY = (Alt, Seq, Par, LeftMerge, CommMerge)


def alt_fold(parts: list) -> ProcTerm:
    """Right-nested alternative composition; the empty sum is inaction."""
    if not parts:
        return DELTA
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Alt(p, out)
    return out


# --- communication function -------------------------------------------------

@dataclass(frozen=True)
class CommFunction:
    """Commutative partial merge of basic-action names; delta where undefined."""

    table: tuple = ()  # tuple of ((a, b), c) with a <= b

    @staticmethod
    def of(entries) -> "CommFunction":
        norm = {}
        for (a, b), c in dict(entries).items():
            key = (a, b) if a <= b else (b, a)
            if key in norm and norm[key] != c:
                raise DeclarationError(f"conflicting communication results for {a}|{b}")
            norm[key] = c
        return CommFunction(tuple(sorted(norm.items())))

    def result(self, a: str, b: str) -> Optional[str]:
        key = (a, b) if a <= b else (b, a)
        for pair, c in self.table:
            if pair == key:
                return c
        return None

    def validate(self, actions: Iterable[str], bound: int = DEFAULT_COMM_BOUND):
        """Reject non-commutative tables (impossible by construction) and
        tables whose delta-extension is not associative on the declared actions."""
        names = sorted(set(actions))
        if len(names) > bound:
            raise DeclarationError(
                f"{len(names)} actions exceed the communication-check bound of {bound}"
            )
        for (a, b), c in self.table:
            if a not in names or b not in names or c not in names:
                raise DeclarationError(f"communication {a}|{b}={c} uses an undeclared action")
        def ext(x, y):
            if x is None or y is None:
                return None
            return self.result(x, y)
        for a, b, c in itertools.product(names, repeat=3):
            if ext(ext(a, b), c) != ext(a, ext(b, c)):
                raise DeclarationError(
                    f"communication table is not associative on ({a}, {b}, {c})"
                )


# --- analysis context ---------------------------------------------------------

@dataclass(frozen=True)
class Context:
    """Everything the semantics needs besides the term itself."""

    carrier: Carrier = Carrier()
    decl: FlexVarDecl = FlexVarDecl(())
    gamma: CommFunction = CommFunction()
    enum_bound: int = DEFAULT_ENUM_BOUND
    state_bound: int = DEFAULT_STATE_BOUND


# --- structural predicates ----------------------------------------------------

def children(t: ProcTerm) -> tuple:
    if isinstance(t, BINARY):
        return (t.left, t.right)
    if isinstance(t, (Encap, Abstr, Guard, Eval)):
        return (t.body,)
    return ()


def free_rec_vars(t: ProcTerm) -> frozenset:
    if isinstance(t, RecVar):
        return frozenset((t.name,))
    if isinstance(t, RecConst):
        return frozenset()  # its specification binds every variable it uses
    out = frozenset()
    for c in children(t):
        out |= free_rec_vars(c)
    return out


def is_closed(t: ProcTerm) -> bool:
    return not free_rec_vars(t)


def contains_abstraction(t: ProcTerm) -> bool:
    if isinstance(t, Abstr):
        return True
    if isinstance(t, RecConst):
        return any(contains_abstraction(rhs) for _, rhs in t.spec.equations)
    return any(contains_abstraction(c) for c in children(t))


def contains_tau(t: ProcTerm) -> bool:
    """Whether t can contain a silent step anywhere, conservatively.

    Abstraction nodes count: they may rename actions to the silent step.
    """
    if isinstance(t, Atom):
        return isinstance(t.action, TauAction)
    if isinstance(t, Abstr):
        return True
    if isinstance(t, RecConst):
        return any(contains_tau(rhs) for _, rhs in t.spec.equations)
    return any(contains_tau(c) for c in children(t))


def term_conditions(t: ProcTerm) -> list:
    """Every condition occurring in t, including inside carried specifications."""
    out = []
    if isinstance(t, Guard):
        out.append(t.cond)
    if isinstance(t, RecConst):
        for _, rhs in t.spec.equations:
            out.extend(term_conditions(rhs))
    for c in children(t):
        out.extend(term_conditions(c))
    return out


def occurring_actions(t: ProcTerm) -> list:
    """Syntactic atomic-action occurrences, in traversal order, deduplicated."""
    seen = []
    def walk(u):
        if isinstance(u, Atom) and not isinstance(u.action, TauAction):
            if u.action not in seen:
                seen.append(u.action)
        if isinstance(u, RecConst):
            for _, rhs in u.spec.equations:
                walk(rhs)
        for c in children(u):
            walk(c)
    walk(t)
    return seen


def occurring_flex_vars(t: ProcTerm) -> frozenset:
    """Flexible variables whose ambient value can influence t's behaviour.

    Under an evaluation operator the carried map supplies every value, so
    nothing below one counts. The ambient map only ever evaluates guard
    conditions and the data arguments of synchronization candidates;
    assignment actions are labels, never evaluated by the ambient map.
    """
    if isinstance(t, Eval):
        return frozenset()
    if isinstance(t, Atom):
        if isinstance(t.action, ParamAction):
            out = frozenset()
            for e in t.action.args:
                out |= data_flex_vars(e)
            return out
        return frozenset()
    if isinstance(t, Guard):
        return cond_flex_vars(t.cond) | occurring_flex_vars(t.body)
    if isinstance(t, RecConst):
        out = frozenset()
        for _, rhs in t.spec.equations:
            out |= occurring_flex_vars(rhs)
        return out
    out = frozenset()
    for c in children(t):
        out |= occurring_flex_vars(c)
    return out


def all_flex_vars(t: ProcTerm) -> frozenset:
    """Flexible variables occurring anywhere in t, evaluation operators included."""
    if isinstance(t, Eval):
        return all_flex_vars(t.body)
    if isinstance(t, Atom):
        return action_flex_vars(t.action)
    if isinstance(t, Guard):
        return cond_flex_vars(t.cond) | all_flex_vars(t.body)
    if isinstance(t, RecConst):
        out = frozenset()
        for _, rhs in t.spec.equations:
            out |= all_flex_vars(rhs)
        return out
    out = frozenset()
    for c in children(t):
        out |= all_flex_vars(c)
    return out


# --- linear terms and guarded linear recursive specifications -----------------

def is_linear(t: ProcTerm) -> bool:
    """Membership in the inductively defined set of linear terms."""
    if isinstance(t, Inaction):
        return True
    if isinstance(t, Guard):
        if isinstance(t.body, Empty):
            return True
        return (
            isinstance(t.body, Seq)
            and isinstance(t.body.left, Atom)
            and isinstance(t.body.right, RecVar)
        )
    if isinstance(t, Alt):
        return is_linear(t.left) and is_linear(t.right)
    return False


def summands(t: ProcTerm) -> list:
    """Flatten a linear term into its guarded summands, left to right."""
    if not is_linear(t):
        raise ShapeError("summands of a non-linear term requested")
    out = []
    def walk(u):
        if isinstance(u, Alt):
            walk(u.left)
            walk(u.right)
        elif isinstance(u, Guard):
            out.append(u)
    walk(t)
    return out


def summand_parts(s: Guard) -> tuple:
    """(condition, action-or-None, target-or-None) of one linear summand."""
    if isinstance(s.body, Empty):
        return (s.cond, None, None)
    return (s.cond, s.body.left.action, s.body.right.name)


def _unguarded_edges(spec: RecSpec) -> dict:
    """X -> Y when Y occurs tau-prefixed (hence unguarded) in the equation for X."""
    edges = {name: set() for name, _ in spec.equations}
    for name, rhs in spec.equations:
        for s in summands(rhs):
            _, alpha, target = summand_parts(s)
            if alpha is not None and isinstance(alpha, TauAction):
                edges[name].add(target)
    return edges


def _has_cycle(edges: dict) -> bool:
    color = {n: 0 for n in edges}
    def visit(n):
        color[n] = 1
        for m in edges.get(n, ()):  # edges may point at variables of other specs
            if m not in color:
                continue
            if color[m] == 1:
                return True
            if color[m] == 0 and visit(m):
                return True
        color[n] = 2
        return False
    return any(color[n] == 0 and visit(n) for n in edges)


def is_linear_spec(spec: RecSpec) -> bool:
    return all(is_linear(rhs) for _, rhs in spec.equations)


@lru_cache(maxsize=4096)
def is_guarded_linear_spec(spec: RecSpec) -> bool:
    """Linear right-hand sides and no cycle of unguarded (tau-prefixed) occurrences."""
    if not is_linear_spec(spec):
        return False
    for name, rhs in spec.equations:
        for s in summands(rhs):
            _, _, target = summand_parts(s)
            if target is not None and target not in spec:
                return False
    return not _has_cycle(_unguarded_edges(spec))


def require_glrs(spec: RecSpec):
    if not is_guarded_linear_spec(spec):
        raise GuardednessError("recursive specification is not guarded linear")


def reachable(spec: RecSpec, start: str) -> frozenset:
    """Reflexive-transitive closure of occurs-in-right-hand-side from start."""
    if start not in spec:
        raise DeclarationError(f"unknown recursion variable {start!r}")
    seen = {start}
    frontier = [start]
    while frontier:
        name = frontier.pop()
        for target in sorted(free_rec_vars(spec.rhs(name))):
            if target in spec and target not in seen:
                seen.add(target)
                frontier.append(target)
    return frozenset(seen)


@dataclass(frozen=True)
class Classification:
    abstraction_free: bool
    bool_conditional: bool
    closed: bool


def classify(t: ProcTerm, ctx: Context) -> Classification:
    bool_cond = True
    for phi in term_conditions(t):
        if not (
            valid_iff(phi, TRUE, ctx.decl, ctx.carrier, ctx.enum_bound)
            or valid_iff(phi, CFalse(), ctx.decl, ctx.carrier, ctx.enum_bound)
        ):
            bool_cond = False
            break
    return Classification(
        abstraction_free=not contains_abstraction(t),
        bool_conditional=bool_cond,
        closed=is_closed(t),
    )


# --- substitution and canonical form ------------------------------------------

def subst_rec_vars(t: ProcTerm, mapping: dict) -> ProcTerm:
    """Replace free recursion variables; carried specifications bind their own."""
    if isinstance(t, RecVar):
        return mapping.get(t.name, t)
    if isinstance(t, RecConst):
        return t
    if isinstance(t, BINARY):
        return type(t)(subst_rec_vars(t.left, mapping), subst_rec_vars(t.right, mapping))
    if isinstance(t, (Encap, Abstr)):
        return type(t)(t.patterns, subst_rec_vars(t.body, mapping))
    if isinstance(t, Guard):
        return Guard(t.cond, subst_rec_vars(t.body, mapping))
    if isinstance(t, Eval):
        return Eval(t.emap, subst_rec_vars(t.body, mapping))
    return t


def unfold(const: RecConst) -> ProcTerm:
    """Body of the designated equation with variables closed off as constants."""
    rhs = const.spec.rhs(const.var)
    mapping = {name: RecConst(name, const.spec) for name in const.spec.variables}
    return subst_rec_vars(rhs, mapping)


def _canon_data(e: DataTerm, carrier: Carrier) -> DataTerm:
    if isinstance(e, App):
        args = tuple(_canon_data(a, carrier) for a in e.args)
        if all(isinstance(a, Lit) for a in args):
            sigma = EvalMap(())
            return Lit(eval_data(App(e.op, args), sigma, carrier))
        return App(e.op, args)
    if isinstance(e, Lit):
        return Lit(carrier.clamp(e.value))
    return e


def _canon_cond(phi: Condition, carrier: Carrier):
    from .conditions import And, Or, Implies, Not, Forall, Exists, Cmp
    if isinstance(phi, Cmp):
        phi = Cmp(phi.op, _canon_data(phi.left, carrier), _canon_data(phi.right, carrier))
    elif isinstance(phi, Not):
        phi = Not(_canon_cond(phi.body, carrier))
    elif isinstance(phi, (And, Or, Implies)):
        phi = type(phi)(_canon_cond(phi.left, carrier), _canon_cond(phi.right, carrier))
    elif isinstance(phi, (Forall, Exists)):
        phi = type(phi)(phi.var, _canon_cond(phi.body, carrier))
    from .conditions import cond_free_dvars
    if (
        not cond_flex_vars(phi)
        and not cond_free_dvars(phi)
        and not isinstance(phi, (CTrue, CFalse))
    ):
        return TRUE if eval_cond(phi, EvalMap(()), carrier) else CFalse()
    return phi


def _canon_action(alpha: Action, carrier: Carrier) -> Action:
    if isinstance(alpha, ParamAction):
        return ParamAction(alpha.name, tuple(_canon_data(e, carrier) for e in alpha.args))
    if isinstance(alpha, AssignAction):
        return AssignAction(alpha.var, _canon_data(alpha.expr, carrier))
    return alpha


_CANON_CACHE: dict = {}


def canonical(t: ProcTerm, carrier: Carrier) -> ProcTerm:
    """Canonical state form: closed data reduced to literals, neutral units removed.

    Every rewrite preserves the derivable transitions and termination exactly,
    so exploration over canonical forms yields the same transition system with
    finitely many states for guarded linear recursion. Carried specifications
    are left untouched; they are only unfolded on demand.
    """
    key = (t, carrier)
    hit = _CANON_CACHE.get(key)
    if hit is not None:
        return hit
    out = _canonical(t, carrier)
    _CANON_CACHE[key] = out
    return out


def _canonical(t: ProcTerm, carrier: Carrier) -> ProcTerm:
    if isinstance(t, Atom):
        return Atom(_canon_action(t.action, carrier))
    if isinstance(t, (Inaction, Empty, RecVar, RecConst)):
        return t
    if isinstance(t, Alt):
        left = canonical(t.left, carrier)
        right = canonical(t.right, carrier)
        if isinstance(left, Inaction):
            return right
        if isinstance(right, Inaction):
            return left
        return Alt(left, right)
    if isinstance(t, Seq):
        left = canonical(t.left, carrier)
        right = canonical(t.right, carrier)
        if isinstance(left, Inaction):
            return DELTA
        if isinstance(left, Empty):
            return right
        if isinstance(right, Empty):
            return left
        return Seq(left, right)
    if isinstance(t, Par):
        left = canonical(t.left, carrier)
        right = canonical(t.right, carrier)
        if isinstance(left, Empty):
            return right
        if isinstance(right, Empty):
            return left
        return Par(left, right)
    if isinstance(t, LeftMerge):
        left = canonical(t.left, carrier)
        right = canonical(t.right, carrier)
        if isinstance(left, (Empty, Inaction)):
            return DELTA
        return LeftMerge(left, right)
    if isinstance(t, CommMerge):
        left = canonical(t.left, carrier)
        right = canonical(t.right, carrier)
        if isinstance(left, (Empty, Inaction)) or isinstance(right, (Empty, Inaction)):
            return DELTA
        return CommMerge(left, right)
    if isinstance(t, (Encap, Abstr)):
        body = canonical(t.body, carrier)
        if isinstance(body, (Empty, Inaction)):
            return body
        return type(t)(t.patterns, body)
    if isinstance(t, Guard):
        cond = _canon_cond(t.cond, carrier)
        body = canonical(t.body, carrier)
        if isinstance(cond, CTrue):
            return body
        if isinstance(cond, CFalse):
            return DELTA
        if isinstance(body, Inaction):
            return DELTA
        return Guard(cond, body)
    if isinstance(t, Eval):
        body = canonical(t.body, carrier)
        if isinstance(body, (Empty, Inaction)):
            return body
        return Eval(t.emap, body)
    raise TypeError(f"not a process term: {t!r}")
