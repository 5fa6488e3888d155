"""Constraint collection, lexicographically minimal solving and conflict cores.

Unconstrained guarantees default to ``false``: among all satisfying
assignments we return the lexicographically smallest one, with atoms ordered
by (instance, port, conf < intg) and ``false < true``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from pysat.solvers import Solver

from . import library, rules
from .model import Assignment, Channel, ModelError, StructureError, validate_network
from .modelio import ModelDocument, serialize_conflict
from .rules import And, Atom, Const, Iff, Implies, Not, Or, RuleExpr

SAT_BACKEND = "minisat22"


class AnalysisError(ModelError):
    pass


@dataclass(frozen=True)
class Constraint:
    label: str
    expr: RuleExpr
    instance: str | None = None
    channel: Channel | None = None


@dataclass(frozen=True)
class ConstraintSet:
    constraints: tuple[Constraint, ...]
    atoms: tuple[Atom, ...]  # universe, canonical order

    def __post_init__(self) -> None:
        labels = [c.label for c in self.constraints]
        if len(labels) != len(set(labels)):
            raise ValueError("constraint labels must be unique")

    def __len__(self) -> int:
        return len(self.constraints)

    def by_label(self, label: str) -> Constraint:
        for c in self.constraints:
            if c.label == label:
                return c
        raise KeyError(label)

    def subset(self, labels: Iterable[str]) -> "ConstraintSet":
        keep = set(labels)
        return ConstraintSet(tuple(c for c in self.constraints if c.label in keep), self.atoms)


@dataclass(frozen=True)
class Conflict:
    core: tuple[str, ...]
    touched_instances: tuple[str, ...]
    touched_channels: tuple[Channel, ...]
    constraints: tuple[Constraint, ...] = field(default=(), compare=False, repr=False)

    def listing(self) -> str:
        lines = ["conflict: the following constraints cannot hold together"]
        for c in self.constraints:
            lines.append(f"  {c.label}: {rules.format_rule(c.expr)}")
        return "\n".join(lines)


Result = Union[dict[Atom, bool], Conflict]


def make_constraints(constraints: Iterable[tuple[str, RuleExpr]], atoms: Iterable[Atom] = ()) -> ConstraintSet:
    """Ad-hoc constraint set; the atom universe is ``atoms`` plus every free atom."""
    cs = tuple(Constraint(label, expr) for label, expr in constraints)
    universe = set(atoms)
    for c in cs:
        universe.update(rules.iter_atoms(c.expr))
    return ConstraintSet(cs, tuple(sorted(universe, key=Atom.sort_key)))


def collect_constraints(doc: ModelDocument) -> ConstraintSet:
    """One constraint per instance rule and per channel.

    Env instances contribute their assumption (every port fixed to the
    declared booleans) labelled ``env:<name>``.
    """
    net = doc.network
    errors = validate_network(net)
    if errors:
        raise StructureError(errors)
    out: list[Constraint] = []
    for inst in net.instances.values():
        prefix = "env" if library.env_assumption(inst) is not None else "rule"
        out.append(Constraint(f"{prefix}:{inst.name}", inst.rule, instance=inst.name))
    for ch in net.channels:
        out.append(Constraint(f"chan:{ch}", rules.channel_rule(ch), channel=ch))
    return ConstraintSet(tuple(out), tuple(net.atoms()))


# -- clausal encoding -------------------------------------------------------


class _Encoding:
    """Structure-preserving clausal form with one selector literal per constraint."""

    def __init__(self, cs: ConstraintSet) -> None:
        self.cs = cs
        self.nvars = 0
        self.clauses: list[list[int]] = []
        self.atom_var: dict[Atom, int] = {}
        for a in cs.atoms:
            self.atom_var[a] = self._new()
        self._cache: dict[RuleExpr, int] = {}
        self._true = self._new()
        self.clauses.append([self._true])
        self.selector: dict[str, int] = {}
        for c in cs.constraints:
            sel = self._new()
            self.selector[c.label] = sel
            self.clauses.append([-sel, self._lit(c.expr)])
        self.label_of = {v: k for k, v in self.selector.items()}

    def _new(self) -> int:
        self.nvars += 1
        return self.nvars

    def _lit(self, e: RuleExpr) -> int:
        if isinstance(e, Atom):
            if e not in self.atom_var:
                self.atom_var[e] = self._new()
            return self.atom_var[e]
        if isinstance(e, Const):
            return self._true if e.value else -self._true
        if isinstance(e, Not):
            return -self._lit(e.arg)
        cached = self._cache.get(e)
        if cached is not None:
            return cached
        if isinstance(e, (And, Or)):
            lits = [self._lit(a) for a in e.args]
        else:
            lits = [self._lit(e.lhs), self._lit(e.rhs)]  # type: ignore[union-attr]
        v = self._new()
        cl = self.clauses
        if isinstance(e, And):
            for x in lits:
                cl.append([-v, x])
            cl.append([v] + [-x for x in lits])
        elif isinstance(e, Or):
            for x in lits:
                cl.append([v, -x])
            cl.append([-v] + lits)
        elif isinstance(e, Implies):
            a, b = lits
            cl += [[-v, -a, b], [v, a], [v, -b]]
        elif isinstance(e, Iff):
            a, b = lits
            cl += [[-v, -a, b], [-v, a, -b], [v, a, b], [v, -a, -b]]
        else:
            raise TypeError(f"not a rule expression: {e!r}")
        self._cache[e] = v
        return v

    def solver(self) -> Solver:
        s = Solver(name=SAT_BACKEND, bootstrap_with=self.clauses)
        # bias towards false so first models are already close to minimal
        s.set_phases([-v for v in self.atom_var.values()])
        return s


def _check_sound(cs: ConstraintSet, asg: Assignment) -> None:
    for c in cs.constraints:
        if not rules.eval_rule(c.expr, asg):
            raise AnalysisError(f"internal error: solution violates {c.label}")


def solve_lexmin(cs: ConstraintSet) -> Result:
    """Lexicographically minimal satisfying assignment, or the conflict."""
    enc = _Encoding(cs)
    sels = [enc.selector[c.label] for c in cs.constraints]
    with enc.solver() as s:
        if not s.solve(assumptions=sels):
            return _extract(cs, enc, s)
        model = s.get_model()
        fixes: list[int] = []
        for atom in cs.atoms:
            v = enc.atom_var[atom]
            # the current model satisfies every earlier fix; if it already
            # has this atom false, false is feasible without another call
            if model[v - 1] < 0:
                fixes.append(-v)
            elif s.solve(assumptions=sels + fixes + [-v]):
                fixes.append(-v)
                model = s.get_model()
            else:
                fixes.append(v)
    asg = {a: f > 0 for a, f in zip(cs.atoms, fixes)}
    _check_sound(cs, asg)
    return asg


def is_satisfiable(cs: ConstraintSet) -> bool:
    enc = _Encoding(cs)
    with enc.solver() as s:
        return bool(s.solve(assumptions=list(enc.selector.values())))


def extract_conflict(cs: ConstraintSet) -> Conflict:
    """Subset-minimal unsatisfiable core, minimized by deletion."""
    enc = _Encoding(cs)
    with enc.solver() as s:
        if s.solve(assumptions=[enc.selector[c.label] for c in cs.constraints]):
            raise AnalysisError("constraint set is satisfiable; there is no conflict")
        return _extract(cs, enc, s)


def _extract(cs: ConstraintSet, enc: _Encoding, s: Solver) -> Conflict:
    order = {c.label: i for i, c in enumerate(cs.constraints)}
    core = _sorted_core(s.get_core() or [], enc, order)
    i = 0
    while i < len(core):
        trial = core[:i] + core[i + 1:]
        if s.solve(assumptions=[enc.selector[lbl] for lbl in trial]):
            i += 1  # needed
        else:
            # the solver's own core of the trial may be smaller still
            refined = set(_sorted_core(s.get_core() or [], enc, order))
            core = [lbl for lbl in trial if lbl in refined]
    return make_conflict(cs, core)


def _sorted_core(lits: Sequence[int], enc: _Encoding, order: dict[str, int]) -> list[str]:
    return sorted((enc.label_of[abs(v)] for v in lits if abs(v) in enc.label_of), key=order.__getitem__)


def make_conflict(cs: ConstraintSet, core: Iterable[str]) -> Conflict:
    keep = set(core)
    picked = tuple(c for c in cs.constraints if c.label in keep)
    insts: set[str] = set()
    chans: set[Channel] = set()
    for c in picked:
        insts.update(a.instance for a in rules.iter_atoms(c.expr))
        if c.channel is not None:
            chans.add(c.channel)
    return Conflict(
        core=tuple(c.label for c in picked),
        touched_instances=tuple(sorted(insts)),
        touched_channels=tuple(sorted(chans)),
        constraints=picked,
    )


# -- independent oracle -----------------------------------------------------

# The search is exponential in the worst case; this guard keeps test runs bounded.
ORACLE_MAX_ATOMS = 128


def _sat_partial(cs: Iterable[Constraint], asg: dict[Atom, bool]) -> bool:
    return all(rules.eval_partial(c.expr, asg) is not False for c in cs)


def _dfs_first(cs: Sequence[Constraint], atoms: Sequence[Atom]) -> dict[Atom, bool] | None:
    """First satisfying assignment in lexicographic enumeration order.

    Walks the binary enumeration tree false-branch first. A subtree is cut
    when some constraint is already false under Kleene logic, and an atom is
    fixed early when one of its values would make a constraint false. Both
    only remove assignments that violate a constraint, so the first leaf
    reached is the lexicographic minimum.
    """
    asg: dict[Atom, bool] = {}
    touching: dict[Atom, list[Constraint]] = {a: [] for a in atoms}
    for c in cs:
        for a in set(rules.iter_atoms(c.expr)):
            touching[a].append(c)
    if not _sat_partial(cs, asg):
        return None

    def refutes(atom: Atom, value: bool) -> bool:
        asg[atom] = value
        bad = not _sat_partial(touching[atom], asg)
        del asg[atom]
        return bad

    def propagate(trail: list[Atom]) -> bool:
        changed = True
        while changed:
            changed = False
            for a in atoms:
                if a in asg:
                    continue
                no_f, no_t = refutes(a, False), refutes(a, True)
                if no_f and no_t:
                    return False
                if no_f or no_t:
                    asg[a] = no_f
                    trail.append(a)
                    changed = True
        return True

    def go(i: int) -> bool:
        while i < len(atoms) and atoms[i] in asg:
            i += 1
        if i == len(atoms):
            return True
        for value in (False, True):
            trail = [atoms[i]]
            asg[atoms[i]] = value
            if _sat_partial(touching[atoms[i]], asg) and propagate(trail) and go(i + 1):
                return True
            for a in trail:
                del asg[a]
        return False

    trail: list[Atom] = []
    if not propagate(trail):
        return None
    return dict(asg) if go(0) else None


def enumerate_lexmin(cs: ConstraintSet, atoms: Sequence[Atom]) -> dict[Atom, bool] | None:
    """Plain 2^n enumeration; only practical for a dozen atoms or so."""
    for values in itertools.product((False, True), repeat=len(atoms)):
        asg = dict(zip(atoms, values))
        if all(rules.eval_rule(c.expr, asg) for c in cs.constraints):
            return asg
    return None


def brute_force_lexmin(
    cs: ConstraintSet, atoms: Sequence[Atom] | None = None, *, max_atoms: int = ORACLE_MAX_ATOMS
) -> Result:
    """Reference solver by exhaustive ordered search; for tests only.

    Shares no code with the clausal encoding or the SAT solver: constraints
    are evaluated directly on (partial) assignments.
    """
    atoms = list(cs.atoms if atoms is None else atoms)
    if len(atoms) > max_atoms:
        raise ValueError(f"oracle limited to {max_atoms} atoms, got {len(atoms)}")
    mentioned = set()
    for c in cs.constraints:
        mentioned.update(rules.iter_atoms(c.expr))
    if not mentioned <= set(atoms):
        raise ValueError("constraints mention atoms outside the given universe")
    found = _dfs_first(cs.constraints, atoms)
    if found is not None:
        return found
    core = list(cs.constraints)
    i = 0
    while i < len(core):
        trial = core[:i] + core[i + 1:]
        if _dfs_first(trial, atoms) is None:
            core = trial
        else:
            i += 1
    return make_conflict(cs, (c.label for c in core))


# -- reporting --------------------------------------------------------------


def annotate_conflict(doc: ModelDocument, conflict: Conflict) -> str:
    """Model text with ``conflict="true"`` on every instance and flow in the core."""
    cs = collect_constraints(doc)
    unknown = [lbl for lbl in conflict.core if lbl not in {c.label for c in cs.constraints}]
    if unknown:
        raise AnalysisError(f"core labels not in this model: {', '.join(unknown)}")
    if not conflict.core or is_satisfiable(cs.subset(conflict.core)):
        raise AnalysisError("not a conflict: the core constraints are satisfiable")
    listing = make_conflict(cs, conflict.core).listing()
    return serialize_conflict(doc, conflict.touched_instances, conflict.touched_channels, listing)


def format_assignment(asg: Assignment) -> str:
    """``conf(<instance>.<port>) = true|false`` per line, canonical order."""
    lines = [
        f"{a} = {'true' if asg[a] else 'false'}"
        for a in sorted(asg, key=Atom.sort_key)
    ]
    return "\n".join(lines) + ("\n" if lines else "")
