"""Minimal unsatisfiable subset machinery.

Validity checks, deletion-based shrinking, criticality, a MARCO-style
online enumerator over a selector-variable map, and a brute-force oracle
for small instances. The oracle decides satisfiability by bit-parallel
truth tables and is fully independent of the CDCL engine.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .cnf import CnfFormula
from .sat import UNSAT, SatEngine, Solver

BRUTE_FORCE_CLAUSE_LIMIT = 20
TRUTH_TABLE_VAR_LIMIT = 24


@dataclass(frozen=True)
class MusRecord:
    """A clause-index set that is UNSAT and minimal under single deletion."""

    clause_indices: frozenset[int]

    @property
    def size(self) -> int:
        return len(self.clause_indices)

    def sorted_indices(self) -> list[int]:
        return sorted(self.clause_indices)


@dataclass
class EnumerationTrace:
    """Result of one enumeration run."""

    muses: list[MusRecord] = field(default_factory=list)
    timestamps: list[float] = field(default_factory=list)
    seeds_tested: int = 0
    exhausted: bool = False


class _SubsetSolver:
    """Incremental subset-satisfiability queries via one selector per clause.

    Clause j is guarded by selector variable num_vars+1+j; assuming the
    selector true activates the clause, leaving it free lets the solver
    disable it.
    """

    def __init__(self, formula: CnfFormula, engine: SatEngine | None = None):
        self.engine = engine if engine is not None else SatEngine()
        self.num_clauses = formula.num_clauses
        self._base = formula.num_vars
        self._session = self.engine.session(formula.num_vars + formula.num_clauses)
        for j, clause in enumerate(formula.clauses):
            self._session.add_clause(list(clause) + [-(self._base + 1 + j)])

    def selector(self, clause_index: int) -> int:
        return self._base + 1 + clause_index

    def is_subset_sat(self, subset) -> bool:
        assumptions = [self.selector(j) for j in sorted(subset)]
        return self._session.is_sat(assumptions)


def _check_indices(formula: CnfFormula, subset) -> frozenset[int]:
    subset = frozenset(int(i) for i in subset)
    for i in subset:
        if not 0 <= i < formula.num_clauses:
            raise IndexError(f"clause index {i} out of range")
    return subset


def is_mus(formula: CnfFormula, subset, engine: SatEngine | None = None) -> bool:
    """True iff the induced subset is UNSAT and every single-clause
    deletion is SAT (Minimal Unsatisfiable Subset)."""
    subset = _check_indices(formula, subset)
    solver = _SubsetSolver(formula, engine)
    if solver.is_subset_sat(subset):
        return False
    for c in sorted(subset):
        if not solver.is_subset_sat(subset - {c}):
            return False
    return True


def shrink(formula: CnfFormula, seed, engine: SatEngine | None = None) -> MusRecord:
    """Deletion-based shrink of an UNSAT seed down to a MUS.

    Clauses are tried in ascending index order; a removal is kept exactly
    when the remainder stays UNSAT. Raises ValueError if the seed is SAT.
    """
    seed = _check_indices(formula, seed)
    solver = _SubsetSolver(formula, engine)
    if solver.is_subset_sat(seed):
        raise ValueError("seed subset is satisfiable; nothing to shrink")
    current = set(seed)
    for c in sorted(seed):
        trial = current - {c}
        if not solver.is_subset_sat(trial):
            current = trial
    return MusRecord(frozenset(current))


def critical_clauses(formula: CnfFormula, subset,
                     engine: SatEngine | None = None) -> set[int]:
    """Clauses whose removal from an UNSAT subset makes it satisfiable."""
    subset = _check_indices(formula, subset)
    solver = _SubsetSolver(formula, engine)
    if solver.is_subset_sat(subset):
        raise ValueError("subset is satisfiable; criticality is undefined")
    return {c for c in sorted(subset) if solver.is_subset_sat(subset - {c})}


def _shrink_in(solver: _SubsetSolver, seed: set[int],
               deadline: float | None) -> set[int] | None:
    current = set(seed)
    for c in sorted(seed):
        if deadline is not None and time.perf_counter() >= deadline:
            return None
        trial = current - {c}
        if not solver.is_subset_sat(trial):
            current = trial
    return current


def _grow_in(solver: _SubsetSolver, seed: set[int],
             deadline: float | None) -> set[int] | None:
    current = set(seed)
    for c in range(solver.num_clauses):
        if c in current:
            continue
        if deadline is not None and time.perf_counter() >= deadline:
            return None
        if solver.is_subset_sat(current | {c}):
            current.add(c)
    return current


def enumerate_marco(formula: CnfFormula, budget: float,
                    sink=None, engine: SatEngine | None = None) -> EnumerationTrace:
    """MARCO-style online MUS enumeration under a wall-clock budget.

    Seeds come from a map solver over one selector per clause, solved with
    true-preferring polarity so seeds are maximal. UNSAT seeds shrink to a
    MUS (supersets then blocked); SAT seeds grow to a maximal satisfiable
    subset (subsets then blocked). Stops at budget exhaustion or when the
    map empties, whichever is first.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    start = time.perf_counter()
    deadline = start + budget
    m = formula.num_clauses
    solver = _SubsetSolver(formula, engine)
    if solver.is_subset_sat(range(m)):
        raise ValueError("formula is satisfiable; it has no MUS")
    map_solver = Solver(num_vars=m, default_phase=True)
    trace = EnumerationTrace()
    while time.perf_counter() < deadline:
        result = map_solver.solve()
        if result.status == UNSAT:
            trace.exhausted = True
            break
        seed = {j for j in range(m) if result.model[j + 1]}
        trace.seeds_tested += 1
        if solver.is_subset_sat(seed):
            mss = _grow_in(solver, seed, deadline)
            if mss is None:
                break
            map_solver.add_clause([j + 1 for j in range(m) if j not in mss])
        else:
            mus_set = _shrink_in(solver, seed, deadline)
            if mus_set is None:
                break
            record = MusRecord(frozenset(mus_set))
            trace.muses.append(record)
            trace.timestamps.append(time.perf_counter() - start)
            if sink is not None:
                sink(record)
            map_solver.add_clause([-(j + 1) for j in sorted(mus_set)])
    return trace


# ----------------------------------------------------------------------
# Brute-force oracle (truth tables; independent of the CDCL engine)

def _variable_patterns(num_vars: int) -> list[int]:
    """patterns[v-1] has bit a set iff assignment a makes variable v true."""
    total_bits = 1 << num_vars
    patterns = []
    for v in range(1, num_vars + 1):
        half = 1 << (v - 1)
        block = ((1 << half) - 1) << half  # 'half' zeros then 'half' ones
        period = 2 * half
        repeats = total_bits // period
        tile = (1 << (period * repeats)) - 1
        tile //= (1 << period) - 1  # bits set once per period
        patterns.append(block * tile)
    return patterns


def _clause_masks(formula: CnfFormula) -> list[int]:
    if formula.num_vars > TRUTH_TABLE_VAR_LIMIT:
        raise ValueError(
            f"truth-table oracle limited to {TRUTH_TABLE_VAR_LIMIT} variables"
        )
    full = (1 << (1 << formula.num_vars)) - 1
    patterns = _variable_patterns(formula.num_vars)
    masks = []
    for clause in formula.clauses:
        mask = 0
        for lit in clause:
            p = patterns[abs(lit) - 1]
            mask |= p if lit > 0 else (~p & full)
        masks.append(mask)
    return masks


def truth_table_satisfiable(formula: CnfFormula) -> bool:
    """Exhaustive satisfiability by bit-parallel truth tables."""
    full = (1 << (1 << formula.num_vars)) - 1
    acc = full
    for mask in _clause_masks(formula):
        acc &= mask
        if acc == 0:
            return False
    return True


def brute_force_muses(formula: CnfFormula) -> set[MusRecord]:
    """All MUSes of a small formula by exhaustive subset enumeration.

    Iterates subsets in order of increasing size; a subset is a MUS exactly
    when it is UNSAT and contains no previously found (hence smaller) MUS.
    Guarded to at most ``BRUTE_FORCE_CLAUSE_LIMIT`` clauses.
    """
    m = formula.num_clauses
    if m > BRUTE_FORCE_CLAUSE_LIMIT:
        raise ValueError(
            f"brute force limited to {BRUTE_FORCE_CLAUSE_LIMIT} clauses, got {m}"
        )
    masks = _clause_masks(formula)
    full = (1 << (1 << formula.num_vars)) - 1
    found: list[frozenset[int]] = []
    subsets_by_size: list[list[int]] = [[] for _ in range(m + 1)]
    for s in range(1 << m):
        subsets_by_size[bin(s).count("1")].append(s)
    for size in range(m + 1):
        for s in subsets_by_size[size]:
            indices = frozenset(j for j in range(m) if s >> j & 1)
            if any(mus < indices for mus in found):
                continue
            acc = full
            for j in indices:
                acc &= masks[j]
                if acc == 0:
                    break
            if acc == 0:
                found.append(indices)
    return {MusRecord(f) for f in found}


def lift_muses(pruned_trace: EnumerationTrace, index_map) -> EnumerationTrace:
    """Remap MUS indices from a pruned formula back into the original."""
    index_map = list(index_map)
    lifted = []
    for record in pruned_trace.muses:
        mapped = set()
        for i in record.clause_indices:
            if not 0 <= i < len(index_map):
                raise IndexError(f"clause index {i} not covered by index map")
            mapped.add(index_map[i])
        lifted.append(MusRecord(frozenset(mapped)))
    return EnumerationTrace(
        muses=lifted,
        timestamps=list(pruned_trace.timestamps),
        seeds_tested=pruned_trace.seeds_tested,
        exhausted=pruned_trace.exhausted,
    )
