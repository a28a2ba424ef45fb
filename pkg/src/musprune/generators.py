"""Random UNSAT formula generation.

Three families:

* ``gen_sr_random`` adds random clauses (length 2 + Bernoulli + Geometric,
  distinct variables, uniform polarities) until the conjunction first
  becomes unsatisfiable, and keeps that final clause. Removing the last
  clause therefore always yields a satisfiable formula.
* ``gen_stat_matched`` mimics a target clause-length distribution and
  clause-to-variable ratio: clauses that would make the formula UNSAT are
  rejected until a clause-count lower bound is reached, after which
  clauses are added unconditionally until UNSAT.
* ``gen_graph_coloring`` encodes K-coloring of an Erdos-Renyi graph with
  at-least-one / at-most-one node constraints and per-edge color bans,
  rejection-sampling until the instance is UNSAT.

The geometric distribution uses the {0, 1, 2, ...} convention with
P(X = j) = (1-p)^j * p. All generators are deterministic under their seed.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass

import numpy as np

from .cnf import CnfFormula, FormulaStats, write_dimacs
from .sat import SatEngine


@dataclass(frozen=True)
class GenSpec:
    """Serializable description of one generator configuration."""

    variant: str                                 # sr_random|stat_matched|graph_coloring
    num_vars: int | None = None                  # sr_random
    var_range: tuple[int, int] | None = None     # sr_random corpus mode
    bernoulli_p: float = 0.3
    geometric_p: float = 0.3
    ratio: float | None = None                   # stat_matched
    length_histogram: dict[int, int] | None = None
    node_range: tuple[int, int] | None = None    # graph_coloring
    edge_p: float = 0.8
    color_range: tuple[int, int] | None = None

    def __post_init__(self):
        if self.variant not in ("sr_random", "stat_matched", "graph_coloring"):
            raise ValueError(f"unknown variant {self.variant!r}")
        for p in (self.bernoulli_p, self.geometric_p):
            if not 0.0 < p < 1.0:
                raise ValueError("probabilities must lie strictly in (0, 1)")
        if not 0.0 < self.edge_p <= 1.0:
            raise ValueError("edge probability must lie in (0, 1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: v for k, v in d.items() if v is not None}


def _sample_clause(rng, n_vars: int, length: int) -> list[int]:
    length = max(1, min(length, n_vars))
    variables = rng.choice(n_vars, size=length, replace=False) + 1
    signs = rng.integers(0, 2, size=length) * 2 - 1
    return [int(v * s) for v, s in zip(variables, signs)]


def _clause_length(rng, bernoulli_p: float, geometric_p: float) -> int:
    bern = int(rng.random() < bernoulli_p)
    geo = int(rng.geometric(geometric_p) - 1)  # shift to {0,1,2,...}
    return 2 + bern + geo


def gen_sr_random(n_vars: int, bernoulli_p: float = 0.3,
                  geometric_p: float = 0.3, seed=0,
                  engine: SatEngine | None = None) -> CnfFormula:
    """Grow a random formula until the first clause makes it UNSAT."""
    if n_vars < 2:
        raise ValueError("n_vars must be >= 2")
    engine = engine if engine is not None else SatEngine()
    rng = np.random.default_rng(seed)
    session = engine.session(n_vars)
    clauses: list[list[int]] = []
    while True:
        clause = _sample_clause(rng, n_vars,
                                _clause_length(rng, bernoulli_p, geometric_p))
        session.add_clause(clause)
        clauses.append(clause)
        if not session.is_sat():
            return CnfFormula(n_vars, clauses)


def _lengths_from_histogram(histogram: dict[int, int]):
    lengths = sorted(int(k) for k in histogram)
    counts = np.array([histogram[k] for k in lengths], dtype=np.float64)
    if not lengths or counts.sum() <= 0:
        raise ValueError("length histogram is empty")
    return np.array(lengths), counts / counts.sum()


def gen_stat_matched(stats: FormulaStats, seed=0,
                     engine: SatEngine | None = None,
                     n_vars: int | None = None,
                     max_rejections: int = 10_000) -> CnfFormula:
    """Generate an UNSAT formula matching target statistics.

    The variable count defaults to the target's; the clause lower bound is
    ceil(0.9 * ratio * N). Until the bound, candidate clauses that would
    make the formula UNSAT are rejected (bounded consecutive retries);
    afterwards clauses are added unconditionally until UNSAT.
    """
    if stats.clause_to_variable_ratio <= 0:
        raise ValueError("target ratio must be positive")
    lengths, probs = _lengths_from_histogram(stats.clause_length_histogram)
    n = int(n_vars if n_vars is not None else stats.num_vars)
    if n < 2:
        raise ValueError("need at least two variables")
    engine = engine if engine is not None else SatEngine()
    rng = np.random.default_rng(seed)
    lower_bound = math.ceil(0.9 * stats.clause_to_variable_ratio * n)
    session = engine.session(n)
    committed_selectors: list[int] = []
    clauses: list[list[int]] = []
    rejections = 0
    while len(clauses) < lower_bound:
        length = int(rng.choice(lengths, p=probs))
        clause = _sample_clause(rng, n, length)
        selector = session.add_variable()
        session.add_clause(clause + [-selector])
        if session.is_sat(committed_selectors + [selector]):
            committed_selectors.append(selector)
            clauses.append(clause)
            rejections = 0
        else:
            session.add_clause([-selector])
            rejections += 1
            if rejections >= max_rejections:
                raise RuntimeError(
                    f"clause rejection stalled after {max_rejections} "
                    f"consecutive SAT-preserving failures"
                )
    while True:
        length = int(rng.choice(lengths, p=probs))
        clause = _sample_clause(rng, n, length)
        session.add_clause(clause)
        clauses.append(clause)
        if not session.is_sat(committed_selectors):
            return CnfFormula(n, clauses)


def coloring_encoding(n_nodes: int, edges, n_colors: int) -> CnfFormula:
    """CNF for K-coloring: per node one at-least-one clause and K(K-1)/2
    at-most-one clauses; per edge K same-color bans. Variable (v, c) is
    (v-1)*K + c for v in 1..n, c in 1..K."""
    k = n_colors

    def var(v: int, c: int) -> int:
        return (v - 1) * k + c

    clauses: list[list[int]] = []
    for v in range(1, n_nodes + 1):
        clauses.append([var(v, c) for c in range(1, k + 1)])
        for c1 in range(1, k + 1):
            for c2 in range(c1 + 1, k + 1):
                clauses.append([-var(v, c1), -var(v, c2)])
    for (u, v) in edges:
        for c in range(1, k + 1):
            clauses.append([-var(u, c), -var(v, c)])
    return CnfFormula(n_nodes * k, clauses)


def gen_graph_coloring(node_range, edge_p: float, color_range, seed=0,
                       engine: SatEngine | None = None,
                       max_attempts: int = 200) -> CnfFormula:
    """Sample G(n, p) coloring instances, discarding satisfiable ones."""
    n_lo, n_hi = int(node_range[0]), int(node_range[1])
    c_lo, c_hi = int(color_range[0]), int(color_range[1])
    if n_lo > n_hi or c_lo > c_hi or n_lo < 1:
        raise ValueError("empty node or color range")
    if c_lo < 2:
        raise ValueError("need at least two colors")
    engine = engine if engine is not None else SatEngine()
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        n = int(rng.integers(n_lo, n_hi + 1))
        k = int(rng.integers(c_lo, c_hi + 1))
        edges = [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)
                 if rng.random() < edge_p]
        formula = coloring_encoding(n, edges, k)
        if not engine.is_satisfiable(formula):
            return formula
    raise RuntimeError(
        f"no UNSAT coloring instance found in {max_attempts} attempts"
    )


def generate(spec: GenSpec, seed=0, engine: SatEngine | None = None) -> CnfFormula:
    """Dispatch one instance from a :class:`GenSpec`."""
    engine = engine if engine is not None else SatEngine()
    rng = np.random.default_rng(seed)
    if spec.variant == "sr_random":
        if spec.num_vars is not None:
            n = spec.num_vars
        elif spec.var_range is not None:
            n = int(rng.integers(spec.var_range[0], spec.var_range[1] + 1))
        else:
            raise ValueError("sr_random needs num_vars or var_range")
        return gen_sr_random(n, spec.bernoulli_p, spec.geometric_p,
                             seed=rng, engine=engine)
    if spec.variant == "stat_matched":
        if spec.ratio is None or spec.length_histogram is None:
            raise ValueError("stat_matched needs ratio and length_histogram")
        n = spec.num_vars
        if n is None and spec.var_range is not None:
            n = int(rng.integers(spec.var_range[0], spec.var_range[1] + 1))
        if n is None:
            raise ValueError("stat_matched needs num_vars or var_range")
        stats = FormulaStats(
            num_vars=n, num_clauses=0,
            clause_length_histogram={int(k): v
                                     for k, v in spec.length_histogram.items()},
            clause_to_variable_ratio=spec.ratio,
        )
        return gen_stat_matched(stats, seed=rng, engine=engine)
    if spec.variant == "graph_coloring":
        if spec.node_range is None or spec.color_range is None:
            raise ValueError("graph_coloring needs node_range and color_range")
        return gen_graph_coloring(spec.node_range, spec.edge_p,
                                  spec.color_range, seed=rng, engine=engine)
    raise ValueError(f"unknown variant {spec.variant!r}")


def emit_corpus(out_dir, spec: GenSpec, count: int, seed=0,
                engine: SatEngine | None = None) -> list[str]:
    """Write ``count`` DIMACS instances plus a JSON-lines manifest.

    Per-instance seeds derive from the corpus seed by counter, so any
    instance can be regenerated independently.
    """
    engine = engine if engine is not None else SatEngine()
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    manifest_path = os.path.join(out_dir, "manifest.jsonl")
    with open(manifest_path, "w") as manifest:
        for i in range(count):
            instance_seed = np.random.SeedSequence(entropy=(seed, i))
            calls_before = engine.calls
            formula = generate(spec, seed=instance_seed, engine=engine)
            name = f"{i:05d}.cnf"
            path = os.path.join(out_dir, name)
            with open(path, "w") as fh:
                fh.write(write_dimacs(formula))
            record = {
                "file": name,
                "spec": spec.to_dict(),
                "seed": [seed, i],
                "num_vars": formula.num_vars,
                "num_clauses": formula.num_clauses,
                "sat_calls": engine.calls - calls_before,
            }
            manifest.write(json.dumps(record, sort_keys=True) + "\n")
            paths.append(path)
    return paths
