"""Toy programs: grammar-generated skeletons, their control flow graphs, and arc data.

Skeletons come from the grammar ``S -> S; S | if b; S; fi | while b; S; end``
with production probabilities (0.6, 0.1, 0.3), expanded leftmost-first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .cocycle import ScalarEnrichment, enrichment_from_arc_data
from .digraph import Digraph
from .magnitude import WeightingSpace, similarity_matrix, weighting_space

START, STMT, IF, FI, WHILE, END, HALT = "START", "S", "if b", "fi", "while b", "end", "HALT"
TOKENS = (START, STMT, IF, FI, WHILE, END, HALT)
PRODUCTION_PROBS = (0.6, 0.1, 0.3)
DEFAULT_DELTA = Fraction(2)


class SkeletonError(ValueError):
    pass


@dataclass(frozen=True)
class Skeleton:
    lines: tuple
    matching: Mapping = field(compare=False)

    def __post_init__(self):
        if not self.lines or self.lines[0] != START or self.lines[-1] != HALT:
            raise SkeletonError("skeleton must start with START and end with HALT")

    @classmethod
    def from_lines(cls, lines) -> "Skeleton":
        lines = tuple(lines)
        for tok in lines:
            if tok not in TOKENS:
                raise SkeletonError(f"unknown token {tok!r}")
        matching = {}
        stack = []
        for i, tok in enumerate(lines):
            if tok in (IF, WHILE):
                stack.append(i)
            elif tok in (FI, END):
                if not stack:
                    raise SkeletonError(f"unmatched {tok!r} at line {i}")
                j = stack.pop()
                if (lines[j], tok) not in ((IF, FI), (WHILE, END)):
                    raise SkeletonError(f"{lines[j]!r} at line {j} closed by {tok!r} at line {i}")
                matching[j] = i
                matching[i] = j
        if stack:
            raise SkeletonError(f"unclosed construct at line {stack[-1]}")
        return cls(lines, matching)

    @property
    def statement_lines(self) -> list[int]:
        return [i for i, t in enumerate(self.lines) if t == STMT]

    def text(self) -> str:
        width = len(str(len(self.lines) - 1))
        return "\n".join(f"{i:>{width}}  {t}" for i, t in enumerate(self.lines)) + "\n"


def generate_skeleton(
    seed: int, productions: int, probabilities: tuple = PRODUCTION_PROBS
) -> Skeleton:
    """Apply ``productions`` rules leftmost-first, then turn leftover S into statements."""
    if productions < 0:
        raise ValueError("productions must be nonnegative")
    rng = np.random.default_rng(seed)
    cum = np.cumsum(probabilities)
    NT = None  # the nonterminal S
    form: list = [NT]
    for _ in range(productions):
        i = form.index(NT)
        u = rng.random() * cum[-1]
        if u < cum[0]:
            repl = [NT, NT]
        elif u < cum[1]:
            repl = [IF, NT, FI]
        else:
            repl = [WHILE, NT, END]
        form[i : i + 1] = repl
    body = [STMT if tok is NT else tok for tok in form]
    return Skeleton.from_lines([START, *body, HALT])


def build_cfg(sk: Skeleton) -> Digraph:
    """One vertex per line (its line number), arcs by the branch/loop table."""
    lines, match = sk.lines, sk.matching
    arcs = []
    for j, tok in enumerate(lines):
        if tok == HALT:
            continue
        if tok in (IF, WHILE):
            arcs.append((j, j + 1))
            arcs.append((j, match[j] + 1))
        elif tok == END:
            arcs.append((j, match[j]))
        else:
            arcs.append((j, j + 1))
    return Digraph(range(len(lines)), arcs)


@dataclass(frozen=True)
class CfgAssignment:
    skeleton: Skeleton
    cfg: Digraph
    data: Mapping
    delta: Mapping
    enrichment: ScalarEnrichment = field(repr=False)


def default_delta(sk: Skeleton, value=DEFAULT_DELTA) -> dict:
    return {j: Fraction(value) for j in sk.statement_lines}


def assign_arc_data(cfg: Digraph, sk: Skeleton, delta: Mapping | None = None) -> CfgAssignment:
    """Statement arcs carry delta_j, if-skip arcs the product over the then-branch,
    end->while arcs the inverse product over the loop body, all other arcs 1."""
    lines, match = sk.lines, sk.matching
    delta = default_delta(sk) if delta is None else {int(k): Fraction(v) for k, v in delta.items()}
    for j in sk.statement_lines:
        delta.setdefault(j, DEFAULT_DELTA)
    skip: dict[int, Fraction] = {}

    def walk(a: int, b: int) -> Fraction:
        # product along the fall-through path from line a to line b
        prod = Fraction(1)
        i = a
        while i != b:
            tok = lines[i]
            if tok == STMT:
                prod *= delta[i]
                i += 1
            elif tok == FI:
                i += 1
            elif tok == IF:
                prod *= skip_value(i)
                i = match[i] + 1
            elif tok == WHILE:
                i = match[i] + 1
            else:
                raise SkeletonError(f"fall-through walk hit {tok!r} at line {i}")
        return prod

    def skip_value(j: int) -> Fraction:
        if j not in skip:
            skip[j] = walk(j + 1, match[j] + 1)
        return skip[j]

    data = {}
    for a, b in cfg.sorted_arcs():
        tok = lines[a]
        if tok == STMT:
            data[(a, b)] = delta[a]
        elif tok == IF and b == match[a] + 1 and b != a + 1:
            data[(a, b)] = skip_value(a)
        elif tok == END:
            data[(a, b)] = 1 / walk(b + 1, a)
        else:
            data[(a, b)] = Fraction(1)
    E = enrichment_from_arc_data(cfg, data)
    return CfgAssignment(sk, cfg, data, dict(delta), E)


@dataclass(frozen=True)
class ProgramAnalysis:
    assignment: CfgAssignment
    Z: np.ndarray
    space: WeightingSpace

    @property
    def kernel_row_maxima(self) -> np.ndarray:
        K = self.space.kernel_matrix()
        if K.shape[1] == 0:
            return np.zeros(K.shape[0])
        return K.max(axis=1)

    @property
    def particular_is_start(self) -> bool | None:
        w = self.space.particular
        if w is None:
            return None
        return bool(w[0] == 1 and all(x == 0 for x in w[1:]))


def analyze(assignment: CfgAssignment) -> ProgramAnalysis:
    sim = similarity_matrix(assignment.enrichment)
    return ProgramAnalysis(assignment, sim.Z, weighting_space(sim))


@dataclass(frozen=True)
class PerturbationReport:
    line: int
    base_delta: Fraction
    new_delta: Fraction
    base: ProgramAnalysis
    perturbed: ProgramAnalysis

    def rows(self) -> list[dict]:
        """Per-vertex comparison of kernel row maxima and particular weightings."""
        a, b = self.base.kernel_row_maxima, self.perturbed.kernel_row_maxima
        wa, wb = self.base.space.particular, self.perturbed.space.particular
        out = []
        for v in range(len(a)):
            out.append(
                {
                    "vertex": v,
                    "token": self.base.assignment.skeleton.lines[v],
                    "kernel_max_base": float(a[v]),
                    "kernel_max_perturbed": float(b[v]),
                    "weighting_base": None if wa is None else float(wa[v]),
                    "weighting_perturbed": None if wb is None else float(wb[v]),
                }
            )
        return out

    def to_dict(self) -> dict:
        mb, mp = self.base.space.magnitude, self.perturbed.space.magnitude
        return {
            "line": self.line,
            "base_delta": str(self.base_delta),
            "new_delta": str(self.new_delta),
            "magnitude_base": None if mb is None else str(mb),
            "magnitude_perturbed": None if mp is None else str(mp),
            "rows": self.rows(),
        }


def perturbation_study(base: CfgAssignment, j: int, new_delta) -> PerturbationReport:
    if j not in base.delta:
        raise ValueError(f"line {j} is not a statement line")
    delta = dict(base.delta)
    delta[j] = Fraction(new_delta)
    perturbed = assign_arc_data(base.cfg, base.skeleton, delta)
    return PerturbationReport(j, base.delta[j], delta[j], analyze(base), analyze(perturbed))
