"""Exact-rational linear systems for the K-hypersafety separation.

A prefix (a, b) with input a ≤ K contributes the cyclic equation
Σ_{j≠a} x_j = b − a; input K+1 contributes the pivot equation
Σ_j x_j = b − 2.  Every K-row subsystem of {cyclic rows, pivot row} is
nonsingular, so K distinct producible prefixes determine one constant
context; all K+1 rows together detect the falsifying set's inconsistency
exactly (the cyclic rows force the all-ones solution, whose sum the pivot
contradicts).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from ..traces import OutEv, ReadEv


@dataclass(frozen=True)
class KhsSolution:
    kind: str  # "solution" | "inconsistent" | "not_applicable"
    values: Optional[tuple[Fraction, ...]] = None
    detail: str = ""


def _rhs(k: int, a: int, b: Fraction) -> Fraction:
    return b - a if a <= k else b - 2


def _verify(k: int, prefixes, values: Sequence[Fraction]) -> bool:
    for a, b in prefixes:
        if a <= k:
            got = sum(values[j] for j in range(k) if j != a - 1)
        else:
            got = sum(values)
        if got != _rhs(k, a, Fraction(b)):
            return False
    return True


def solve_khs_system(k: int, prefixes) -> KhsSolution:
    """Solve (|prefixes| = K) or consistency-check (|prefixes| = K+1) the
    constant-context system for the switching program."""
    prefixes = [(int(a), Fraction(b)) for a, b in prefixes]
    inputs = [a for a, _ in prefixes]
    if len(set(inputs)) != len(inputs):
        return KhsSolution("not_applicable", detail="repeated inputs")
    if any(not 1 <= a <= k + 1 for a in inputs):
        return KhsSolution("not_applicable", detail="input outside 1..K+1")
    if len(prefixes) not in (k, k + 1):
        return KhsSolution("not_applicable", detail="need K or K+1 prefixes")

    rhs = {a: _rhs(k, a, b) for a, b in prefixes}
    values = [Fraction(0)] * k

    def solve_cyclic_all() -> Optional[str]:
        """All cyclic rows present: the sum trick."""
        if k == 1:
            return None if rhs[1] == 0 else "0 = b-1 with b != 1"
        total = sum(rhs[a] for a in range(1, k + 1)) / (k - 1)
        for a in range(1, k + 1):
            values[a - 1] = total - rhs[a]
        return None

    if len(prefixes) == k:
        missing = next(a for a in range(1, k + 2) if a not in rhs)
        if missing == k + 1:
            err = solve_cyclic_all()
            if err:
                return KhsSolution("inconsistent", detail=err)
        else:
            # pivot minus a cyclic row isolates that row's variable
            total = rhs[k + 1]
            for a in range(1, k + 1):
                if a != missing:
                    values[a - 1] = total - rhs[a]
            values[missing - 1] = total - sum(
                values[a - 1] for a in range(1, k + 1) if a != missing
            )
        if not _verify(k, prefixes, values):
            return KhsSolution("inconsistent", detail="verification failed")
        return KhsSolution("solution", tuple(values))

    # K+1 prefixes: solve the cyclic part, check against the pivot
    err = solve_cyclic_all()
    if err:
        return KhsSolution("inconsistent", detail=err)
    if k == 1:
        values[0] = rhs[k + 1]
    if not _verify(k, prefixes, values):
        return KhsSolution("inconsistent", detail="cyclic solution contradicts pivot")
    return KhsSolution("solution", tuple(values))


def solve_khs_partial(k: int, prefixes) -> KhsSolution:
    """Like solve_khs_system but also completes under-determined systems
    (fewer than K prefixes) canonically: pick the cyclic variables off a
    chosen total, dump the residue on the first free variable."""
    prefixes = [(int(a), Fraction(b)) for a, b in prefixes]
    if len(prefixes) >= k:
        return solve_khs_system(k, prefixes)
    inputs = [a for a, _ in prefixes]
    if len(set(inputs)) != len(inputs):
        return KhsSolution("not_applicable", detail="repeated inputs")
    if any(not 1 <= a <= k + 1 for a in inputs):
        return KhsSolution("not_applicable", detail="input outside 1..K+1")
    rhs = {a: _rhs(k, a, b) for a, b in prefixes}
    cyclic = [a for a in rhs if a <= k]
    total = rhs.get(k + 1, sum(rhs[a] for a in cyclic))
    values = [Fraction(0)] * k
    for a in cyclic:
        values[a - 1] = total - rhs[a]
    free = [j for j in range(k) if (j + 1) not in cyclic]
    residue = total - sum(values)
    if free:
        values[free[0]] += residue
    if not _verify(k, prefixes, values):
        return KhsSolution("inconsistent", detail="verification failed")
    return KhsSolution("solution", tuple(values))


def falsifying_set(k: int) -> list[tuple[int, Fraction]]:
    """S = {[1, 1+c], …, [K, K+c], [K+1, K+1]} with c = K−1."""
    if k < 1:
        raise ValueError("K must be positive")
    c = k - 1
    rows = [(a, Fraction(a + c)) for a in range(1, k + 1)]
    rows.append((k + 1, Fraction(k + 1)))
    return rows


def prefixes_of_obligation(obligation) -> Optional[list[tuple[int, Fraction]]]:
    """Extract (input, output) pairs from an obligation over the switching
    program; None when a wanted trace does not fit the two-event shape.
    Event-less and input-only prefixes constrain nothing and are dropped."""
    pairs: set[tuple[int, Fraction]] = set()
    for slot in obligation:
        for wanted in slot:
            ev = wanted.events
            if len(ev) == 0:
                continue
            if not isinstance(ev[0], ReadEv):
                return None
            if len(ev) == 1:
                continue
            if len(ev) == 2 and isinstance(ev[1], OutEv):
                pairs.add((ev[0].n, Fraction(ev[1].q)))
            else:
                return None
    by_input: dict[int, Fraction] = {}
    for a, b in sorted(pairs):
        if a in by_input and by_input[a] != b:
            return None  # contradictory demands on one input
        by_input[a] = b
    return sorted(by_input.items())
