"""Independent oracles used to derive expected values.

These deliberately avoid the implementation paths they check: the prefix
relation is the literal three-clause induction, dense/safety classification
enumerates traces directly, and the linear solver is generic Gaussian
elimination over exact rationals (free variables pinned to zero).
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from robustcomp.monitors import Verdict
from robustcomp.traces import Open, SilentDiv, Terminated, TracePrefix


def prefix_leq_reference(m: TracePrefix, t: TracePrefix) -> bool:
    """The three-clause recursion: a terminated prefix below the identical
    terminated trace, an open prefix below anything, heads peeled in step."""
    def go(m_events, m_end, t_events, t_end):
        if not m_events:
            if isinstance(m_end, Open):
                return True
            return (
                isinstance(m_end, Terminated)
                and not t_events
                and m_end == t_end
            )
        if not t_events:
            return False
        if m_events[0] != t_events[0]:
            return False
        return go(m_events[1:], m_end, t_events[1:], t_end)

    # Truncated target ends count as extendable, like Open
    return go(m.events, m.end, t.events, t.end)


def all_traces(alphabet, depth, ends=(Terminated(), SilentDiv())):
    for n in range(depth + 1):
        for seq in itertools.product(alphabet, repeat=n):
            for end in ends:
                yield TracePrefix(seq, end)


def monitor_accepts(monitor, t: TracePrefix) -> bool:
    state = monitor.run(t.events)
    return monitor.classify(state, t.end) is Verdict.ACCEPT


def dense_by_enumeration(monitor, alphabet, depth) -> bool:
    """Dense ⟺ every terminating trace is accepted (checked to depth)."""
    return all(
        monitor_accepts(monitor, t)
        for t in all_traces(alphabet, depth, ends=(Terminated(),))
    )


def gaussian_solve(rows: list[tuple[tuple[int, ...], Fraction]]):
    """Row-reduce masked equations over the rationals.

    Returns ('solution', values) with free variables pinned to 0, or
    ('inconsistent', None).
    """
    if not rows:
        return "solution", ()
    width = len(rows[0][0])
    matrix = [[Fraction(c) for c in mask] + [Fraction(rhs)] for mask, rhs in rows]
    pivots = []
    r = 0
    for col in range(width):
        pivot = next((i for i in range(r, len(matrix)) if matrix[i][col] != 0), None)
        if pivot is None:
            continue
        matrix[r], matrix[pivot] = matrix[pivot], matrix[r]
        matrix[r] = [v / matrix[r][col] for v in matrix[r]]
        for i in range(len(matrix)):
            if i != r and matrix[i][col] != 0:
                factor = matrix[i][col]
                matrix[i] = [a - factor * b for a, b in zip(matrix[i], matrix[r])]
        pivots.append(col)
        r += 1
    for i in range(r, len(matrix)):
        if all(v == 0 for v in matrix[i][:-1]) and matrix[i][-1] != 0:
            return "inconsistent", None
    values = [Fraction(0)] * width
    for row_idx, col in enumerate(pivots):
        values[col] = matrix[row_idx][-1]
    return "solution", tuple(values)


def khs_equations(k: int, prefixes) -> list[tuple[tuple[int, ...], Fraction]]:
    """The switching program's constraint rows for a constant context."""
    rows = []
    for a, b in prefixes:
        b = Fraction(b)
        if a <= k:
            mask = tuple(1 if j != a - 1 else 0 for j in range(k))
            rows.append((mask, b - a))
        else:
            rows.append((tuple(1 for _ in range(k)), b - 2))
    return rows
