"""
Folded levels and signs produced by reflecting a path on a subset of steps.
"""

from dataclasses import dataclass
from typing import Iterable, Mapping, Tuple


@dataclass(frozen=True)
class ReflectionSequence:
    """
    Reflection data for one barrier subset J.

    ``m`` holds m[0..n] with m[0] = 0; ``s`` holds s_1..s_n where s_i is +1
    when an even number of elements of J exceed i.
    """

    subset: Tuple[int, ...]
    m: Tuple[float, ...]
    s: Tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.s)

    @property
    def terminal(self) -> float:
        """m[n], the level entering the drift weight."""
        return self.m[-1]


def reflection_sequence(subset: Iterable[int], m: Mapping[int, float], n: int) -> ReflectionSequence:
    """
    Run the folding recursion for a subset J of the barrier steps.

    m[i] = m_i - m[i-1] when i is in J, otherwise m[i-1].

    Args:
        subset: J, a subset of the barrier index set
        m: Log-levels m_i over the barrier index set I
        n: Number of steps

    Returns:
        ReflectionSequence

    Raises:
        ValueError: J not contained in I, or I not contained in 1..n
    """
    J = tuple(sorted(set(subset)))
    for i in m:
        if not 1 <= i <= n:
            raise ValueError(f"barrier index {i} outside 1..{n}")
    missing = [i for i in J if i not in m]
    if missing:
        raise ValueError(f"subset indices {missing} have no barrier level")

    members = set(J)
    folded = [0.0]
    for i in range(1, n + 1):
        folded.append(m[i] - folded[-1] if i in members else folded[-1])

    signs = []
    for i in range(1, n + 1):
        above = sum(1 for j in J if j > i)
        signs.append(1 if above % 2 == 0 else -1)

    return ReflectionSequence(subset=J, m=tuple(folded), s=tuple(signs))
