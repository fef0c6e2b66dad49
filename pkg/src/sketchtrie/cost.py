"""Analytic query-cost predictions for the hash-table index variants.

``signature_count`` is exact big-integer arithmetic; the expected answer
and candidate sizes assume sketches uniformly distributed over the
``(2**b)**L`` possible strings.  Predictions never influence query
answers; they exist for planning (block-count choice) and for plotting
cost curves.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .sketches import SketchParams, partition


def signature_count(b, L, tau):
    """Number of length-L sketches within distance ``tau`` of a fixed one.

    ``sum_{k=0..tau} C(L, k) * (2**b - 1)**k``, exact.
    """
    if not 1 <= b <= 8:
        raise ValueError(f"b must be in [1, 8], got {b}")
    if L < 1:
        raise ValueError("L must be >= 1")
    if not 0 <= tau <= L:
        raise ValueError(f"threshold {tau} out of range [0, {L}]")
    base = (1 << b) - 1
    return sum(comb(L, k) * base**k for k in range(tau + 1))


@dataclass(frozen=True)
class CostEstimate:
    """Predicted single- and multi-index query costs for one parameter point."""

    b: int
    L: int
    tau: int
    n: int
    m: int
    policy: str
    signatures: int
    single_cost: float
    multi_cost: float
    expected_solutions: float
    block_lengths: tuple
    block_thresholds: tuple
    block_signatures: tuple
    expected_candidates: tuple


def _expected_matches(sigs, n, b, length):
    # expected rows equal to one of `sigs` uniform probes
    return Fraction(sigs * n, (1 << b) ** length)


def estimate_cost(b, L, tau, n, m=1, policy="uniform"):
    """Cost model for a single query at the given parameter point.

    single cost: ``sigs(b, L, tau) * L + E|I|`` (probe work plus answer
    access).  multi cost: per block, ``sigs(b, L_j, tau_j) * L_j`` filter
    work plus ``L * E|C_j|`` verification work, summed over active blocks.
    """
    from .indexes import assign_thresholds  # local import, avoids a cycle

    if n < 0:
        raise ValueError("n must be >= 0")
    sigs = signature_count(b, L, tau)
    expected_solutions = _expected_matches(sigs, n, b, L)
    single = sigs * L + expected_solutions
    params = SketchParams(b, L)
    lengths = partition(params, m).lengths
    thresholds = assign_thresholds(tau, m, policy).thresholds
    block_sigs = []
    expected_candidates = []
    multi = Fraction(0)
    for length, tau_j in zip(lengths, thresholds):
        if tau_j < 0:
            block_sigs.append(0)
            expected_candidates.append(Fraction(0))
            continue
        s_j = signature_count(b, length, min(tau_j, length))
        c_j = _expected_matches(s_j, n, b, length)
        block_sigs.append(s_j)
        expected_candidates.append(c_j)
        multi += s_j * length + L * c_j
    return CostEstimate(
        b=b,
        L=L,
        tau=tau,
        n=n,
        m=m,
        policy=policy,
        signatures=sigs,
        single_cost=float(single),
        multi_cost=float(multi),
        expected_solutions=float(expected_solutions),
        block_lengths=lengths,
        block_thresholds=thresholds,
        block_signatures=tuple(block_sigs),
        expected_candidates=tuple(float(c) for c in expected_candidates),
    )


def cost_single(b, L, tau, n):
    """Single-index estimate (one block spanning the whole sketch)."""
    return estimate_cost(b, L, tau, n, m=1)


def cost_multi(b, L, tau, n, m, policy="uniform"):
    """Multi-index estimate for ``m`` blocks under the given policy."""
    if m < 1:
        raise ValueError("block count must be >= 1")
    return estimate_cost(b, L, tau, n, m=m, policy=policy)


def choose_blocks(b, L, n, tau, candidates=(2, 3, 4), policy="uniform"):
    """Block count among ``candidates`` minimizing the predicted multi cost."""
    return min(candidates, key=lambda m: estimate_cost(b, L, tau, n, m=m, policy=policy).multi_cost)
