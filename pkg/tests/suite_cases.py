"""Documented construction suite used across the tests.

32 finite restart instances covering every family with alphabet sizes in
{2, 3, 4, 10} and latency parameters k <= 4. Sources and targets are listed
explicitly so the statistical and mutation tests run against a fixed,
reproducible population.
"""

from fractions import Fraction

from randred import (
    Dist,
    arbitrary_to_uniform,
    biased_to_uniform,
    uniform_to_rational,
    uniform_to_uniform,
)

F = Fraction

UNIFORM_UNIFORM_CASES = [
    (2, 2, 1),
    (2, 3, 3),
    (2, 10, 4),
    (3, 2, 2),
    (3, 4, 2),
    (3, 10, 3),
    (4, 2, 3),
    (4, 3, 2),
    (10, 2, 1),
    (10, 2, 2),
    (10, 3, 2),
    (10, 4, 2),
]

UNIFORM_RATIONAL_CASES = [
    (2, [1, 1], 2),
    (2, [1, 1], 4),
    (4, [1, 3], 1),
    (4, [1, 3], 2),
    (4, [1, 3], 4),
    (4, [2, 1, 1], 2),
    (4, [1, 1, 1, 1], 3),
    (10, [3, 7], 1),
    (10, [1, 9], 2),
    (10, [2, 3, 5], 2),
    (10, [1, 2, 3, 4], 2),
]

ARBITRARY_UNIFORM_CASES = [
    ((F(1, 2), F(1, 2)), 2, 2),
    ((F(1, 3), F(2, 3)), 2, 3),
    ((F(1, 3), F(2, 3)), 3, 3),
    ((F(1, 4), F(1, 4), F(1, 2)), 2, 2),
    ((F(1, 6), F(1, 3), F(1, 2)), 2, 3),
]

BIASED_UNIFORM_CASES = [
    (3, 2),
    (3, 3),
    (3, 4),
    (4, 4),
]


def build_suite():
    """All suite instances as (label, RestartSpec) pairs."""
    cases = []
    for d, c, k in UNIFORM_UNIFORM_CASES:
        cases.append((f"u2u d={d} c={c} k={k}", uniform_to_uniform(d, c, k)))
    for d, nums, k in UNIFORM_RATIONAL_CASES:
        cases.append((f"u2r d={d} a={nums} k={k}", uniform_to_rational(d, nums, k)))
    for probs, c, k in ARBITRARY_UNIFORM_CASES:
        label = "a2u p=(" + ",".join(str(p) for p in probs) + f") c={c} k={k}"
        cases.append((label, arbitrary_to_uniform(Dist.from_probs(probs), c, k)))
    for r, k in BIASED_UNIFORM_CASES:
        cases.append((f"b2u r={r} k={k}", biased_to_uniform(r, k)))
    return cases
