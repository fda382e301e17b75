"""Exact and statistical verification of reductions, plus efficiency estimates.

The exact verifier turns the per-iteration word law of a restart
specification into output-prefix probabilities by a renewal recurrence and
compares them, in rational arithmetic, against the claimed target law. The
statistical tools (Monte Carlo efficiency, chi-squared prefix test, empirical
latency) are deterministic given their seeds; independent seeds may run in
parallel and aggregate order-independently.
"""

from __future__ import annotations

import itertools
import math
import statistics
from dataclasses import dataclass
from fractions import Fraction

from scipy.stats import chi2

from .core import Dist, EMPTY_WORD, ExactSampler, Protocol, entropy
from .combinators import RestartSpec
from .reductions import ResidualCascadeProtocol


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of comparing computed prefix probabilities against a target law.

    `rows` holds (prefix, computed, expected) triples, all exact rationals.
    When `complete` is False the computation excluded descent mass beyond the
    explored depth and `bound` caps the total error of that exclusion.
    """

    max_deviation: Fraction
    rows: tuple
    complete: bool
    bound: Fraction | None

    @property
    def exact_pass(self) -> bool:
        return self.complete and self.max_deviation == 0


def verify_reduction_exact(spec: RestartSpec, prefix_len: int) -> VerificationReport:
    """Exact output-prefix probabilities of a restart spec versus its target.

    With W the word law of one iteration, the probability R(y) that the
    emitted stream starts with y satisfies

        R(y) = [ sum_{e != w, w proper prefix of y} W(w) R(y without w)
                 + sum_{w extending y} W(w) ] / (1 - W(empty))

    which is well defined exactly when the spec is productive. Deviation is
    the maximum |R(y) - nu(y)| over all prefixes up to `prefix_len`.
    """
    law = spec.word_law()
    eps_mass = law.get(EMPTY_WORD, Fraction(0))
    if eps_mass == 1:
        raise ValueError("unproductive specification: no iteration ever emits")
    denom = 1 - eps_mass
    # trie over emitted words; each node carries its subtree mass
    root = [Fraction(0), {}]
    for w, mass in law.items():
        node = root
        node[0] += mass
        for s in w:
            child = node[1].get(s)
            if child is None:
                child = [Fraction(0), {}]
                node[1][s] = child
            node = child
            node[0] += mass

    def extension_mass(y):
        node = root
        for s in y:
            node = node[1].get(s)
            if node is None:
                return Fraction(0)
        return node[0]

    c = spec.nu.size
    prefix_prob = {EMPTY_WORD: Fraction(1)}
    rows = []
    deviation = Fraction(0)
    for length in range(1, prefix_len + 1):
        for y in itertools.product(range(c), repeat=length):
            acc = extension_mass(y)
            for j in range(1, length):
                head = law.get(y[:j])
                if head:
                    acc += head * prefix_prob[y[j:]]
            prob = acc / denom
            prefix_prob[y] = prob
            expected = spec.nu.mass(y)
            rows.append((y, prob, expected))
            dev = abs(prob - expected)
            if dev > deviation:
                deviation = dev
    return VerificationReport(deviation, tuple(rows), True, None)


def _merge_stage(emissions: dict, rho: Fraction, child_law: dict) -> dict:
    law = dict(emissions)
    for w, p in child_law.items():
        law[w] = law.get(w, Fraction(0)) + rho * p
    return law


def verify_reduction_lazy(
    protocol: ResidualCascadeProtocol,
    prefix_len: int,
    depth: int,
    nu: Dist | None = None,
) -> VerificationReport:
    """Verify a staged cascade protocol, exactly where the stage chain closes.

    Stages are followed through at most `depth` residual descents. If the
    chain terminates (zero residual) or revisits a memoized stage, the block
    law solves exactly (a geometric series over the cycle) and the report is
    complete. Otherwise probabilities are conditioned on no descent past the
    explored stages and `bound` = (c/d)^(k*depth) caps the excluded mass.
    """
    if not isinstance(protocol, ResidualCascadeProtocol):
        raise TypeError("lazy verification applies to staged cascade protocols")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if nu is None:
        nu = protocol.target
    chain = []
    seen = {}
    cycle_at = None
    truncated = False
    sid = 0
    while True:
        seen[sid] = len(chain)
        emissions, rho, child = protocol.stage_law(sid)
        chain.append((emissions, rho))
        if child is None:
            break
        if child in seen:
            cycle_at = seen[child]
            break
        if len(chain) >= depth:
            truncated = True
            break
        sid = child

    if truncated:
        block_law: dict = {}
        weight = Fraction(1)
        for emissions, rho in chain:
            for w, q in emissions.items():
                block_law[w] = block_law.get(w, Fraction(0)) + weight * q
            weight *= rho
        # condition on never descending past the explored stages
        scale = 1 / (1 - weight)
        block_law = {w: p * scale for w, p in block_law.items()}
        k = protocol.k
        bound = Fraction(protocol.target.size, protocol.d) ** (k * depth)
        complete = False
    elif cycle_at is not None:
        acc: dict = {}
        weight = Fraction(1)
        for emissions, rho in chain[cycle_at:]:
            for w, q in emissions.items():
                acc[w] = acc.get(w, Fraction(0)) + weight * q
            weight *= rho
        scale = 1 / (1 - weight)
        block_law = {w: p * scale for w, p in acc.items()}
        for emissions, rho in reversed(chain[:cycle_at]):
            block_law = _merge_stage(emissions, rho, block_law)
        bound = Fraction(0)
        complete = True
    else:
        emissions, _ = chain[-1]
        block_law = dict(emissions)
        for emissions, rho in reversed(chain[:-1]):
            block_law = _merge_stage(emissions, rho, block_law)
        bound = Fraction(0)
        complete = True

    k = protocol.k
    memo: dict = {EMPTY_WORD: Fraction(1)}

    def stream_prefix_prob(y) -> Fraction:
        prob = memo.get(y)
        if prob is not None:
            return prob
        if len(y) <= k:
            prob = sum(
                (p for w, p in block_law.items() if w[: len(y)] == y), Fraction(0)
            )
        else:
            head = block_law.get(y[:k], Fraction(0))
            prob = head * stream_prefix_prob(y[k:]) if head else Fraction(0)
        memo[y] = prob
        return prob

    rows = []
    deviation = Fraction(0)
    c = nu.size
    for length in range(1, prefix_len + 1):
        for y in itertools.product(range(c), repeat=length):
            prob = stream_prefix_prob(y)
            expected = nu.mass(y)
            rows.append((y, prob, expected))
            dev = abs(prob - expected)
            if dev > deviation:
                deviation = dev
    return VerificationReport(deviation, tuple(rows), complete, bound)


@dataclass(frozen=True)
class EfficiencyEstimate:
    """Empirical entropy-rate efficiency across independent seeds."""

    inputs: int
    outputs: tuple
    per_seed: tuple
    mean: float
    stderr: float


def monte_carlo_efficiency(
    protocol: Protocol, mu: Dist, nu: Dist, n_inputs: int, seeds
) -> EfficiencyEstimate:
    """Sampled output/input entropy ratio after n_inputs symbols, per seed."""
    if n_inputs < 1:
        raise ValueError("need at least one input symbol")
    h_in = entropy(mu)
    if h_in == 0.0:
        raise ValueError("input distribution carries no entropy")
    ratio = entropy(nu) / h_in
    outputs = []
    values = []
    for seed in seeds:
        sampler = ExactSampler(mu, seed)
        produced = protocol.output_count(sampler, n_inputs)
        outputs.append(produced)
        values.append(produced / n_inputs * ratio)
    mean = statistics.fmean(values)
    stderr = (
        statistics.stdev(values) / math.sqrt(len(values)) if len(values) > 1 else 0.0
    )
    return EfficiencyEstimate(n_inputs, tuple(outputs), tuple(values), mean, stderr)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    threshold: float
    passed: bool


def chi_square_prefixes(
    protocol: Protocol,
    mu: Dist,
    nu: Dist,
    prefix_len: int,
    trials: int,
    seed: int,
    max_steps: int = 100_000,
) -> ChiSquareResult:
    """Goodness of fit of the first `prefix_len` output symbols against nu.

    Each trial restarts the protocol and consumes fresh stream symbols until
    `prefix_len` outputs appear, so trials are independent. The statistic is
    compared against the 0.999 quantile at |target|^prefix_len - 1 degrees of
    freedom; fixed seeds keep the outcome deterministic.
    """
    nu.require_strict()
    cells = nu.size**prefix_len
    if trials < 100 * cells:
        raise ValueError(f"need at least {100 * cells} trials for {cells} cells")
    sampler = ExactSampler(mu, seed)
    counts: dict = {}
    step = protocol.step
    draw = sampler.draw
    for _ in range(trials):
        state = protocol.start
        out: list = []
        steps = 0
        while len(out) < prefix_len:
            state, z = step(state, draw())
            if z:
                out.extend(z)
            steps += 1
            if steps > max_steps:
                raise RuntimeError(
                    "no emission within the step cap; protocol looks unproductive"
                )
        key = tuple(out[:prefix_len])
        counts[key] = counts.get(key, 0) + 1
    statistic = 0.0
    for cell in itertools.product(range(nu.size), repeat=prefix_len):
        expected = trials * float(nu.mass(cell))
        observed = counts.get(cell, 0)
        statistic += (observed - expected) ** 2 / expected
    dof = cells - 1
    threshold = float(chi2.ppf(0.999, dof))
    return ChiSquareResult(statistic, dof, threshold, statistic < threshold)


@dataclass(frozen=True)
class LatencyEstimate:
    mean: float
    stderr: float
    epochs: int


def latency_empirical(
    protocol: Protocol, mu: Dist, epochs: int, seed: int, max_steps: int = 1_000_000
) -> LatencyEstimate:
    """Mean input symbols consumed per epoch (until at least one emission).

    Measurement restarts after each emission; the protocol itself keeps
    running on the same stream, which for restart protocols coincides with
    starting each epoch at the start state.
    """
    if epochs < 1:
        raise ValueError("need at least one epoch")
    sampler = ExactSampler(mu, seed)
    state = protocol.start
    step = protocol.step
    draw = sampler.draw
    samples = []
    for _ in range(epochs):
        consumed = 0
        while True:
            state, z = step(state, draw())
            consumed += 1
            if z:
                break
            if consumed > max_steps:
                raise RuntimeError(
                    "no emission within the step cap; protocol looks unproductive"
                )
        samples.append(consumed)
    mean = statistics.fmean(samples)
    stderr = (
        statistics.stdev(samples) / math.sqrt(len(samples)) if len(samples) > 1 else 0.0
    )
    return LatencyEstimate(mean, stderr, epochs)


def output_length_ratio_bound(mu: Dist, nu: Dist) -> float:
    """Ceiling on emitted symbols per consumed symbol for any reduction."""
    lo = float(min(p for p in mu.probs if p))
    hi = float(max(nu.probs))
    if hi >= 1.0:
        raise ValueError("target distribution is degenerate")
    return math.log2(lo) / math.log2(hi)


def absolute_efficiency_bound(mu: Dist, nu: Dist) -> float:
    """Uniform bound on the sampled efficiency values of any reduction."""
    return entropy(nu) / entropy(mu) * output_length_ratio_bound(mu, nu)
