"""Constructors for the entropy-conserving reduction families.

Five families, each indexed by a latency parameter k:

  * uniform_to_uniform:   d-ary uniform -> c-ary uniform
  * uniform_to_rational:  d-ary uniform -> rational probabilities over d
  * uniform_to_arbitrary: d-ary uniform -> arbitrary rational target (lazy,
                          staged through residual distributions)
  * arbitrary_to_uniform: arbitrary source -> c-ary uniform (type counting)
  * biased_to_uniform:    (1/r, (r-1)/r) coin -> (r-1)-ary uniform

Plus their combinatorial kernels: base expansions, canonical outcome tables,
binomial-bounded representations, the qualifying-latency search, and
lexicographic ranking of same-type words. Families whose finite instances are
too large to materialize still expose exact per-iteration statistics through
the *_stats variants.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from mpmath import iv

from .core import (
    Alphabet,
    Dist,
    EMPTY_WORD,
    PrefixCode,
    Protocol,
    StateId,
    Symbol,
    Word,
    canonical_codewords,
)
from .combinators import EpochStats, RestartSpec, SerialChain, stats_from_moments

# Constructors refuse to enumerate codes beyond this many entries; the
# analytic *_stats paths have no such limit.
MATERIALIZE_LIMIT = 200_000


def _check_materializable(count: int, what: str) -> None:
    if count > MATERIALIZE_LIMIT:
        raise ValueError(
            f"{what} would need {count} entries; use the *_stats variant instead"
        )


def _base_digits(n: int, base: int) -> list:
    """Little-endian digits of n >= 0; empty for n = 0."""
    digits = []
    while n:
        n, rem = divmod(n, base)
        digits.append(rem)
    return digits


def _pow_floor_log(base: int, n: int) -> int:
    """Largest m >= 0 with base**m <= n, by exact integer comparison."""
    m = 0
    power = base
    while power <= n:
        m += 1
        power *= base
    return m


def _uniform_output_table(n_outcomes: int, c: int) -> list:
    """Outputs for n equiprobable outcomes, canonical order.

    With n = sum a_i c^i the base-c expansion, outcomes are assigned in
    blocks of descending output length i: each distinct c-ary word of length
    i is used exactly a_i times (consecutively, words in lexicographic
    order). The a_0 final outcomes map to the empty word.
    """
    digits = _base_digits(n_outcomes, c)
    table = []
    for length in range(len(digits) - 1, -1, -1):
        a = digits[length]
        if not a:
            continue
        for w in itertools.product(range(c), repeat=length):
            table.extend([w] * a)
    return table


# ---------------------------------------------------------------------------
# uniform -> uniform


def uniform_to_uniform(d: int, c: int, k: int) -> RestartSpec:
    """Block reduction: k d-ary uniform symbols to a variable c-ary word.

    The code is all d^k input words; outcome number i emits the i-th entry of
    the canonical outcome table for d^k equiprobable outcomes.
    """
    if d < 2 or c < 2:
        raise ValueError("alphabet sizes must be >= 2")
    if k < 1:
        raise ValueError("latency parameter must be >= 1")
    n = d**k
    _check_materializable(n, "uniform-to-uniform code")
    table = _uniform_output_table(n, c)
    alphabet = Alphabet(d)
    f = dict(zip(itertools.product(range(d), repeat=k), table))
    code = PrefixCode(d, frozenset(f))
    return RestartSpec(code, f, Dist.uniform(d), Dist.uniform(c))


def uniform_to_uniform_stats(d: int, c: int, k: int) -> EpochStats:
    """Exact per-iteration moments of uniform_to_uniform, computed from the
    base-c expansion of d^k without enumerating the code."""
    if d < 2 or c < 2 or k < 1:
        raise ValueError("invalid family parameters")
    n = d**k
    digits = _base_digits(n, c)
    produced = sum(i * a * c**i for i, a in enumerate(digits))
    return stats_from_moments(
        consumption=Fraction(k),
        production=Fraction(produced, n),
        success=Fraction(n - digits[0], n),
        max_consumption=k,
        mu=Dist.uniform(d),
        nu=Dist.uniform(c),
    )


def uniform_uniform_chain(d: int, c: int) -> SerialChain:
    """Serial chain of uniform_to_uniform components with k = 1, 2, 3, ...

    Statistics come from the analytic path, so exact partial ratios are
    available at any prefix length even where the component codes (d^k words)
    could never be enumerated.
    """
    return SerialChain(
        lambda i: uniform_to_uniform(d, c, i + 1),
        stats=lambda i: uniform_to_uniform_stats(d, c, i + 1),
    )


# ---------------------------------------------------------------------------
# uniform -> rational


def _rational_requests(numerators, d: int, k: int):
    """Codeword-length requests per output block, in canonical request order.

    For each k-symbol output block y (lexicographic), the block's weight
    a_y = prod numerators[y_i] expands in base d as sum_j a_{yj} d^j, and the
    block requests a_{yj} codewords of length k - j, descending j. Yields
    (block, length, count)."""
    c = len(numerators)
    for y in itertools.product(range(c), repeat=k):
        a_y = math.prod(numerators[s] for s in y)
        digits = _base_digits(a_y, d)
        for j in range(len(digits) - 1, -1, -1):
            if digits[j]:
                yield y, k - j, digits[j]


def _validate_rational_params(d: int, numerators, k: int) -> tuple:
    numerators = tuple(int(a) for a in numerators)
    if d < 2:
        raise ValueError("input alphabet size must be >= 2")
    if k < 1:
        raise ValueError("latency parameter must be >= 1")
    if len(numerators) < 2:
        raise ValueError("target alphabet needs at least two symbols")
    if any(a < 1 for a in numerators):
        raise ValueError("every numerator must be >= 1")
    if sum(numerators) != d:
        raise ValueError("numerators must sum to the common denominator d")
    return numerators


def uniform_to_rational(d: int, numerators, k: int) -> RestartSpec:
    """Fixed-output reduction: emits a full k-symbol block every iteration.

    Target probabilities are numerators[i]/d. Codewords come from the
    canonical assignment over the combined length multiset; blocks consume
    them in request order (block-lexicographic, lengths ascending within a
    block). The Kraft sum is exactly 1, so the code is exhaustive.
    """
    numerators = _validate_rational_params(d, numerators, k)
    requests = list(_rational_requests(numerators, d, k))
    total = sum(count for _, _, count in requests)
    _check_materializable(total, "uniform-to-rational code")
    lengths = []
    for _, length, count in requests:
        lengths.extend([length] * count)
    buckets: dict = {}
    for w in canonical_codewords(lengths, d):
        buckets.setdefault(len(w), deque()).append(w)
    f = {}
    for y, length, count in requests:
        bucket = buckets[length]
        for _ in range(count):
            f[bucket.popleft()] = y
    code = PrefixCode(d, frozenset(f))
    nu = Dist.from_probs([Fraction(a, d) for a in numerators])
    return RestartSpec(code, f, Dist.uniform(d), nu)


def uniform_to_rational_stats(d: int, numerators, k: int) -> EpochStats:
    """Exact moments of uniform_to_rational via symbol-count type grouping.

    Blocks with the same multiset of symbols share their weight a_y, so the
    expected consumption aggregates over compositions of k instead of all
    c^k blocks.
    """
    numerators = _validate_rational_params(d, numerators, k)
    c = len(numerators)
    dk = d**k
    consumption = Fraction(0)
    longest = 1
    for sigma in _compositions(k, c):
        n_words = multinomial_coefficient(sigma)
        a_y = math.prod(a**e for a, e in zip(numerators, sigma))
        digits = _base_digits(a_y, d)
        weighted = sum(j * digits[j] * d**j for j in range(len(digits)))
        consumption += n_words * Fraction(k * a_y - weighted, dk)
        shortest_j = next(j for j in range(len(digits)) if digits[j])
        longest = max(longest, k - shortest_j)
    nu = Dist.from_probs([Fraction(a, d) for a in numerators])
    return stats_from_moments(
        consumption=consumption,
        production=Fraction(k),
        success=Fraction(1),
        max_consumption=longest,
        mu=Dist.uniform(d),
        nu=nu,
    )


# ---------------------------------------------------------------------------
# uniform -> arbitrary (lazy residual cascade)


@dataclass(frozen=True)
class ResidualState:
    """Rounding state of one stage of the uniform-to-arbitrary cascade.

    `block_probs` is the current distribution over the c^k output blocks
    (lexicographic order). `floors` holds the greatest integers a with
    a/d^k <= p per block, so 0 <= p - a/d^k < 1/d^k; `residual` is the
    leftover weight r, and the stage descends with probability r/d^k.
    """

    block_probs: tuple
    floors: tuple
    residual: int
    d: int
    k: int

    @classmethod
    def create(cls, block_probs, d: int, k: int) -> "ResidualState":
        block_probs = tuple(Fraction(p) for p in block_probs)
        dk = d**k
        floors = tuple(math.floor(p * dk) for p in block_probs)
        residual = dk - sum(floors)
        if not (0 <= residual < len(block_probs)):
            raise AssertionError("residual weight out of range")
        return cls(block_probs, floors, residual, d, k)

    def child_probs(self) -> tuple | None:
        """Renormalized rounding error driving the next stage; None if exact."""
        if self.residual == 0:
            return None
        dk = self.d**self.k
        return tuple((p * dk - a) / self.residual for p, a in zip(self.block_probs, self.floors))


_NODE, _EMIT, _DESCEND = 0, 1, 2


class _Stage:
    __slots__ = ("table", "child")

    def __init__(self, table, child):
        self.table = table
        self.child = child  # child block distribution, or None


class ResidualCascadeProtocol(Protocol):
    """Lazy uniform-to-arbitrary protocol, stages memoized by distribution.

    Each stage approximates its block distribution by multiples of d^-k,
    emits whole k-symbol blocks, and on the residual codewords moves to the
    stage of the renormalized rounding error. Emitting returns to the root
    stage for the next block. States materialize on first visit; a recurring
    residual distribution reuses its existing stage, so self-similar targets
    yield finite protocols.
    """

    def __init__(self, d: int, target: Dist, k: int):
        target.require_strict()
        if d < 2:
            raise ValueError("input alphabet size must be >= 2")
        if k < 1:
            raise ValueError("latency parameter must be >= 1")
        if target.size < 2:
            raise ValueError("target needs at least two symbols")
        if min(target.probs) <= Fraction(1, d):
            raise ValueError(
                "input alphabet too small: need d > 1 / min target probability"
            )
        _check_materializable(target.size**k, "cascade stage")
        super().__init__(Alphabet(d), target.alphabet, (0, 0))
        self.d = d
        self.k = k
        self.target = target
        self.block_words = list(target.alphabet.words(k))
        root = tuple(target.mass(w) for w in self.block_words)
        self._ids = {root: 0}
        self._key_of = [root]
        self._residuals: dict = {}
        self._stages: dict = {}

    @property
    def num_stages(self) -> int:
        """Distinct block distributions encountered so far."""
        return len(self._ids)

    def residual_state(self, sid: int) -> ResidualState:
        rs = self._residuals.get(sid)
        if rs is None:
            rs = ResidualState.create(self._key_of[sid], self.d, self.k)
            self._residuals[sid] = rs
        return rs

    def stage_id(self, block_probs) -> int:
        key = tuple(block_probs)
        sid = self._ids.get(key)
        if sid is None:
            sid = len(self._key_of)
            self._ids[key] = sid
            self._key_of.append(key)
        return sid

    def child_id(self, sid: int) -> int | None:
        child = self.residual_state(sid).child_probs()
        return None if child is None else self.stage_id(child)

    def stage_law(self, sid: int):
        """Per-iteration law of one stage: (block emission probs, descent
        probability, child stage id or None)."""
        rs = self.residual_state(sid)
        dk = self.d**self.k
        emissions = {
            w: Fraction(a, dk)
            for w, a in zip(self.block_words, rs.floors)
            if a
        }
        return emissions, Fraction(rs.residual, dk), self.child_id(sid)

    def _stage(self, sid: int) -> _Stage:
        stage = self._stages.get(sid)
        if stage is not None:
            return stage
        rs = self.residual_state(sid)
        d, k = self.d, self.k
        requests = []
        for w, a in zip(self.block_words, rs.floors):
            digits = _base_digits(a, d)
            for j in range(len(digits) - 1, -1, -1):
                if digits[j]:
                    requests.append(((_EMIT, w), k - j, digits[j]))
        digits = _base_digits(rs.residual, d)
        for j in range(len(digits) - 1, -1, -1):
            if digits[j]:
                requests.append(((_DESCEND, None), k - j, digits[j]))
        lengths = []
        for _, length, count in requests:
            lengths.extend([length] * count)
        buckets: dict = {}
        for cw in canonical_codewords(lengths, d):
            buckets.setdefault(len(cw), deque()).append(cw)
        table: list = [[None] * d]
        for action, length, count in requests:
            for _ in range(count):
                cw = buckets[length].popleft()
                node = 0
                for sym in cw[:-1]:
                    entry = table[node][sym]
                    if entry is None:
                        table.append([None] * d)
                        entry = (_NODE, len(table) - 1)
                        table[node][sym] = entry
                    node = entry[1]
                table[node][cw[-1]] = action
        stage = _Stage(table, rs.child_probs())
        self._stages[sid] = stage
        return stage

    def step(self, state: StateId, symbol: Symbol) -> tuple[StateId, Word]:
        sid, node = state
        kind, payload = self._stage(sid).table[node][symbol]
        if kind == _NODE:
            return ((sid, payload), EMPTY_WORD)
        if kind == _EMIT:
            return ((0, 0), payload)
        return ((self.child_id(sid), 0), EMPTY_WORD)


def uniform_to_arbitrary(d: int, target: Dist, k: int) -> ResidualCascadeProtocol:
    """Reduce d-ary uniform input to an arbitrary exact-rational target law."""
    return ResidualCascadeProtocol(d, target, k)


# ---------------------------------------------------------------------------
# arbitrary -> uniform (type counting)


def multinomial_coefficient(sigma) -> int:
    """Number of words whose symbol counts are `sigma`."""
    total = sum(sigma)
    coeff = math.factorial(total)
    for s in sigma:
        coeff //= math.factorial(s)
    return coeff


def multinomial_rank(word, alphabet_size: int | None = None):
    """Symbol counts of `word` and its lexicographic rank among same-count words."""
    word = tuple(word)
    if alphabet_size is None:
        alphabet_size = max(word) + 1 if word else 1
    counts = [0] * alphabet_size
    for s in word:
        if not 0 <= s < alphabet_size:
            raise ValueError(f"symbol {s} outside alphabet of size {alphabet_size}")
        counts[s] += 1
    remaining = counts[:]
    rank = 0
    for s in word:
        for t in range(s):
            if remaining[t]:
                remaining[t] -= 1
                rank += multinomial_coefficient(remaining)
                remaining[t] += 1
        remaining[s] -= 1
    return tuple(counts), rank


def _compositions(total: int, parts: int):
    """All count vectors of the given length summing to total, lex order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class TypeClass:
    """One symbol-count class of k-length words: its size and total mass."""

    sigma: tuple
    count: int
    prob: Fraction


def type_classes(dist: Dist, k: int) -> list:
    """All symbol-count classes of k-length words under `dist`; masses sum to 1."""
    classes = []
    for sigma in _compositions(k, dist.size):
        count = multinomial_coefficient(sigma)
        mass = math.prod(
            (p**e for p, e in zip(dist.probs, sigma)), start=Fraction(1)
        )
        classes.append(TypeClass(sigma, count, count * mass))
    return classes


def arbitrary_to_uniform(source: Dist, c: int, k: int) -> RestartSpec:
    """Extract c-ary uniform symbols from the arrangement entropy of k draws.

    Words sharing a symbol-count class are equiprobable; each word's
    lexicographic rank within its class selects an output from the canonical
    outcome table for that class size. Classes of size 1 emit nothing.
    """
    source.require_strict()
    if c < 2:
        raise ValueError("output alphabet size must be >= 2")
    if k < 1:
        raise ValueError("latency parameter must be >= 1")
    d = source.size
    _check_materializable(d**k, "arbitrary-to-uniform code")
    tables: dict = {}
    f = {}
    for w in source.alphabet.words(k):
        sigma, rank = multinomial_rank(w, d)
        table = tables.get(sigma)
        if table is None:
            table = _uniform_output_table(multinomial_coefficient(sigma), c)
            tables[sigma] = table
        f[w] = table[rank]
    code = PrefixCode(d, frozenset(f))
    return RestartSpec(code, f, source, Dist.uniform(c))


def arbitrary_to_uniform_stats(source: Dist, c: int, k: int) -> EpochStats:
    """Exact moments of arbitrary_to_uniform, aggregated per count class."""
    source.require_strict()
    if c < 2 or k < 1:
        raise ValueError("invalid family parameters")
    production = Fraction(0)
    success = Fraction(0)
    for tc in type_classes(source, k):
        digits = _base_digits(tc.count, c)
        produced = sum(i * a * c**i for i, a in enumerate(digits))
        production += tc.prob * Fraction(produced, tc.count)
        success += tc.prob * Fraction(tc.count - digits[0], tc.count)
    return stats_from_moments(
        consumption=Fraction(k),
        production=production,
        success=success,
        max_consumption=k,
        mu=source,
        nu=Dist.uniform(c),
    )


# ---------------------------------------------------------------------------
# biased coin -> uniform


def binomialary_representation(r: int, k: int, target: int, bounds: str = "base"):
    """Write `target` as sum a_i (r-1)^i under binomial digit bounds.

    bounds="base": k coefficients, 0 <= a_i <= C(k, i+1), valid for targets
    in [0, (r^k - 1)/(r - 1)]; needs k >= r - 2. bounds="extended": k + 1
    coefficients, 0 <= a_i <= C(k, i), covering every multiple of r - 1 in
    [0, r^k] (and, for r = 3, every integer in range).

    Digits follow the incremental carry rule: the smallest index with a slack
    digit gains one, lower digits reset to bound - (r - 2). The closed form
    below evaluates that odometer directly at `target`; for r >= 4 the
    extended form falls back to scaling a base-form representation by r - 1,
    since the extended bounds start at C(k, 0) = 1 < r - 2.
    """
    if r < 3:
        raise ValueError("bias parameter r must be >= 3")
    if k < 1:
        raise ValueError("k must be >= 1")
    if target < 0:
        raise ValueError("target must be nonnegative")
    step = r - 1
    if bounds == "base":
        if k < r - 2:
            raise ValueError("base representation needs k >= r - 2")
        bound_vec = [math.comb(k, i + 1) for i in range(k)]
        limit = (r**k - 1) // (r - 1)
        if target > limit:
            raise ValueError(f"target {target} exceeds base-form range {limit}")
        return _odometer_representation(bound_vec, step, r - 2, target)
    if bounds == "extended":
        bound_vec = [math.comb(k, i) for i in range(k + 1)]
        limit = r**k
        if target > limit:
            raise ValueError(f"target {target} exceeds extended-form range {limit}")
        if r == 3:
            return _odometer_representation(bound_vec, step, r - 2, target)
        if target % step:
            raise ValueError(
                "extended representation for r >= 4 covers multiples of r - 1 only"
            )
        if target == 0:
            return tuple([0] * (k + 1))
        base = binomialary_representation(r, k, target // step, bounds="base")
        return (0,) + base
    raise ValueError(f"unknown bounds mode {bounds!r}")


def _odometer_representation(bound_vec, step: int, deficit: int, target: int):
    """Closed form of the carry-rule odometer state at value `target`.

    A carry into position i resets every lower digit j to bound_vec[j] -
    deficit, so the state at value t has top digit floor((t - s_i)/step^i)
    whenever t clears the first-carry threshold step^i + s_i, where s_i is
    the post-carry value of the digits below i.
    """
    top = len(bound_vec) - 1
    if any(bound_vec[j] < deficit for j in range(top)):
        raise ValueError("carry rule undefined: a resettable bound is below r - 2")
    powers = [step**j for j in range(top + 1)]
    below = [0] * (top + 1)
    acc = 0
    for j in range(top):
        acc += (bound_vec[j] - deficit) * powers[j]
        below[j + 1] = acc
    digits = [0] * (top + 1)
    t = target
    for i in range(top, -1, -1):
        if t >= powers[i] + below[i]:
            digits[i] = (t - below[i]) // powers[i]
            t -= digits[i] * powers[i]
    if t != 0 or any(a > b for a, b in zip(digits, bound_vec)):
        raise AssertionError("odometer evaluation left an unrepresentable remainder")
    return tuple(digits)


def _biased_parameters(r: int, k: int):
    m = _pow_floor_log(r - 1, r**k)
    coeffs = binomialary_representation(r, k, (r - 1) ** m, bounds="extended")
    return m, coeffs


def biased_to_uniform(r: int, k: int) -> RestartSpec:
    """Extract (r-1)-ary uniform symbols from a coin with heads bias 1/r.

    Symbol 0 is heads (probability 1/r), symbol 1 tails. With (r-1)^m =
    sum a_i (r-1)^i, an exhaustive (r-1)-ary prefix code with a_i words of
    length m - i is dealt out to source words: the a_i lexicographically
    first k-flip words with exactly i tails (probability (r-1)^i / r^k each)
    receive distinct codewords of length m - i; every other word emits
    nothing.
    """
    if r < 3:
        raise ValueError("bias parameter r must be >= 3")
    if k < r - 2:
        raise ValueError("latency parameter must be at least r - 2")
    _check_materializable(2**k, "biased-to-uniform code")
    m, coeffs = _biased_parameters(r, k)
    lengths = []
    for i, a in enumerate(coeffs):
        lengths.extend([m - i] * a)
    buckets: dict = {}
    for cw in canonical_codewords(lengths, r - 1):
        buckets.setdefault(len(cw), deque()).append(cw)
    by_weight: dict = {}
    for w in itertools.product(range(2), repeat=k):
        by_weight.setdefault(sum(w), []).append(w)
    f = {w: EMPTY_WORD for ws in by_weight.values() for w in ws}
    for i in range(k, -1, -1):
        a = coeffs[i]
        if not a:
            continue
        candidates = by_weight.get(i, [])
        if a > len(candidates):
            raise AssertionError("more codewords of one weight than source words")
        bucket = buckets[m - i]
        for w in candidates[:a]:
            f[w] = bucket.popleft()
    code = PrefixCode(2, frozenset(f))
    mu = Dist.from_probs([Fraction(1, r), Fraction(r - 1, r)])
    return RestartSpec(code, f, mu, Dist.uniform(r - 1))


def biased_to_uniform_stats(r: int, k: int) -> EpochStats:
    """Exact moments of biased_to_uniform from the coefficient vector alone."""
    if r < 3:
        raise ValueError("bias parameter r must be >= 3")
    if k < r - 2:
        raise ValueError("latency parameter must be at least r - 2")
    m, coeffs = _biased_parameters(r, k)
    rk = r**k
    production = Fraction(0)
    success = Fraction(0)
    for i, a in enumerate(coeffs):
        if not a or m - i == 0:
            continue
        mass = Fraction(a * (r - 1) ** i, rk)
        production += mass * (m - i)
        success += mass
    mu = Dist.from_probs([Fraction(1, r), Fraction(r - 1, r)])
    return stats_from_moments(
        consumption=Fraction(k),
        production=production,
        success=success,
        max_consumption=k,
        mu=mu,
        nu=Dist.uniform(r - 1),
    )


def biased_information_bound(r: int) -> float:
    """Entropy ceiling on output symbols per flip for the 1/r-biased coin."""
    return math.log(r, r - 1) - (r - 1) / r


# ---------------------------------------------------------------------------
# qualifying latency search


def _interval_to_fractions(x) -> tuple:
    """Exact rational endpoints of an mpmath interval value."""
    from mpmath.libmp import to_rational

    lo_raw, hi_raw = x._mpi_
    lo_num, lo_den = to_rational(lo_raw)
    hi_num, hi_den = to_rational(hi_raw)
    return Fraction(int(lo_num), int(lo_den)), Fraction(int(hi_num), int(hi_den))


def dirichlet_qualifies(r: int, k: int) -> bool:
    """True when frac(k log_{r-1} r) < 1/(k+1), decided rigorously.

    The floor is exact (integer power comparison); the fractional-part
    inequality is settled by interval arithmetic whose precision doubles
    until the interval separates from the threshold, which terminates since
    log_{r-1} r is irrational.
    """
    if r < 3:
        raise ValueError("bias parameter r must be >= 3")
    if k < 1:
        raise ValueError("k must be >= 1")
    m = _pow_floor_log(r - 1, r**k)
    threshold = Fraction(1, k + 1)
    prec = 64
    saved = iv.prec
    try:
        while True:
            iv.prec = prec
            u = iv.log(r) / iv.log(r - 1)
            frac = k * u - m
            low, high = _interval_to_fractions(frac)
            if high < threshold:
                return True
            if low > threshold:
                return False
            prec *= 2
            if prec > 1 << 20:
                raise RuntimeError("could not separate fractional part from threshold")
    finally:
        iv.prec = saved


def find_dirichlet_k(r: int, k_min: int, k_max: int = 1000) -> int | None:
    """Smallest qualifying latency in [k_min, k_max], or None if none occurs.

    Qualifying latencies make the floor defect of k log_{r-1} r small enough
    that the biased-coin family loses only Theta(1/k) efficiency; the
    density lemma behind the construction guarantees infinitely many, so a
    None just means the window should be widened.
    """
    if k_min < max(1, r - 2):
        raise ValueError("k_min must be at least max(1, r - 2)")
    for k in range(k_min, k_max + 1):
        if dirichlet_qualifies(r, k):
            return k
    return None
