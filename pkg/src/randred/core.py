"""Alphabets, exact rational distributions, transducer protocols, prefix codes.

All probability accounting in this package is exact (`fractions.Fraction`);
floating point appears only in entropy values and bit-efficiency ratios,
which carry a documented 1e-9 tolerance.
"""

from __future__ import annotations

import itertools
import math
import random
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Iterator, NamedTuple

Symbol = int
Word = tuple  # tuple of symbols
StateId = Hashable

EMPTY_WORD: Word = ()

_DEFAULT_GLYPHS = "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


class UnknownGlyphError(ValueError):
    """A character in a symbol stream is not in the alphabet's glyph table."""

    def __init__(self, glyph: str, position: int):
        super().__init__(f"unknown glyph {glyph!r} at position {position}")
        self.glyph = glyph
        self.position = position


class KraftInfeasibleError(ValueError):
    """Requested codeword lengths violate the Kraft inequality."""


def is_prefix(prefix: Word, word: Word) -> bool:
    """True when `prefix` is an initial segment of `word` (including equality)."""
    return len(prefix) <= len(word) and word[: len(prefix)] == prefix


@dataclass(frozen=True)
class Alphabet:
    """Finite alphabet; symbols are the integers 0..size-1.

    `glyphs` optionally maps symbols to display characters for stream I/O.
    """

    size: int
    glyphs: str | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("alphabet size must be >= 1")
        if self.glyphs is not None:
            if len(self.glyphs) != self.size:
                raise ValueError("glyph table must supply one glyph per symbol")
            if len(set(self.glyphs)) != self.size:
                raise ValueError("glyph table must not repeat glyphs")

    def glyph_table(self) -> str:
        if self.glyphs is not None:
            return self.glyphs
        if self.size > len(_DEFAULT_GLYPHS):
            raise ValueError(
                f"no default glyphs for alphabets larger than {len(_DEFAULT_GLYPHS)}"
            )
        return _DEFAULT_GLYPHS[: self.size]

    def format_word(self, word: Word) -> str:
        table = self.glyph_table()
        return "".join(table[s] for s in word)

    def parse_word(self, text: str) -> Word:
        """Parse a glyph string into a word; positions in errors are 1-based."""
        table = self.glyph_table()
        index = {g: i for i, g in enumerate(table)}
        out = []
        for pos, ch in enumerate(text, 1):
            if ch not in index:
                raise UnknownGlyphError(ch, pos)
            out.append(index[ch])
        return tuple(out)

    def words(self, length: int) -> Iterator[Word]:
        """All words of the given length in lexicographic order."""
        return itertools.product(range(self.size), repeat=length)


@dataclass(frozen=True)
class Dist:
    """Probability distribution over an alphabet, with exact rational weights."""

    alphabet: Alphabet
    probs: tuple

    def __post_init__(self):
        probs = tuple(Fraction(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if len(probs) != self.alphabet.size:
            raise ValueError("need exactly one probability per symbol")
        if any(p < 0 for p in probs):
            raise ValueError("probabilities must be nonnegative")
        if sum(probs) != 1:
            raise ValueError(f"probabilities must sum to exactly 1, got {sum(probs)}")

    @classmethod
    def from_probs(cls, probs, glyphs: str | None = None) -> "Dist":
        probs = tuple(Fraction(p) for p in probs)
        return cls(Alphabet(len(probs), glyphs), probs)

    @classmethod
    def uniform(cls, n: int, glyphs: str | None = None) -> "Dist":
        return cls(Alphabet(n, glyphs), tuple(Fraction(1, n) for _ in range(n)))

    @property
    def size(self) -> int:
        return self.alphabet.size

    @property
    def strict(self) -> bool:
        return all(p > 0 for p in self.probs)

    def require_strict(self) -> None:
        if not self.strict:
            raise ValueError("distribution must give positive mass to every symbol")

    def common_denominator(self) -> int:
        return math.lcm(*(p.denominator for p in self.probs))

    def mass(self, word: Word) -> Fraction:
        """Product-measure mass of the cylinder of streams starting with `word`."""
        m = Fraction(1)
        for s in word:
            m *= self.probs[s]
        return m


def entropy(dist: Dist) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    total = 0.0
    for p in dist.probs:
        if p:
            q = float(p)
            total -= q * math.log2(q)
    return total


class Protocol:
    """Deterministic state transducer: each input symbol yields an output word.

    States are opaque hashable handles. `step_word` is the extension to input
    words (outputs concatenate); `run_stream` drives the machine from a
    sampler. Instances are immutable after construction and safe to share
    between threads; subclasses with lazy state caches either confine a run to
    one thread or keep their memo tables consistent under concurrent readers
    (plain dict insertions of immutable values).
    """

    def __init__(
        self,
        input_alphabet: Alphabet,
        output_alphabet: Alphabet,
        start: StateId,
        step_fn: Callable[[StateId, Symbol], tuple[StateId, Word]] | None = None,
    ):
        self.input_alphabet = input_alphabet
        self.output_alphabet = output_alphabet
        self.start = start
        self._step_fn = step_fn

    def step(self, state: StateId, symbol: Symbol) -> tuple[StateId, Word]:
        if self._step_fn is None:
            raise NotImplementedError("subclass must implement step")
        return self._step_fn(state, symbol)

    def step_word(self, state: StateId, word: Word) -> tuple[StateId, Word]:
        """Fold `step` over a word, concatenating emitted output."""
        out: list = []
        step = self.step
        for a in word:
            state, z = step(state, a)
            if z:
                out.extend(z)
        return state, tuple(out)

    def run_stream(self, source: "ExactSampler", n_inputs: int) -> Word:
        """Consume exactly `n_inputs` sampled symbols; return the output word."""
        out: list = []
        state = self.start
        step = self.step
        draw = source.draw
        for _ in range(n_inputs):
            state, z = step(state, draw())
            if z:
                out.extend(z)
        return tuple(out)

    def output_count(self, source: "ExactSampler", n_inputs: int) -> int:
        """Like `run_stream` but returns only the number of emitted symbols."""
        total = 0
        state = self.start
        step = self.step
        draw = source.draw
        for _ in range(n_inputs):
            state, z = step(state, draw())
            total += len(z)
        return total


def identity_protocol(alphabet: Alphabet) -> Protocol:
    """One-state echo protocol: every symbol is emitted unchanged."""
    return Protocol(alphabet, alphabet, 0, lambda s, a: (0, (a,)))


class ExactSampler:
    """I.i.d. symbol source distributed exactly as `dist`, with zero float bias.

    Uniform integers below the distribution's common denominator D are drawn
    by rejection from `random.Random(seed).getrandbits(D.bit_length())`
    (Mersenne Twister, stable across platforms), then mapped through exact
    cumulative numerators. Same seed, same stream. Single-owner mutable state:
    use one sampler per thread, one seed per parallel run.
    """

    def __init__(self, dist: Dist, seed: int):
        self.dist = dist
        self.seed = seed
        self.counter = 0
        self._rng = random.Random(seed)
        den = dist.common_denominator()
        self._den = den
        self._nbits = den.bit_length()
        cum = []
        acc = 0
        for p in dist.probs:
            acc += p.numerator * (den // p.denominator)
            cum.append(acc)
        self._cum = cum

    def draw(self) -> Symbol:
        getrandbits = self._rng.getrandbits
        den = self._den
        v = getrandbits(self._nbits)
        while v >= den:
            v = getrandbits(self._nbits)
        self.counter += 1
        return bisect_right(self._cum, v)


@dataclass(frozen=True)
class PrefixCode:
    """Finite set of pairwise prefix-incomparable words over a d-ary alphabet."""

    alphabet_size: int
    words: frozenset

    def __post_init__(self):
        words = frozenset(tuple(w) for w in self.words)
        object.__setattr__(self, "words", words)
        for w in words:
            if any(not (0 <= s < self.alphabet_size) for s in w):
                raise ValueError(f"codeword {w} uses symbols outside the alphabet")
        ordered = sorted(words)
        for a, b in zip(ordered, ordered[1:]):
            # in lexicographic order any prefix violation shows up adjacently
            if is_prefix(a, b):
                raise ValueError(f"not prefix-free: {a} is a prefix of {b}")

    def kraft_sum(self) -> Fraction:
        return kraft_sum((len(w) for w in self.words), self.alphabet_size)

    def is_exhaustive_under(self, dist: Dist) -> bool:
        """Exhaustive iff the codeword cylinders carry total mass 1 under `dist`."""
        return sum(dist.mass(w) for w in self.words) == 1


def kraft_sum(lengths, d: int) -> Fraction:
    """Exact Kraft sum over a multiset of codeword lengths."""
    if d < 2:
        raise ValueError("alphabet size must be >= 2")
    return sum((Fraction(1, d**n) for n in lengths), Fraction(0))


def canonical_codewords(lengths, d: int) -> list:
    """Codewords for the given length multiset, in canonical order.

    Lengths are served ascending; each codeword is the lexicographically
    smallest word of its length that is prefix-incomparable to all earlier
    ones. Returned in that generation order (ascending length, lexicographic
    within a length).
    """
    ordered = sorted(lengths)
    if kraft_sum(ordered, d) > 1:
        raise KraftInfeasibleError("codeword lengths exceed Kraft capacity")
    words = []
    value = 0
    prev = None
    for n in ordered:
        if prev is not None:
            value = (value + 1) * d ** (n - prev)
        digits = []
        v = value
        for _ in range(n):
            v, rem = divmod(v, d)
            digits.append(rem)
        words.append(tuple(reversed(digits)))
        prev = n
    return words


def assign_codewords(lengths, d: int) -> PrefixCode:
    """Canonical prefix code realizing a Kraft-feasible length multiset."""
    return PrefixCode(d, frozenset(canonical_codewords(lengths, d)))


class PcdResult(NamedTuple):
    """Result of a bounded minimal-preimage search.

    `complete` is False when live search branches remained at the depth cap,
    i.e. further minimal words (and their mass) may exist beyond it.
    """

    words: frozenset
    complete: bool


def prefix_code_of(
    protocol: Protocol, state: StateId, target: Word, depth_cap: int
) -> PcdResult:
    """All minimal input words from `state` whose output starts with `target`.

    Searches breadth-first up to `depth_cap` input symbols. The returned set
    is prefix-free: once a word's output covers `target`, its extensions are
    not explored.
    """
    target = tuple(target)
    if not target:
        return PcdResult(frozenset({EMPTY_WORD}), True)
    d = protocol.input_alphabet.size
    found = []
    frontier = [(state, EMPTY_WORD, EMPTY_WORD)]
    for _ in range(depth_cap):
        nxt = []
        for st, x, out in frontier:
            for a in range(d):
                st2, z = protocol.step(st, a)
                out2 = out + z if z else out
                x2 = x + (a,)
                if is_prefix(target, out2):
                    found.append(x2)
                elif is_prefix(out2, target):
                    nxt.append((st2, x2, out2))
                # otherwise the output diverged from target: dead branch
        frontier = nxt
        if not frontier:
            return PcdResult(frozenset(found), True)
    return PcdResult(frozenset(found), False)
