"""Restart protocols, sequential composition, serial chains, epoch statistics.

A restart protocol reads input until it matches a codeword of an exhaustive
prefix code, emits that codeword's output word, and returns to its start
state. Everything here keeps the per-iteration accounting (consumption,
production, success probability, latency) as exact rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

from .core import (
    Alphabet,
    Dist,
    EMPTY_WORD,
    PrefixCode,
    Protocol,
    StateId,
    Symbol,
    Word,
    entropy,
)


@dataclass(frozen=True, eq=False)
class RestartSpec:
    """Exhaustive prefix code plus output map, with input/output laws.

    `output_map` sends each codeword to the word emitted when it is matched;
    `nu` is the claimed per-symbol law of the emitted stream.
    """

    code: PrefixCode
    output_map: dict
    mu: Dist
    nu: Dist

    def __post_init__(self):
        self.mu.require_strict()
        if self.code.alphabet_size != self.mu.size:
            raise ValueError("code alphabet and input distribution disagree")
        if set(self.output_map) != self.code.words:
            raise ValueError("output map must be total on the code, and only on it")
        for out in self.output_map.values():
            if any(not (0 <= s < self.nu.size) for s in out):
                raise ValueError("output word uses symbols outside the target alphabet")
        if sum(self.mu.mass(x) for x in self.code.words) != 1:
            raise ValueError("code is not exhaustive: codeword mass sums below 1")

    def word_law(self) -> dict:
        """Exact distribution of the word emitted by one iteration."""
        law: dict = {}
        for x in self.code.words:
            w = self.output_map[x]
            law[w] = law.get(w, Fraction(0)) + self.mu.mass(x)
        return law


@dataclass(frozen=True)
class EpochStats:
    """Exact per-iteration accounting for a restart protocol.

    `latency` is consumption / success (expected input symbols per epoch,
    i.e. until at least one output symbol appears); None when the protocol
    never emits. `max_consumption` is in input-symbol counts, which is what
    the serial growth condition compares (entropy factors cancel there).
    """

    consumption: Fraction
    production: Fraction
    success: Fraction
    latency: Fraction | None
    max_consumption: int
    efficiency_bits: float

    @property
    def productive(self) -> bool:
        return self.success > 0


def stats_from_moments(
    consumption: Fraction,
    production: Fraction,
    success: Fraction,
    max_consumption: int,
    mu: Dist,
    nu: Dist,
) -> EpochStats:
    """Assemble EpochStats from exact moments, deriving latency and efficiency."""
    h_in = entropy(mu)
    if h_in == 0.0:
        raise ValueError("input distribution carries no entropy")
    latency = consumption / success if success > 0 else None
    efficiency = float(production / consumption) * entropy(nu) / h_in
    return EpochStats(
        consumption=consumption,
        production=production,
        success=success,
        latency=latency,
        max_consumption=max_consumption,
        efficiency_bits=efficiency,
    )


def epoch_stats(spec: RestartSpec) -> EpochStats:
    """Exact per-iteration moments of a restart specification."""
    consumption = Fraction(0)
    production = Fraction(0)
    success = Fraction(0)
    longest = 0
    for x in spec.code.words:
        mass = spec.mu.mass(x)
        consumption += mass * len(x)
        out = spec.output_map[x]
        if out:
            production += mass * len(out)
            success += mass
        longest = max(longest, len(x))
    return stats_from_moments(
        consumption, production, success, longest, spec.mu, spec.nu
    )


class RestartProtocol(Protocol):
    """Trie-backed protocol of a RestartSpec.

    States are integers indexing the proper prefixes of codewords (0 is the
    empty prefix and start state). Completing a codeword emits its output and
    returns to state 0.
    """

    def __init__(self, spec: RestartSpec):
        super().__init__(spec.mu.alphabet, spec.nu.alphabet, 0)
        self.spec = spec
        d = spec.mu.size
        table: list = [[None] * d]
        for word in sorted(spec.code.words):
            node = 0
            for sym in word[:-1]:
                entry = table[node][sym]
                if entry is None:
                    table.append([None] * d)
                    entry = (len(table) - 1, EMPTY_WORD)
                    table[node][sym] = entry
                node = entry[0]
            table[node][word[-1]] = (0, spec.output_map[word])
        for node, row in enumerate(table):
            if any(entry is None for entry in row):
                raise ValueError("code is not exhaustive: transducer has gaps")
        self._table = table

    @property
    def num_states(self) -> int:
        return len(self._table)

    def step(self, state: StateId, symbol: Symbol) -> tuple[StateId, Word]:
        return self._table[state][symbol]


def build_restart(spec: RestartSpec) -> RestartProtocol:
    """Protocol that repeatedly matches one codeword and emits its output."""
    return RestartProtocol(spec)


class ComposedProtocol(Protocol):
    """Sequential composition: feed every output word of `first` into `second`.

    States are pairs; only reachable pairs are touched, and step results are
    memoized since the reachable product space is typically much smaller than
    the full product.
    """

    def __init__(self, first: Protocol, second: Protocol):
        if first.output_alphabet.size != second.input_alphabet.size:
            raise ValueError(
                "output alphabet of the first protocol must match the "
                "input alphabet of the second"
            )
        super().__init__(
            first.input_alphabet, second.output_alphabet, (first.start, second.start)
        )
        self.first = first
        self.second = second
        self._memo: dict = {}

    def step(self, state: StateId, symbol: Symbol) -> tuple[StateId, Word]:
        key = (state, symbol)
        hit = self._memo.get(key)
        if hit is None:
            s, t = state
            u, y = self.first.step(s, symbol)
            v, z = self.second.step_word(t, y)
            hit = ((u, v), z)
            self._memo[key] = hit
        return hit


def compose(first: Protocol, second: Protocol) -> ComposedProtocol:
    """One step of `first`, then `second` consumes whatever it emitted."""
    return ComposedProtocol(first, second)


class SerialChain:
    """Sequence of restart stages run one iteration each, in order.

    `components` is either a sequence of RestartSpec or a zero-based factory
    index -> RestartSpec. A finite chain repeats its last component forever,
    which keeps the combined protocol total and makes a constant chain
    degenerate to the ordinary restart protocol. An optional `stats` factory
    supplies exact EpochStats without materializing the component, for
    families whose codes are too large to enumerate at high latency index.
    """

    def __init__(
        self,
        components: Sequence[RestartSpec] | Callable[[int], RestartSpec],
        length: int | None = None,
        stats: Callable[[int], EpochStats] | None = None,
    ):
        if callable(components):
            self._factory = components
            self.length = length
        else:
            comps = list(components)
            if not comps:
                raise ValueError("serial chain needs at least one component")
            if length is not None and length != len(comps):
                raise ValueError("length disagrees with the component sequence")
            self._factory = comps.__getitem__
            self.length = len(comps)
        if self.length is not None and self.length < 1:
            raise ValueError("serial chain needs at least one component")
        self._stats_factory = stats
        self._specs: dict = {}
        self._stats: dict = {}

    def _clamp(self, i: int) -> int:
        if i < 0:
            raise IndexError("chain index must be nonnegative")
        if self.length is not None and i >= self.length:
            return self.length - 1
        return i

    def component(self, i: int) -> RestartSpec:
        i = self._clamp(i)
        if i not in self._specs:
            self._specs[i] = self._factory(i)
        return self._specs[i]

    def stats(self, i: int) -> EpochStats:
        i = self._clamp(i)
        if i not in self._stats:
            if self._stats_factory is not None:
                self._stats[i] = self._stats_factory(i)
            else:
                self._stats[i] = epoch_stats(self.component(i))
        return self._stats[i]

    @property
    def mu(self) -> Dist:
        return self.component(0).mu

    @property
    def nu(self) -> Dist:
        return self.component(0).nu


class SerialProtocol(Protocol):
    """Runs one iteration of each chain component, then moves to the next.

    States are (component index, trie node); component protocols materialize
    lazily on first entry.
    """

    def __init__(self, chain: SerialChain):
        first = chain.component(0)
        super().__init__(first.mu.alphabet, first.nu.alphabet, (0, 0))
        self.chain = chain
        self._protocols: dict = {}

    def _stage(self, i: int) -> RestartProtocol:
        proto = self._protocols.get(i)
        if proto is None:
            spec = self.chain.component(i)
            if spec.mu != self.chain.mu or spec.nu != self.chain.nu:
                raise ValueError("all chain components must share mu and nu")
            proto = build_restart(spec)
            self._protocols[i] = proto
        return proto

    def step(self, state: StateId, symbol: Symbol) -> tuple[StateId, Word]:
        i, node = state
        node2, out = self._stage(i).step(node, symbol)
        if node2 == 0:
            # completed one iteration of component i; advance (last one repeats)
            j = i + 1
            if self.chain.length is not None and j >= self.chain.length:
                j = self.chain.length - 1
            return ((j, 0), out)
        return ((i, node2), out)


def build_serial(chain: SerialChain) -> SerialProtocol:
    return SerialProtocol(chain)


class SerialEfficiency(NamedTuple):
    ratio: Fraction
    bits: float


def serial_partial_efficiency(chain: SerialChain, n: int) -> SerialEfficiency:
    """Partial production/consumption ratio over the first n components.

    Exact rational, plus the entropy-weighted value in bits. The serial
    protocol's long-run efficiency is the limit of these ratios.
    """
    if n < 1:
        raise ValueError("need at least one component")
    total_p = Fraction(0)
    total_c = Fraction(0)
    for i in range(n):
        st = chain.stats(i)
        total_p += st.production
        total_c += st.consumption
    ratio = total_p / total_c
    bits = float(ratio) * entropy(chain.nu) / entropy(chain.mu)
    return SerialEfficiency(ratio, bits)


def check_growth_condition(chain: SerialChain, n: int) -> list:
    """Ratios max-consumption(i) / total consumption before i, for i = 1..n-1.

    The serial efficiency theorem needs these to vanish; the caller inspects
    the decay. Exact rationals (symbol counts on both sides).
    """
    if n < 2:
        raise ValueError("need at least two components to form a ratio")
    ratios = []
    prefix = chain.stats(0).consumption
    for i in range(1, n):
        st = chain.stats(i)
        ratios.append(Fraction(st.max_consumption) / prefix)
        prefix += st.consumption
    return ratios
