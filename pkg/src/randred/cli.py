"""Command-line front end: convert streams, analyze, sweep, verify.

Protocols are described by JSON spec files (rationals always as "num/den"
strings, never floats):

    {"family": "uniform_uniform",  "d": 10, "c": 2, "k": 1}
    {"family": "uniform_rational", "d": 4, "numerators": [1, 3], "k": 2}
    {"family": "uniform_arbitrary","d": 4, "target": ["1/3", "2/3"], "k": 1}
    {"family": "arbitrary_uniform","source": ["1/3", "2/3"], "c": 2, "k": 3}
    {"family": "biased_uniform",   "r": 3, "k": 2}
    {"family": "explicit",         "mu": [...], "nu": [...],
     "in_glyphs": "01", "out_glyphs": "ab",          # optional
     "table": [{"in": "0", "out": "a"}, ...]}
    {"family": "compose",          "first": {...}, "second": {...}}
    {"family": "serial",           "components": [{...}, ...]}

Exit codes: 0 success/pass, 1 usage or spec error, 2 input-data error,
3 verification failure. Identical flags and seeds give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .core import Alphabet, Dist, Protocol, PrefixCode, UnknownGlyphError, entropy, ExactSampler
from .combinators import (
    EpochStats,
    RestartSpec,
    SerialChain,
    build_restart,
    build_serial,
    compose,
    epoch_stats,
)
from .reductions import (
    ResidualCascadeProtocol,
    arbitrary_to_uniform,
    arbitrary_to_uniform_stats,
    biased_information_bound,
    biased_to_uniform,
    biased_to_uniform_stats,
    uniform_to_arbitrary,
    uniform_to_rational,
    uniform_to_rational_stats,
    uniform_to_uniform,
    uniform_to_uniform_stats,
)
from .analysis import (
    chi_square_prefixes,
    verify_reduction_exact,
    verify_reduction_lazy,
)

SWEEP_COLUMNS = [
    "k",
    "c",
    "p",
    "p_succ",
    "latency",
    "m",
    "efficiency_bits",
    "loss_times_k",
    "info_bound",
    "bound_gap_scaled",
    "error",
]


class SpecFileError(ValueError):
    """Invalid protocol spec document; carries the JSON path of the problem."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep exit-code contract: usage errors are 1
        raise _UsageError(message)


def _fraction(value, path: str) -> Fraction:
    if isinstance(value, bool) or isinstance(value, float):
        raise SpecFileError(path, "rationals must be integers or 'num/den' strings")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            if "." in value or "e" in value.lower():
                raise ValueError
            return Fraction(value)
        except (ValueError, ZeroDivisionError):
            raise SpecFileError(path, f"cannot parse rational {value!r}") from None
    raise SpecFileError(path, "rationals must be integers or 'num/den' strings")


def _format_fraction(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def _int(doc: dict, key: str, path: str) -> int:
    if key not in doc:
        raise SpecFileError(f"{path}.{key}", "missing required field")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecFileError(f"{path}.{key}", "must be an integer")
    return value


def _dist(doc: dict, key: str, path: str, glyphs: str | None = None) -> Dist:
    if key not in doc:
        raise SpecFileError(f"{path}.{key}", "missing required field")
    raw = doc[key]
    if not isinstance(raw, list) or not raw:
        raise SpecFileError(f"{path}.{key}", "must be a nonempty list of rationals")
    probs = [_fraction(v, f"{path}.{key}[{i}]") for i, v in enumerate(raw)]
    try:
        return Dist.from_probs(probs, glyphs)
    except ValueError as e:
        raise SpecFileError(f"{path}.{key}", str(e)) from None


@dataclass
class BuiltSpec:
    """A loaded spec document: kind, laws, and a lazily built protocol."""

    kind: str  # "restart" | "lazy" | "compose" | "serial"
    family: str
    mu: Dist
    nu: Dist
    restart: RestartSpec | None
    factory: Callable[[], Protocol]
    _protocol: Protocol | None = field(default=None, repr=False)

    def protocol(self) -> Protocol:
        if self._protocol is None:
            self._protocol = self.factory()
        return self._protocol


def _build_explicit(doc: dict, path: str) -> RestartSpec:
    in_glyphs = doc.get("in_glyphs")
    out_glyphs = doc.get("out_glyphs")
    mu = _dist(doc, "mu", path, in_glyphs)
    nu = _dist(doc, "nu", path, out_glyphs)
    rows = doc.get("table")
    if not isinstance(rows, list) or not rows:
        raise SpecFileError(f"{path}.table", "must be a nonempty list")
    table = {}
    for i, row in enumerate(rows):
        row_path = f"{path}.table[{i}]"
        if not isinstance(row, dict) or "in" not in row or "out" not in row:
            raise SpecFileError(row_path, "each row needs 'in' and 'out' strings")
        try:
            codeword = mu.alphabet.parse_word(row["in"])
            output = nu.alphabet.parse_word(row["out"])
        except UnknownGlyphError as e:
            raise SpecFileError(row_path, str(e)) from None
        if codeword in table:
            raise SpecFileError(row_path, f"duplicate codeword {row['in']!r}")
        table[codeword] = output
    try:
        code = PrefixCode(mu.size, frozenset(table))
        return RestartSpec(code, table, mu, nu)
    except ValueError as e:
        raise SpecFileError(path, str(e)) from None


def build_from_document(doc, path: str = "$") -> BuiltSpec:
    """Construct the protocol described by a spec document."""
    if not isinstance(doc, dict):
        raise SpecFileError(path, "spec must be a JSON object")
    family = doc.get("family")
    if family == "uniform_uniform":
        spec = _wrap(
            lambda: uniform_to_uniform(
                _int(doc, "d", path), _int(doc, "c", path), _int(doc, "k", path)
            ),
            path,
        )
        return _restart_built(family, spec)
    if family == "uniform_rational":
        numerators = doc.get("numerators")
        if not isinstance(numerators, list):
            raise SpecFileError(f"{path}.numerators", "must be a list of integers")
        spec = _wrap(
            lambda: uniform_to_rational(
                _int(doc, "d", path), numerators, _int(doc, "k", path)
            ),
            path,
        )
        return _restart_built(family, spec)
    if family == "arbitrary_uniform":
        source = _dist(doc, "source", path)
        spec = _wrap(
            lambda: arbitrary_to_uniform(
                source, _int(doc, "c", path), _int(doc, "k", path)
            ),
            path,
        )
        return _restart_built(family, spec)
    if family == "biased_uniform":
        spec = _wrap(
            lambda: biased_to_uniform(_int(doc, "r", path), _int(doc, "k", path)),
            path,
        )
        return _restart_built(family, spec)
    if family == "explicit":
        return _restart_built(family, _build_explicit(doc, path))
    if family == "uniform_arbitrary":
        target = _dist(doc, "target", path)
        protocol = _wrap(
            lambda: uniform_to_arbitrary(
                _int(doc, "d", path), target, _int(doc, "k", path)
            ),
            path,
        )
        return BuiltSpec(
            "lazy", family, Dist.uniform(protocol.d), target, None, lambda: protocol
        )
    if family == "compose":
        first = build_from_document(doc.get("first"), f"{path}.first")
        second = build_from_document(doc.get("second"), f"{path}.second")
        factory = lambda: compose(first.protocol(), second.protocol())
        return BuiltSpec("compose", family, first.mu, second.nu, None, factory)
    if family == "serial":
        raw = doc.get("components")
        if not isinstance(raw, list) or not raw:
            raise SpecFileError(f"{path}.components", "must be a nonempty list")
        parts = [
            build_from_document(item, f"{path}.components[{i}]")
            for i, item in enumerate(raw)
        ]
        specs = []
        for i, part in enumerate(parts):
            if part.kind != "restart":
                raise SpecFileError(
                    f"{path}.components[{i}]", "serial components must be restart specs"
                )
            specs.append(part.restart)
        chain = SerialChain(specs)
        return BuiltSpec(
            "serial", family, specs[0].mu, specs[0].nu, None, lambda: build_serial(chain)
        )
    raise SpecFileError(f"{path}.family", f"unknown family {family!r}")


def _wrap(builder, path: str):
    try:
        return builder()
    except ValueError as e:
        raise SpecFileError(path, str(e)) from None


def _restart_built(family: str, spec: RestartSpec) -> BuiltSpec:
    return BuiltSpec("restart", family, spec.mu, spec.nu, spec, lambda: build_restart(spec))


def load_spec(path: str) -> BuiltSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise SpecFileError("$", f"invalid JSON: {e}") from None
    return build_from_document(doc)


def spec_to_document(spec: RestartSpec) -> dict:
    """Serialize a finite restart spec to an 'explicit' document.

    Reloading yields a protocol with an identical step table.
    """
    in_alpha = spec.mu.alphabet
    out_alpha = spec.nu.alphabet
    return {
        "family": "explicit",
        "mu": [_format_fraction(p) for p in spec.mu.probs],
        "nu": [_format_fraction(p) for p in spec.nu.probs],
        "in_glyphs": in_alpha.glyph_table(),
        "out_glyphs": out_alpha.glyph_table(),
        "table": [
            {
                "in": in_alpha.format_word(x),
                "out": out_alpha.format_word(spec.output_map[x]),
            }
            for x in sorted(spec.code.words)
        ],
    }


# ---------------------------------------------------------------------------
# subcommands


def _cmd_convert(args) -> int:
    built = load_spec(args.spec)
    protocol = built.protocol()
    consumed = 0
    if args.stdin_symbols:
        table = built.mu.alphabet.glyph_table()
        index = {g: i for i, g in enumerate(table)}
        state = protocol.start
        out: list = []
        for pos, ch in enumerate(sys.stdin.read(), 1):
            if ch.isspace():
                continue
            sym = index.get(ch)
            if sym is None:
                raise UnknownGlyphError(ch, pos)
            state, z = protocol.step(state, sym)
            consumed += 1
            if z:
                out.extend(z)
        output = tuple(out)
    else:
        if args.seed is None:
            raise _UsageError("convert needs --stdin-symbols or --seed")
        sampler = ExactSampler(built.mu, args.seed)
        output = protocol.run_stream(sampler, args.count)
        consumed = args.count
    sys.stdout.write(built.nu.alphabet.format_word(output) + "\n")
    if args.stats:
        print(f"consumed={consumed} produced={len(output)}", file=sys.stderr)
    return 0


def _stats_payload(family: str, stats: EpochStats, mu: Dist, nu: Dist) -> dict:
    return {
        "family": family,
        "c": _format_fraction(stats.consumption),
        "p": _format_fraction(stats.production),
        "p_succ": _format_fraction(stats.success),
        "latency": None if stats.latency is None else _format_fraction(stats.latency),
        "m": stats.max_consumption,
        "H_mu": round(entropy(mu), 12),
        "H_nu": round(entropy(nu), 12),
        "efficiency_bits": round(stats.efficiency_bits, 12),
        "productive": stats.productive,
    }


def _cmd_analyze(args) -> int:
    built = load_spec(args.spec)
    if built.kind != "restart":
        raise SpecFileError("$.family", "analyze needs a finite restart spec")
    stats = epoch_stats(built.restart)
    payload = _stats_payload(built.family, stats, built.mu, built.nu)
    sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
    return 0


def _sweep_row(args, k: int) -> dict:
    row = {col: "" for col in SWEEP_COLUMNS}
    row["k"] = str(k)
    try:
        if args.family == "uniform_uniform":
            stats = uniform_to_uniform_stats(args.d, args.c, k)
            trend_loss = True
            bound = None
        elif args.family == "uniform_rational":
            stats = uniform_to_rational_stats(args.d, args.numerators, k)
            trend_loss = True
            bound = None
        elif args.family == "arbitrary_uniform":
            source = Dist.from_probs(args.source)
            stats = arbitrary_to_uniform_stats(source, args.c, k)
            trend_loss = False
            bound = entropy(source) / math.log2(args.c)
        else:  # biased_uniform
            stats = biased_to_uniform_stats(args.r, k)
            trend_loss = True
            bound = biased_information_bound(args.r)
    except ValueError as e:
        row["error"] = str(e)
        return row
    row["c"] = _format_fraction(stats.consumption)
    row["p"] = _format_fraction(stats.production)
    row["p_succ"] = _format_fraction(stats.success)
    row["latency"] = "" if stats.latency is None else _format_fraction(stats.latency)
    row["m"] = str(stats.max_consumption)
    row["efficiency_bits"] = f"{stats.efficiency_bits:.9f}"
    if trend_loss:
        row["loss_times_k"] = f"{(1.0 - stats.efficiency_bits) * k:.9f}"
    if bound is not None:
        row["info_bound"] = f"{bound:.9f}"
    if args.family == "arbitrary_uniform" and k >= 2:
        ratio = float(stats.production / stats.consumption)
        row["bound_gap_scaled"] = f"{(bound - ratio) * k / math.log2(k):.9f}"
    return row


def _cmd_sweep(args) -> int:
    needs = {
        "uniform_uniform": ("d", "c"),
        "uniform_rational": ("d", "numerators"),
        "arbitrary_uniform": ("source", "c"),
        "biased_uniform": ("r",),
    }
    if args.family not in needs:
        raise _UsageError(f"unknown sweep family {args.family!r}")
    for name in needs[args.family]:
        if getattr(args, name, None) is None:
            raise _UsageError(f"family {args.family} requires --{name.replace('_', '-')}")
    rows = [_sweep_row(args, k) for k in range(args.k_from, args.k_to + 1)]
    if args.format == "json":
        sys.stdout.write(json.dumps({"rows": rows}, sort_keys=True) + "\n")
    else:
        writer = csv.DictWriter(sys.stdout, SWEEP_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return 0


def _cmd_verify(args) -> int:
    built = load_spec(args.spec)
    if args.exact is not None:
        if built.kind != "restart":
            raise SpecFileError("$.family", "--exact needs a finite restart spec")
        report = verify_reduction_exact(built.restart, args.exact)
        payload = {
            "mode": "exact",
            "prefix_len": args.exact,
            "max_deviation": _format_fraction(report.max_deviation),
            "complete": report.complete,
            "pass": report.exact_pass,
        }
        sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
        return 0 if report.exact_pass else 3
    if args.chi2 is not None:
        prefix_len, trials, seed = args.chi2
        result = chi_square_prefixes(
            built.protocol(), built.mu, built.nu, prefix_len, trials, seed
        )
        payload = {
            "mode": "chi2",
            "prefix_len": prefix_len,
            "trials": trials,
            "seed": seed,
            "statistic": round(result.statistic, 6),
            "dof": result.dof,
            "threshold": round(result.threshold, 6),
            "pass": result.passed,
        }
        sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
        return 0 if result.passed else 3
    # --lazy
    if built.kind != "lazy":
        raise SpecFileError("$.family", "--lazy needs a uniform_arbitrary spec")
    protocol = built.protocol()
    report = verify_reduction_lazy(protocol, args.prefix_len, args.lazy)
    if report.complete:
        passed = report.max_deviation == 0
    else:
        passed = float(report.bound) <= args.tolerance
    payload = {
        "mode": "lazy",
        "depth": args.lazy,
        "prefix_len": args.prefix_len,
        "max_deviation": _format_fraction(report.max_deviation),
        "bound": _format_fraction(report.bound),
        "complete": report.complete,
        "pass": passed,
    }
    sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
    return 0 if passed else 3


def _build_parser() -> _Parser:
    parser = _Parser(prog="randred", description="entropy-conserving stream reductions")
    sub = parser.add_subparsers(dest="command", required=True)

    p_convert = sub.add_parser("convert", help="transform a symbol stream")
    p_convert.add_argument("spec")
    p_convert.add_argument("-n", "--count", type=int, default=1000,
                           help="input symbols to sample with --seed")
    p_convert.add_argument("--seed", type=int, help="sample inputs internally")
    p_convert.add_argument("--stdin-symbols", action="store_true",
                           help="read input glyphs from stdin")
    p_convert.add_argument("--stats", action="store_true",
                           help="print consumption/production to stderr")
    p_convert.set_defaults(func=_cmd_convert)

    p_analyze = sub.add_parser("analyze", help="exact per-iteration statistics")
    p_analyze.add_argument("spec")
    p_analyze.set_defaults(func=_cmd_analyze)

    p_sweep = sub.add_parser("sweep", help="statistics across a latency range")
    p_sweep.add_argument("--family", required=True)
    p_sweep.add_argument("--k-from", type=int, required=True)
    p_sweep.add_argument("--k-to", type=int, required=True)
    p_sweep.add_argument("--d", type=int)
    p_sweep.add_argument("--c", type=int)
    p_sweep.add_argument("--r", type=int)
    p_sweep.add_argument("--numerators", type=_int_list)
    p_sweep.add_argument("--source", type=_fraction_list)
    p_sweep.add_argument("--format", choices=["csv", "json"], default="csv")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="check the reduction law")
    p_verify.add_argument("spec")
    mode = p_verify.add_mutually_exclusive_group(required=True)
    mode.add_argument("--exact", type=int, metavar="L",
                      help="exact verification up to prefix length L")
    mode.add_argument("--chi2", type=int, nargs=3, metavar=("L", "TRIALS", "SEED"),
                      help="chi-squared test on length-L prefixes")
    mode.add_argument("--lazy", type=int, metavar="DEPTH",
                      help="staged verification descending DEPTH residual stages")
    p_verify.add_argument("--prefix-len", type=int, default=3,
                          help="prefix length for --lazy (default 3)")
    p_verify.add_argument("--tolerance", type=float, default=1e-6,
                          help="acceptable residual bound for --lazy")
    p_verify.set_defaults(func=_cmd_verify)
    return parser


def _int_list(text: str):
    return [int(part) for part in text.split(",") if part]


def _fraction_list(text: str):
    return [Fraction(part) for part in text.split(",") if part]


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except UnknownGlyphError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SpecFileError as e:
        print(f"spec error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
