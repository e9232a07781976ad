"""Command-line interface.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage,
input, or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from typing import Sequence

import numpy as np

from .algebra import (
    Channel,
    decode_matrix,
    format_matrix,
    load_channel,
    opnorm,
    random_channel,
)
from .dilation import (
    TruncationParams,
    build_gns,
    verify_moment_formula,
    verify_standard_properties,
)
from .errors import CPDilationError, ParseError
from .expectation import Generator, gen_make, gram_matrix, key_lemma_step, random_generator
from .moments import bind_names, moment_eval, moment_normal_form, moment_render, parse_moment_literal
from .report import CheckRecord, Report
from .suite import load_config, run_suite
from .words import parse_index_tuple

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _load_matrices(path: str | None) -> dict[str, np.ndarray]:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: expected an object mapping names to matrices")
    return {name: decode_matrix(m) for name, m in raw.items()}


def _channel(args) -> Channel:
    if args.channel:
        return load_channel(args.channel)
    if args.d is None:
        raise UsageError("give --channel PATH or --d for a random channel")
    return random_channel(args.d, args.r, args.seed, args.unital, args.lam)


_BARE_NAME = re.compile(r'(?<![\w".])([A-Za-z_]\w*)')


def parse_generator(text: str, table: dict[str, np.ndarray], d: int) -> Generator:
    """Parse ``"(n1,...,nk) ; [M1, ..., Mk]"``.

    Each ``Mi`` is a matrix in the nested ``[re, im]`` encoding, a number
    (a multiple of the unit), or a name bound in ``table``.
    """
    if ";" not in text:
        raise ParseError(f"expected '(n1,...,nk) ; [M1, ..., Mk]', got {text!r}")
    head, tail = text.split(";", 1)
    idx = parse_index_tuple(head)
    try:
        items = json.loads(_BARE_NAME.sub(r'"\1"', tail.strip()))
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad tensor list {tail.strip()!r}: {exc}") from None
    if not isinstance(items, list):
        raise ParseError("tensor list must be in brackets")
    mats = []
    for item in items:
        if isinstance(item, list):
            mats.append(decode_matrix(item))
        else:
            mats.append(bind_names([str(item)], table, d)[0])
    return gen_make(idx, mats)


def _family(args, phi: Channel) -> list[Generator]:
    table = _load_matrices(args.matrices)
    if args.gen:
        return [parse_generator(text, table, phi.d) for text in args.gen]
    rng = np.random.default_rng(args.seed)
    return [random_generator(rng, phi.d, args.height, args.length) for _ in range(args.n)]


def _emit(report: Report, out: str | None) -> int:
    for rec in report.records:
        print(rec.summary_line())
    if out:
        report.write(out)
    if report.passed:
        return EXIT_OK
    print("failed: " + ", ".join(r.name for r in report.failures()), file=sys.stderr)
    return EXIT_FAIL


# -- subcommands -------------------------------------------------------------


def cmd_render(args) -> int:
    idx, names = parse_moment_literal(args.literal)
    print(moment_render(moment_normal_form(idx, names), names))
    return EXIT_OK


def cmd_eval(args) -> int:
    phi = _channel(args)
    idx, names = parse_moment_literal(args.literal)
    try:
        mats = bind_names(names, _load_matrices(args.matrices), phi.d)
    except KeyError as exc:
        raise ParseError(str(exc.args[0])) from None
    print(format_matrix(moment_eval(idx, mats, phi)))
    return EXIT_OK


def cmd_gram(args) -> int:
    phi = _channel(args)
    us = _family(args, phi)
    start = time.perf_counter()
    G, low = gram_matrix(us, phi)
    scale = max(1.0, opnorm(G))
    rec = CheckRecord(
        "gram_positivity",
        {"n": len(us), "d": phi.d, "min_eigenvalue": low},
        max(0.0, -low) / scale,
        args.tol,
        seed=args.seed,
        elapsed_ms=(time.perf_counter() - start) * 1e3,
    )
    if args.show:
        print(format_matrix(G))
    print(f"min_eigenvalue = {low:.17g}")
    return _emit(Report([rec]), args.out)


def cmd_factor(args) -> int:
    phi = _channel(args)
    us = _family(args, phi)
    start = time.perf_counter()
    res = key_lemma_step(us, phi)
    elapsed = (time.perf_counter() - start) * 1e3
    params = {"n": len(us), "d": phi.d, "max_height": res.max_height}
    heights = max(v.height for v in res.vs)
    report = Report(
        [
            CheckRecord("key_lemma_residual", params, res.residual, args.tol, seed=args.seed, elapsed_ms=elapsed),
            CheckRecord("key_lemma_height_drop", dict(params, max_v_height=heights),
                        float(res.max_height - heights), 1.0, seed=args.seed, lower_bound=True),
        ]
    )
    return _emit(report, args.out)


def cmd_dilate(args) -> int:
    phi = _channel(args)
    params = TruncationParams(args.N, args.L)
    start = time.perf_counter()
    model = build_gns(phi, params)
    build_ms = (time.perf_counter() - start) * 1e3
    print(f"basis size {model.basis_size}, quotient rank {model.rank}, build {build_ms:.0f} ms")
    tol = args.tol
    report = Report()
    report.add(CheckRecord("dilation_gram_psd", {"N": args.N, "L": args.L},
                           model.clip / max(1.0, opnorm(model.gram)), tol, seed=args.seed))
    report.add(verify_moment_formula(model, args.trials, args.seed, threshold=tol))
    if phi.is_unital(1e-10):
        for rec in verify_standard_properties(model, threshold=tol):
            rec.seed = args.seed
            report.add(rec)
    return _emit(report, args.out)


def cmd_suite(args) -> int:
    cfg = load_config(args.config)
    phi = cfg.channel.build()
    report = run_suite(cfg, phi)
    out = args.out or cfg.out
    code = _emit(report, out)
    status = "all checks passed" if report.passed else f"{len(report.failures())} check(s) failed"
    print(f"{len(report.records)} records: {status}")
    return code


# -- parser ------------------------------------------------------------------


def _channel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--channel", metavar="PATH", help="channel file (JSON with d and kraus)")
    p.add_argument("--d", type=int, help="dimension of a random channel")
    p.add_argument("--r", type=int, default=2, help="Kraus count of a random channel")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--unital", action="store_true", help="random channel with phi(e) = e")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5,
                   help="phi(e) = lambda e for a non-unital random channel")


def _family_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gen", action="append", metavar="'(n1,..);[M1,..]'",
                   help="generator literal; repeat for a family (default: random family)")
    p.add_argument("--matrices", metavar="PATH", help="JSON object of named matrices")
    p.add_argument("--n", type=int, default=10, help="size of a random family")
    p.add_argument("--height", type=int, default=3)
    p.add_argument("--length", type=int, default=3)
    p.add_argument("--out", metavar="PATH")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpdilation", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="normal form of a moment polynomial")
    p.add_argument("literal", help="'[n1,...,nk; a1,...,ak]'")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("eval", help="numeric value of a moment polynomial")
    _channel_flags(p)
    p.add_argument("--matrices", metavar="PATH", help="JSON object of named matrices")
    p.add_argument("literal")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gram", help="Gram positivity of a generator family")
    _channel_flags(p)
    _family_flags(p)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--show", action="store_true", help="print the Gram matrix")
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("factor", help="one height-reduction step of a generator family")
    _channel_flags(p)
    _family_flags(p)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_factor)

    p = sub.add_parser("dilate", help="build the truncated dilation and verify it")
    _channel_flags(p)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--L", type=int, default=2)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_dilate)

    p = sub.add_parser("suite", help="run the full property suite from a config file")
    p.add_argument("config", metavar="CONFIG")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, CPDilationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
