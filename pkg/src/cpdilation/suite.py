"""Registered property checks run by ``cpdilation suite``.

Randomness is derived from the single config seed: check number ``c``
(0-based, in registration order) runs trial ``t`` with seed
``seed + 1000 * c + t``, so any failing trial can be replayed alone.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field
from os import PathLike
from typing import Callable

import numpy as np

from .algebra import (
    Channel,
    channel_from_kraus,
    load_channel,
    opnorm,
    psd_check,
    random_channel,
    random_element,
)
from .dilation import (
    TruncationParams,
    build_gns,
    verify_adjoint_rule,
    verify_moment_formula,
    verify_product_rule,
    verify_standard_properties,
    verify_truncation_consistency,
)
from .errors import ParseError
from .expectation import (
    expectation_E0,
    gen_make,
    gram_matrix,
    key_lemma_step,
    random_generator,
    unit_generator,
)
from .moments import (
    moment_eval,
    moment_eval_split,
    moment_normal_form,
    moment_render,
    moment_symmetry_residual,
    zero_positions,
)
from .report import CheckRecord, Report
from .words import iter_words

__all__ = ["SuiteConfig", "load_config", "run_suite", "CHECKS"]

SEED_STRIDE = 1000


@dataclass
class ChannelSpec:
    d: int = 2
    r: int = 2
    seed: int = 7
    unital: bool = True
    lam: float = 1.0
    path: str | None = None

    def build(self) -> Channel:
        if self.path is not None:
            return load_channel(self.path)
        return random_channel(self.d, self.r, self.seed, self.unital, self.lam)


@dataclass
class SuiteConfig:
    seed: int = 0
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    truncation: TruncationParams = field(default_factory=TruncationParams)
    consistency: TruncationParams = field(default_factory=lambda: TruncationParams(1, 2))
    seeds: int = 50
    trials: int = 200
    dilation_trials: int = 100
    unital_seeds: int = 20
    family_size: int = 20
    tolerances: dict[str, float] = field(default_factory=dict)
    out: str | None = None
    _models: dict = field(default_factory=dict, repr=False, compare=False)

    def model(self, phi: Channel):
        """GNS model of ``phi`` at the configured truncation, built once per run."""
        key = id(phi)
        if key not in self._models:
            self._models[key] = (phi, build_gns(phi, self.truncation))
        return self._models[key][1]

    def tol(self, name: str) -> float:
        return self.tolerances.get(name, DEFAULT_TOLERANCES[name])

    def __post_init__(self):
        for name, value in self.tolerances.items():
            if name not in DEFAULT_TOLERANCES:
                raise ParseError(f"unknown tolerance {name!r}")
            if not (isinstance(value, (int, float)) and value > 0):
                raise ParseError(f"tolerance {name!r} must be positive, got {value!r}")
        for name in ("seeds", "trials", "dilation_trials", "unital_seeds", "family_size"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ParseError(f"{name} must be a positive integer, got {value!r}")


DEFAULT_TOLERANCES = {
    "exact": 1e-12,
    "moment": 1e-10,
    "gram_psd": 1e-8,
    "key_lemma": 1e-9,
    "dilation": 1e-8,
    "closed_form": 1e-12,
}


def load_config(path: str | PathLike) -> SuiteConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from None
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> SuiteConfig:
    if not isinstance(raw, dict):
        raise ParseError("config must be an object")
    known = {
        "seed", "channel", "truncation", "consistency", "seeds", "trials",
        "dilation_trials", "unital_seeds", "family_size", "tolerances", "out",
    }
    extra = set(raw) - known
    if extra:
        raise ParseError(f"unknown config fields: {sorted(extra)}")
    ch = raw.get("channel", {})
    if isinstance(ch, str):
        spec = ChannelSpec(path=ch)
    elif isinstance(ch, dict):
        if "path" in ch:
            spec = ChannelSpec(path=ch["path"])
        else:
            rnd = ch.get("random", ch)
            spec = ChannelSpec(
                d=int(rnd.get("d", 2)),
                r=int(rnd.get("r", 2)),
                seed=int(rnd.get("seed", 7)),
                unital=bool(rnd.get("unital", True)),
                lam=float(rnd.get("lambda", 1.0)),
            )
    else:
        raise ParseError("channel must be a path or an object")
    try:
        trunc = TruncationParams(**raw.get("truncation", {}))
        cons = TruncationParams(**raw.get("consistency", {"N": 1, "L": 2}))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad truncation parameters: {exc}") from None
    return SuiteConfig(
        seed=int(raw.get("seed", 0)),
        channel=spec,
        truncation=trunc,
        consistency=cons,
        seeds=raw.get("seeds", 50),
        trials=raw.get("trials", 200),
        dilation_trials=raw.get("dilation_trials", 100),
        unital_seeds=raw.get("unital_seeds", 20),
        family_size=raw.get("family_size", 20),
        tolerances=dict(raw.get("tolerances", {})),
        out=raw.get("out"),
    )


# -- checks ------------------------------------------------------------------

CheckFn = Callable[[SuiteConfig, Channel, int], "CheckRecord | list[CheckRecord]"]
CHECKS: list[tuple[str, CheckFn]] = []


def check(name: str):
    def register(fn: CheckFn) -> CheckFn:
        CHECKS.append((name, fn))
        return fn

    return register


def _small_words():
    return list(iter_words(3, 3))


@check("words_associativity")
def _words_assoc(cfg, phi, base):
    words = _small_words()
    bad = sum(1 for m, n, p in itertools.product(words, repeat=3) if (m * n) * p != m * (n * p))
    return CheckRecord("words_associativity", {"max_entry": 3, "max_length": 3}, float(bad), 0.5)


@check("words_star_antihomomorphism")
def _words_star(cfg, phi, base):
    words = _small_words()
    bad = sum(1 for m, n in itertools.product(words, repeat=2) if (m * n).star != n.star * m.star)
    bad += sum(1 for m in words if m.star.star != m)
    return CheckRecord("words_star_antihomomorphism", {"max_entry": 3, "max_length": 3}, float(bad), 0.5)


@check("words_shift_endomorphism")
def _words_shift(cfg, phi, base):
    words = _small_words()
    bad = 0
    for m, n in itertools.product(words, repeat=2):
        for t in range(3):
            bad += (m * n).shift(t) != m.shift(t) * n.shift(t)
            bad += m.star.shift(t) != m.shift(t).star
            bad += (m * n).height > max(m.height, n.height)
            bad += m.shift(t).height != m.height + t
    return CheckRecord("words_shift_endomorphism", {"max_entry": 3, "max_length": 3}, float(bad), 0.5)


@check("channel_positivity")
def _channel_pos(cfg, phi, base):
    worst = 0.0
    for t in range(cfg.trials):
        rng = np.random.default_rng(base + t)
        x = random_element(rng, phi.d)
        out = phi(x @ x.conj().T)
        worst = max(worst, -float(np.linalg.eigvalsh(0.5 * (out + out.conj().T))[0]))
    return CheckRecord("channel_positivity", {"trials": cfg.trials}, worst, 1e-10, seed=base)


@check("channel_adjoint")
def _channel_adj(cfg, phi, base):
    worst = 0.0
    for t in range(cfg.trials):
        rng = np.random.default_rng(base + t)
        y = random_element(rng, phi.d)
        worst = max(worst, opnorm(phi(y.conj().T) - phi(y).conj().T) / opnorm(y))
    return CheckRecord("channel_adjoint", {"trials": cfg.trials}, worst, cfg.tol("exact"), seed=base)


@check("channel_complete_positivity")
def _channel_cp(cfg, phi, base):
    worst = 0.0
    d = phi.d
    for t in range(cfg.trials):
        rng = np.random.default_rng(base + t)
        n = int(rng.integers(1, 4))
        x = random_element(rng, n * d)
        m = x @ x.conj().T
        out = np.zeros_like(m)
        for i in range(n):
            for j in range(n):
                out[i * d : (i + 1) * d, j * d : (j + 1) * d] = phi(m[i * d : (i + 1) * d, j * d : (j + 1) * d])
        _, low = psd_check(out)
        worst = max(worst, -low / max(1.0, opnorm(out)))
    return CheckRecord("channel_complete_positivity", {"trials": cfg.trials}, worst, cfg.tol("gram_psd"), seed=base)


@check("normal_form_golden")
def _golden(cfg, phi, base):
    cases = {
        (2, 6, 3, 4): "phi^2(a*phi(phi^3(b)*c*phi(d)))",
        (6, 4, 2, 3): "phi^2(phi^2(phi^2(a)*b)*c*phi(d))",
    }
    names = ["a", "b", "c", "d"]
    bad = sum(moment_render(moment_normal_form(k, names), names) != v for k, v in cases.items())
    return CheckRecord("normal_form_golden", {"cases": len(cases)}, float(bad), 0.5)


def _random_tuple(rng, max_len=5, max_entry=4):
    k = int(rng.integers(1, max_len + 1))
    return [int(n) for n in rng.integers(0, max_entry + 1, size=k)]


@check("moment_split_independence")
def _split(cfg, phi, base):
    worst = 0.0
    for t in range(cfg.trials):
        rng = np.random.default_rng(base + t)
        idx = _random_tuple(rng)
        mats = [random_element(rng, phi.d) for _ in idx]
        ref = moment_eval(idx, mats, phi)
        for pos in zero_positions(idx):
            worst = max(worst, opnorm(moment_eval_split(idx, mats, phi, pos) - ref))
    return CheckRecord("moment_split_independence", {"trials": cfg.trials}, worst, cfg.tol("moment"), seed=base)


@check("moment_symmetry")
def _symmetry(cfg, phi, base):
    worst = 0.0
    for t in range(cfg.trials):
        rng = np.random.default_rng(base + t)
        idx = _random_tuple(rng)
        mats = [random_element(rng, phi.d) for _ in idx]
        worst = max(worst, moment_symmetry_residual(idx, mats, phi))
    return CheckRecord("moment_symmetry", {"trials": cfg.trials}, worst, cfg.tol("moment"), seed=base)


@check("moment_raise_rule")
def _mp1(cfg, phi, base):
    worst = 0.0
    for t in range(cfg.trials):
        rng = np.random.default_rng(base + t)
        idx = _random_tuple(rng)
        mats = [random_element(rng, phi.d) for _ in idx]
        lhs = moment_eval([n + 1 for n in idx], mats, phi)
        worst = max(worst, opnorm(lhs - phi(moment_eval(idx, mats, phi))))
    return CheckRecord("moment_raise_rule", {"trials": cfg.trials}, worst, cfg.tol("moment"), seed=base)


@check("moment_multilinearity")
def _multilinear(cfg, phi, base):
    worst = 0.0
    for t in range(cfg.trials):
        rng = np.random.default_rng(base + t)
        idx = _random_tuple(rng)
        mats = [random_element(rng, phi.d) for _ in idx]
        slot = int(rng.integers(0, len(idx)))
        x, y = random_element(rng, phi.d), random_element(rng, phi.d)
        s, r = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        combo = list(mats)
        combo[slot] = s * x + r * y
        mx, my = list(mats), list(mats)
        mx[slot], my[slot] = x, y
        lhs = moment_eval(idx, combo, phi)
        rhs = s * moment_eval(idx, mx, phi) + r * moment_eval(idx, my, phi)
        worst = max(worst, opnorm(lhs - rhs))
    return CheckRecord("moment_multilinearity", {"trials": cfg.trials}, worst, cfg.tol("moment"), seed=base)


@check("e0_equivariance")
def _equivariance(cfg, phi, base):
    worst = 0.0
    for t in range(cfg.trials):
        rng = np.random.default_rng(base + t)
        g = random_generator(rng, phi.d, 3, 4)
        worst = max(worst, opnorm(expectation_E0(g.shift(1), phi) - phi(expectation_E0(g, phi))))
    return CheckRecord("e0_equivariance", {"trials": cfg.trials}, worst, cfg.tol("moment"), seed=base)


@check("e0_module_property")
def _module(cfg, phi, base):
    worst = 0.0
    for t in range(cfg.trials):
        rng = np.random.default_rng(base + t)
        g = random_generator(rng, phi.d, 3, 4)
        a = gen_make([0], [random_element(rng, phi.d)])
        e = expectation_E0(g, phi)
        worst = max(
            worst,
            opnorm(expectation_E0(a * g, phi) - a.tensors[0] @ e),
            opnorm(expectation_E0(g * a, phi) - e @ a.tensors[0]),
        )
    return CheckRecord("e0_module_property", {"trials": cfg.trials}, worst, cfg.tol("moment"), seed=base)


@check("e0_hereditary_multiplicativity")
def _hereditary(cfg, phi, base):
    worst = 0.0
    for t in range(cfg.trials):
        rng = np.random.default_rng(base + t)
        g = random_generator(rng, phi.d, 3, 4, first=0, last=0)
        h = random_generator(rng, phi.d, 3, 4, first=0, last=0)
        lhs = expectation_E0(g * h, phi)
        worst = max(worst, opnorm(lhs - expectation_E0(g, phi) @ expectation_E0(h, phi)))
    return CheckRecord("e0_hereditary_multiplicativity", {"trials": cfg.trials}, worst, cfg.tol("moment"), seed=base)


@check("e0_adjoint")
def _e0_adjoint(cfg, phi, base):
    worst = 0.0
    for t in range(cfg.trials):
        rng = np.random.default_rng(base + t)
        g = random_generator(rng, phi.d, 3, 4)
        worst = max(worst, opnorm(expectation_E0(g.star, phi) - expectation_E0(g, phi).conj().T))
    return CheckRecord("e0_adjoint", {"trials": cfg.trials}, worst, cfg.tol("moment"), seed=base)


def _family_channel(cfg, s: int, base: int) -> Channel:
    # even seeds: unital; odd seeds: phi(e) = e / 2
    return random_channel(cfg.channel.d, cfg.channel.r, base + s, unital=(s % 2 == 0), lam=0.5)


def _family(cfg, rng, d):
    n = int(rng.integers(1, cfg.family_size + 1))
    return [random_generator(rng, d, 3, 3) for _ in range(n)]


@check("gram_positivity")
def _gram(cfg, phi, base):
    worst = 0.0
    for s in range(cfg.seeds):
        rng = np.random.default_rng(base + s)
        ch = _family_channel(cfg, s, base)
        G, low = gram_matrix(_family(cfg, rng, ch.d), ch)
        worst = max(worst, -low / max(1.0, opnorm(G)))
    return CheckRecord("gram_positivity", {"families": cfg.seeds}, worst, cfg.tol("gram_psd"), seed=base)


@check("key_lemma")
def _key(cfg, phi, base):
    worst = 0.0
    for s in range(cfg.seeds):
        rng = np.random.default_rng(base + s)
        ch = _family_channel(cfg, s, base)
        us = _family(cfg, rng, ch.d)
        if max(u.height for u in us) == 0:
            us.append(gen_make([1], [random_element(rng, ch.d)]))
        res = key_lemma_step(us, ch)
        worst = max(worst, res.residual)
        if any(v.height >= res.max_height for v in res.vs):
            worst = math.inf
    return CheckRecord("key_lemma", {"families": cfg.seeds}, worst, cfg.tol("key_lemma"), seed=base)


def _scalar_half() -> Channel:
    return channel_from_kraus(1, [np.array([[math.sqrt(0.5)]])])


@check("closed_form_values")
def _closed(cfg, phi, base):
    ch = _scalar_half()
    G, low = gram_matrix([gen_make([0], [1.0]), gen_make([1], [1.0])], ch)
    worst = max(
        float(np.abs(G - np.array([[1, 0.5], [0.5, 0.5]])).max()),
        abs(low - (3 - math.sqrt(5)) / 4),
        abs(moment_eval([1, 0, 1], [1.0, 1.0, 1.0], ch)[0, 0] - 0.25),
    )
    return CheckRecord("closed_form_values", {}, worst, cfg.tol("closed_form"))


@check("identity_channel_degeneration")
def _identity(cfg, phi, base):
    d = cfg.channel.d
    ident = channel_from_kraus(d, [np.eye(d)])
    worst = 0.0
    for t in range(cfg.trials):
        rng = np.random.default_rng(base + t)
        idx = _random_tuple(rng)
        mats = [random_element(rng, d) for _ in idx]
        prod = np.linalg.multi_dot(mats) if len(mats) > 1 else mats[0]
        worst = max(worst, opnorm(moment_eval(idx, mats, ident) - prod))
    rng = np.random.default_rng(base + cfg.trials)
    mats = [random_element(rng, d) for _ in range(5)]
    G, _ = gram_matrix([gen_make([0], [a]) for a in mats], ident)
    row = np.hstack(mats)
    worst = max(worst, float(np.abs(G - row.conj().T @ row).max()))
    return CheckRecord("identity_channel_degeneration", {"trials": cfg.trials}, worst, cfg.tol("exact"), seed=base)


@check("dilation_model")
def _model(cfg, phi, base):
    model = cfg.model(phi)
    params = {"N": cfg.truncation.N, "L": cfg.truncation.L, "rank": model.rank}
    return [
        CheckRecord("dilation_gram_psd", dict(params), model.clip / max(1.0, opnorm(model.gram)),
                    cfg.tol("gram_psd")),
        CheckRecord("dilation_corner_projection", dict(params), model.projection_residual(), 1e-10),
        CheckRecord("dilation_corner_nondegeneracy", dict(params), model.corner_gram_min, 1e-10,
                    lower_bound=True),
    ]


@check("moment_formula")
def _formula(cfg, phi, base):
    model = cfg.model(phi)
    return verify_moment_formula(model, cfg.dilation_trials, base, threshold=cfg.tol("dilation"))


@check("standard_properties")
def _standard(cfg, phi, base):
    worst_id = worst_her = 0.0
    for s in range(cfg.unital_seeds):
        ch = random_channel(phi.d, cfg.channel.r, base + s, unital=True)
        ident, her = verify_standard_properties(build_gns(ch, cfg.truncation), threshold=cfg.tol("dilation"))
        worst_id = max(worst_id, ident.residual)
        worst_her = max(worst_her, her.residual)
    return CheckRecord(
        "standard_properties",
        {"seeds": cfg.unital_seeds, "corner_identity": worst_id, "hereditarity": worst_her},
        max(worst_id, worst_her),
        cfg.tol("dilation"),
        seed=base,
    )


@check("representation_rules")
def _rules(cfg, phi, base):
    model = cfg.model(phi)
    rng = np.random.default_rng(base)
    d = phi.d
    gens = [gen_make([n], [random_element(rng, d)]) for n in range(cfg.truncation.N + 1)]
    gens.append(unit_generator(d))
    pairs = [(g, h) for g in gens for h in gens]
    prod = verify_product_rule(model, pairs, cfg.tol("dilation"))
    adj = verify_adjoint_rule(model, gens, cfg.tol("dilation"))
    return CheckRecord(
        "representation_rules",
        {"product_rule": prod.residual, "adjoint_rule": adj.residual},
        max(prod.residual, adj.residual),
        cfg.tol("dilation"),
        seed=base,
    )


@check("truncation_consistency")
def _consistency(cfg, phi, base):
    return verify_truncation_consistency(phi, cfg.consistency, 20, base, cfg.tol("dilation"))


def run_suite(cfg: SuiteConfig, phi: Channel | None = None) -> Report:
    """Run every registered check in order and collect the records.

    ``standard_properties`` always draws its own unital channels, so it runs
    even when the configured channel is not unital.
    """
    phi = phi or cfg.channel.build()
    report = Report()
    for index, (name, fn) in enumerate(CHECKS):
        base = cfg.seed + SEED_STRIDE * index
        start = time.perf_counter()
        out = fn(cfg, phi, base)
        records = out if isinstance(out, list) else [out]
        elapsed = (time.perf_counter() - start) * 1e3
        for rec in records:
            rec.elapsed_ms = elapsed / len(records)
            if rec.seed is None:
                rec.seed = base
            report.add(rec)
    return report
