"""Acceptance criteria, one test per criterion, each at its pinned tolerance and time budget.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from cpdilation.algebra import channel_from_kraus, opnorm, random_channel, random_element
from cpdilation.dilation import (
    TruncationParams,
    build_gns,
    verify_moment_formula,
    verify_standard_properties,
)
from cpdilation.errors import HeightZero
from cpdilation.expectation import expectation_E0, gen_make, gram_matrix, key_lemma_step, random_generator
from cpdilation.moments import (
    moment_eval,
    moment_eval_split,
    moment_normal_form,
    moment_render,
    moment_symmetry_residual,
    zero_positions,
)

RESULTS = []


def record(number, title, passed, detail):
    RESULTS.append(f"{'PASS' if passed else 'FAIL'}  criterion {number:>2}: {title} ({detail})")


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def random_tuple(rng, max_len=5, max_entry=4):
    k = int(rng.integers(1, max_len + 1))
    return [int(n) for n in rng.integers(0, max_entry + 1, size=k)]


def trial_channel(seed):
    return random_channel(2, 2, 10_000 + seed, unital=bool(seed % 2), lam=0.5)


def test_01_normal_form_golden():
    names = ["a", "b", "c", "d"]
    with Timer() as t:
        first = moment_render(moment_normal_form([2, 6, 3, 4], names), names)
        second = moment_render(moment_normal_form([6, 4, 2, 3], names), names)
    ok = (
        first == "phi^2(a*phi(phi^3(b)*c*phi(d)))"
        and second == "phi^2(phi^2(phi^2(a)*b)*c*phi(d))"
        and t.seconds < 1
    )
    record(1, "normal-form golden strings", ok, f"{t.seconds:.3f} s")
    assert ok, (first, second)


def test_02_split_position_independence():
    worst = 0.0
    splits = 0
    with Timer() as t:
        for seed in range(200):
            rng = np.random.default_rng(seed)
            phi = trial_channel(seed)
            idx = random_tuple(rng)
            mats = [random_element(rng, 2) for _ in idx]
            ref = moment_eval(idx, mats, phi)
            for pos in zero_positions(idx):
                worst = max(worst, opnorm(moment_eval_split(idx, mats, phi, pos) - ref))
                splits += 1
    ok = worst < 1e-10 and t.seconds < 10
    record(2, "recursion well-definedness", ok, f"max {worst:.2e} over {splits} splits, {t.seconds:.2f} s")
    assert ok


def test_03_symmetry():
    worst = 0.0
    with Timer() as t:
        for seed in range(200):
            rng = np.random.default_rng(seed)
            phi = trial_channel(seed)
            idx = random_tuple(rng)
            worst = max(worst, moment_symmetry_residual(idx, [random_element(rng, 2) for _ in idx], phi))
    ok = worst < 1e-10 and t.seconds < 10
    record(3, "moment symmetry", ok, f"max {worst:.2e}, {t.seconds:.2f} s")
    assert ok


def test_04_equivariance_and_module_property():
    worst_eq = worst_mod = 0.0
    with Timer() as t:
        for seed in range(200):
            rng = np.random.default_rng(seed)
            phi = trial_channel(seed)
            g = random_generator(rng, 2, 4, 5)
            e = expectation_E0(g, phi)
            worst_eq = max(worst_eq, opnorm(expectation_E0(g.shift(1), phi) - phi(e)))
            a = random_element(rng, 2)
            worst_mod = max(worst_mod, opnorm(expectation_E0(gen_make([0], [a]) * g, phi) - a @ e))
    ok = worst_eq < 1e-10 and worst_mod < 1e-10 and t.seconds < 10
    record(4, "equivariance and module property", ok,
           f"max {worst_eq:.2e} / {worst_mod:.2e}, {t.seconds:.2f} s")
    assert ok


def test_05_hereditary_multiplicativity():
    worst = 0.0
    with Timer() as t:
        for seed in range(200):
            rng = np.random.default_rng(seed)
            phi = trial_channel(seed)
            g = random_generator(rng, 2, 4, 5, first=0, last=0)
            h = random_generator(rng, 2, 4, 5, first=0, last=0)
            assert g.word.first == g.word.last == h.word.first == h.word.last == 0
            lhs = expectation_E0(g * h, phi)
            worst = max(worst, opnorm(lhs - expectation_E0(g, phi) @ expectation_E0(h, phi)))
    ok = worst < 1e-10 and t.seconds < 10
    record(5, "hereditary multiplicativity", ok, f"max {worst:.2e}, {t.seconds:.2f} s")
    assert ok


def ensemble(seed):
    """Family of <= 20 generators (heights <= 3, lengths <= 3) and its channel."""
    rng = np.random.default_rng(500 + seed)
    phi = random_channel(2, 2, 20_000 + seed, unital=(seed % 2 == 0), lam=0.5)
    n = int(rng.integers(1, 21))
    return phi, [random_generator(rng, 2, 3, 3) for _ in range(n)]


def test_06_gram_positivity():
    worst = 0.0
    kinds = set()
    with Timer() as t:
        for seed in range(50):
            phi, us = ensemble(seed)
            kinds.add(phi.is_unital(1e-12))
            G, low = gram_matrix(us, phi)
            worst = max(worst, -low / max(1.0, opnorm(G)))
    ok = worst <= 1e-8 and kinds == {True, False} and t.seconds < 120
    record(6, "Gram positivity", ok, f"worst scaled eigenvalue {-worst:.2e}, {t.seconds:.2f} s")
    assert ok


def test_07_key_lemma():
    worst = 0.0
    heights_ok = True
    used = 0
    with Timer() as t:
        for seed in range(50):
            phi, us = ensemble(seed)
            try:
                res = key_lemma_step(us, phi)
            except HeightZero:
                continue  # the lemma needs a positive maximum height
            used += 1
            worst = max(worst, res.residual)
            heights_ok &= all(v.height < res.max_height for v in res.vs)
    ok = worst < 1e-9 and heights_ok and used >= 45 and t.seconds < 60
    record(7, "height-reduction factorization", ok, f"max {worst:.2e} over {used} families, {t.seconds:.2f} s")
    assert ok


def test_08_two_path_dilation_oracle():
    worst = 0.0
    samples = 0
    with Timer() as t:
        for seed in (7, 8, 9):
            model = build_gns(random_channel(2, 2, seed, unital=True), TruncationParams(2, 2))
            rec = verify_moment_formula(model, trials=100, seed=seed)
            worst = max(worst, rec.residual)
            samples += rec.params["samples"]
    ok = worst < 1e-8 and samples >= 100 and t.seconds < 120
    record(8, "two-path dilation oracle", ok, f"max {worst:.2e} over {samples} products, {t.seconds:.2f} s")
    assert ok


def test_09_standard_dilation_properties():
    worst_id = worst_her = 0.0
    with Timer() as t:
        for seed in range(20):
            model = build_gns(random_channel(2, 2, 30_000 + seed, unital=True), TruncationParams(2, 2))
            corner, her = verify_standard_properties(model)
            worst_id = max(worst_id, corner.residual)
            worst_her = max(worst_her, her.residual)
    ok = worst_id < 1e-8 and worst_her < 1e-8 and t.seconds < 60
    record(9, "standard-dilation properties", ok,
           f"corner {worst_id:.2e}, hereditarity {worst_her:.2e}, {t.seconds:.2f} s")
    assert ok


def test_10_closed_form_values():
    half = channel_from_kraus(1, [np.array([[1 / math.sqrt(2)]])])
    G, low = gram_matrix([gen_make([0], [1.0]), gen_make([1], [1.0])], half)
    gram_err = float(np.abs(G - np.array([[1, 0.5], [0.5, 0.5]])).max())
    eig_err = abs(low - (3 - math.sqrt(5)) / 4)
    mom_err = abs(moment_eval([1, 0, 1], [1.0, 1.0, 1.0], half)[0, 0] - 0.25)
    ok = gram_err <= 1e-12 and eig_err <= 1e-12 and mom_err <= 1e-15
    record(10, "closed-form spot values", ok, f"{gram_err:.1e} / {eig_err:.1e} / {mom_err:.1e}")
    assert ok


def test_11_identity_channel_degeneration():
    ident = channel_from_kraus(2, [np.eye(2)])
    worst_m = worst_g = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        idx = random_tuple(rng)
        mats = [random_element(rng, 2) for _ in idx]
        product = mats[0]
        for m in mats[1:]:
            product = product @ m
        worst_m = max(worst_m, opnorm(moment_eval(idx, mats, ident) - product))
        family = [random_element(rng, 2) for _ in range(int(rng.integers(1, 6)))]
        G, _ = gram_matrix([gen_make([0], [a]) for a in family], ident)
        row = np.hstack(family)
        worst_g = max(worst_g, float(np.abs(G - row.conj().T @ row).max()))
    ok = worst_m <= 1e-12 and worst_g <= 1e-12
    record(11, "identity-channel degeneration", ok, f"{worst_m:.1e} / {worst_g:.1e}")
    assert ok


@pytest.fixture(scope="module", autouse=True)
def _report_lines(request):
    yield
    request.config._acceptance_lines = list(RESULTS)
