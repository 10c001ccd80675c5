import itertools
from collections import Counter

import pytest

from hiercache.errors import BudgetExceeded, ConfigurationError
from hiercache.harness import (
    decodability_oracle,
    decode_all,
    deliver,
    golden_trace,
    place,
    random_demands,
    run_episode,
    surjections,
    sweep,
    user_decodable,
)
from hiercache.model import Subfile, SystemConfig, random_library


def _surjections_by_filter(K, N):
    return [d for d in itertools.product(range(1, N + 1), repeat=K) if len(set(d)) == N]


@pytest.mark.parametrize("K,N", [(3, 2), (4, 3), (4, 4), (5, 3), (6, 6)])
def test_surjections_match_filtered_product(K, N):
    assert list(surjections(K, N)) == _surjections_by_filter(K, N)


def test_random_demands_uniform():
    cfg = SystemConfig(2, 2, 3)
    draws = random_demands(cfg, seed=11, trials=36000)
    support = _surjections_by_filter(4, 3)
    counts = Counter(draws)
    assert set(counts) == set(support)
    expected = len(draws) / len(support)
    chi2 = sum((counts[d] - expected) ** 2 / expected for d in support)
    assert chi2 < 66.6  # 35 dof, p = 0.001


def test_random_demands_deterministic():
    cfg = SystemConfig(3, 2, 6)
    assert random_demands(cfg, 4, 10) == random_demands(cfg, 4, 10)


def test_user_decodable_rank_test():
    cfg = SystemConfig(1, 2, 2)
    a, b = Subfile(1, 1, 2), Subfile(1, 2, 1)
    c = Subfile(2, 1, 2)
    assert user_decodable(cfg, [((1, a),), ((1, b), (1, c)), ((1, c),)], 1) == ()
    assert user_decodable(cfg, [((1, a), (1, b))], 1) == ((1, 2), (2, 1))
    pair = [((1, a), (1, b)), ((1, a), (-1, b))]
    # a+b and a-b coincide in GF(2) but span both subfiles in GF(3)
    assert cfg.p == 2 and user_decodable(cfg, pair, 1) == ((1, 2), (2, 1))
    assert user_decodable(SystemConfig(1, 2, 2, p=3), pair, 1) == ()


def test_drop_c_sum_fails_decoder_and_oracle_identically():
    cfg = SystemConfig(3, 2, 6)
    lib = random_library(cfg, 0)
    d = (1, 2, 3, 4, 5, 6)
    pl = place(cfg, 1, lib)
    dl = deliver(cfg, lib, pl, d)
    first_c = next(i for i, t in enumerate(dl.mirrors[1]) if t.phase == "C")
    del dl.mirrors[1][first_c]
    results = decode_all(cfg, pl, dl, d)
    oracle = decodability_oracle(cfg, 1, d, pl, dl)
    assert any(not r.success for r in results.values())
    assert {k: set(r.missing) for k, r in results.items()} == {k: set(v) for k, v in oracle.items()}


def test_episode_payload_is_checked_against_library():
    cfg = SystemConfig(2, 2, 3)
    lib = random_library(cfg, 1)
    ep = run_episode(cfg, 1, (1, 2, 3, 1), lib, oracle=True)
    assert ep.success and ep.oracle_agrees
    assert ep.as_dict()["success"] is True


def test_sweep_deterministic():
    cfg = SystemConfig(2, 2, 3)
    a = sweep(cfg, 1, seed=3).as_dict()
    b = sweep(cfg, 1, seed=3).as_dict()
    assert a == b and a["ok"]


def test_sweep_workers_agree():
    cfg = SystemConfig(2, 2, 3)
    assert sweep(cfg, 2, workers=2).as_dict() == sweep(cfg, 2).as_dict()


def test_budget_exceeded():
    with pytest.raises(BudgetExceeded):
        sweep(SystemConfig(3, 2, 6), 1, budget=100)


def test_unknown_scheme_and_mode():
    cfg = SystemConfig(2, 2, 3)
    with pytest.raises(ConfigurationError):
        sweep(cfg, 3)
    with pytest.raises(ConfigurationError):
        sweep(cfg, 1, mode="grid")


def test_random_sweep():
    rep = sweep(SystemConfig(4, 2, 5), 1, mode="random", trials=20, seed=9)
    assert rep.attempted == 20 and rep.ok


def test_k1_one_wrap_class_needed():
    cfg = SystemConfig(1, 3, 3)
    strict = sweep(cfg, 1, strict_parity=True)
    assert strict.passed == 0 and not strict.oracle_disagreements
    relaxed = sweep(cfg, 1)
    assert relaxed.passed == relaxed.attempted == 6


GOLDEN_A = [
    "A: W^{12}_2 + W^{13}_3 + W^{14}_4 + W^{15}_5 + W^{16}_6",
    "A: W^{21}_1 + W^{23}_3 + W^{24}_4 + W^{25}_5 + W^{26}_6",
    "A: W^{31}_1 + W^{32}_2",
    "A: W^{41}_1 + W^{42}_2",
    "A: W^{51}_1 + W^{52}_2",
    "A: W^{61}_1 + W^{62}_2",
]


def test_golden_trace_example():
    lines = golden_trace()
    assert len(lines) == 6 + 37
    assert lines[0] == "Y^1 = W^{12}_2 + W^{13}_3 + W^{14}_4 + W^{15}_5 + W^{16}_6"
    assert lines[6:12] == GOLDEN_A
    assert lines[12] == "B: W^{34}_1"
    assert lines[-7:] == [
        "C: W^{12}_1",
        "C: W^{23}_2",
        "D: W^{14}_1 + W^{24}_2",
        "D: W^{15}_1 + W^{25}_2",
        "D: W^{16}_1 + W^{26}_2",
        "E: W^{21}_2",
        "E: W^{13}_1",
    ]
