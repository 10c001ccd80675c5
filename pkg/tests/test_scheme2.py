import numpy as np

from hiercache.harness import deliver, place, run_episode
from hiercache.model import SystemConfig, random_library
from hiercache.scheme2 import place_mirror2, place_user2, user_decode2

EX1 = SystemConfig(3, 2, 6)
D1 = (1, 2, 3, 4, 5, 6)


def test_mirror_holds_outside_pairs_only():
    lib = random_library(EX1, 0)
    cache = place_mirror2(EX1, lib, 1)
    assert len(cache) == cache.count("uncoded") == 6 * 12
    assert all(it.key[1] > 2 and it.key[2] > 2 for it in cache.items.values())


def test_user_holds_coded_items():
    lib = random_library(EX1, 0)
    cache = place_user2(EX1, lib, 1)
    assert cache.count("uncoded") == 6 * 8
    assert cache.count("diff") == 6 * 4
    assert cache.count("sum") == 1
    assert len(cache) == 73


def test_delivery_is_a_and_b_only():
    lib = random_library(EX1, 0)
    dl = deliver(EX1, lib, place(EX1, 2, lib), D1)
    assert dl.phase_counts()[1] == {"A": 6, "B": 24}


def test_user_decodes_coded_row_itself():
    lib = random_library(EX1, 3)
    pl = place(EX1, 2, lib)
    dl = deliver(EX1, lib, pl, D1)
    res = user_decode2(EX1, 1, pl.users[1], dl.mirrors[1], D1)
    assert res.success
    assert np.array_equal(res.payload, lib.file(1))
    assert {src for src in res.sources.values()} >= {"cache", "B", "coded"}


def test_repeated_demands_decode():
    cfg = SystemConfig(2, 2, 3)
    ep = run_episode(cfg, 2, (1, 1, 2, 3), random_library(cfg, 5), oracle=True)
    assert ep.success and ep.oracle_agrees
