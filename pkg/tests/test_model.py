import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiercache.errors import ConfigurationError, DemandError, InputError
from hiercache.model import (
    Subfile,
    SystemConfig,
    demand_stats,
    random_library,
    subpacketize,
    succ,
    users_of_mirror,
    validate_demand,
)

configs = st.tuples(st.integers(1, 4), st.integers(2, 4)).flatmap(
    lambda t: st.tuples(st.just(t[0]), st.just(t[1]), st.integers(2, t[0] * t[1]))
)


def test_derived_sizes():
    cfg = SystemConfig(3, 2, 6)
    assert (cfg.K, cfg.T) == (6, 30)
    assert SystemConfig(1, 3, 3).T == 6


@pytest.mark.parametrize(
    "args",
    [(2, 1, 2), (0, 2, 2), (2, 2, 5), (2, 2, 1), (2, 2, 3, 0)],
)
def test_invalid_configs(args):
    with pytest.raises(ConfigurationError):
        SystemConfig(*args)


def test_prime_bound_enforced():
    SystemConfig(2, 2, 3, p=3)
    with pytest.raises(ConfigurationError):
        SystemConfig(2, 2, 3, p=2)
    with pytest.raises(ConfigurationError):
        SystemConfig(2, 2, 3, p=4)


def test_subpacketize_k8():
    cfg = SystemConfig(4, 2, 2, l=2)
    raw = [np.arange(112) % cfg.p, (np.arange(112) * 3 + 1) % cfg.p]
    lib = subpacketize(cfg, raw)
    assert cfg.T == 56 and cfg.F == 112
    assert lib.data.shape == (2, 56, 2)
    for n in (1, 2):
        assert np.array_equal(lib.file(n), raw[n - 1])
    # rank order is lexicographic on (i, j)
    assert cfg.pairs[:3] == ((1, 2), (1, 3), (1, 4))
    assert np.array_equal(lib.subfile(Subfile(1, 1, 3)), raw[0][2:4])


def test_subpacketize_wrong_length_names_file():
    cfg = SystemConfig(1, 3, 3)
    raw = [np.zeros(6), np.zeros(5), np.zeros(6)]
    with pytest.raises(InputError, match="file 2.*expected F"):
        subpacketize(cfg, raw)


@given(configs, st.integers(1, 3), st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_reassembly(cfg_args, l, seed):
    cfg = SystemConfig(*cfg_args, l=l)
    lib = random_library(cfg, seed)
    again = subpacketize(cfg, [lib.file(n) for n in range(1, cfg.n + 1)])
    assert np.array_equal(again.data, lib.data)


def test_users_of_mirror_examples():
    assert users_of_mirror(SystemConfig(3, 2, 6), 1) == (1, 2)
    assert users_of_mirror(SystemConfig(3, 2, 6), 3) == (5, 6)
    assert users_of_mirror(SystemConfig(1, 3, 3), 1) == (1, 2, 3)
    with pytest.raises(ConfigurationError):
        users_of_mirror(SystemConfig(3, 2, 6), 4)


def test_succ_examples():
    assert succ(SystemConfig(3, 2, 6), 6) == 1
    assert succ(SystemConfig(3, 2, 6), 1) == 2
    assert succ(SystemConfig(2, 2, 4), 3) == 4
    with pytest.raises(ConfigurationError):
        succ(SystemConfig(2, 2, 4), 5)


@given(configs)
def test_topology_properties(cfg_args):
    cfg = SystemConfig(*cfg_args)
    blocks = [cfg.users_of_mirror(m) for m in range(1, cfg.k1 + 1)]
    flat = [k for b in blocks for k in b]
    assert sorted(flat) == list(range(1, cfg.K + 1))
    # succ is a single K-cycle
    k, seen = 1, []
    for _ in range(cfg.K):
        seen.append(k)
        k = cfg.succ(k)
    assert k == 1 and sorted(seen) == list(range(1, cfg.K + 1))
    assert all(cfg.pred(cfg.succ(k)) == k for k in range(1, cfg.K + 1))


def test_validate_demand():
    assert validate_demand(SystemConfig(3, 2, 6), range(1, 7)) == (1, 2, 3, 4, 5, 6)
    validate_demand(SystemConfig(3, 2, 3), (1, 1, 2, 2, 3, 3))
    with pytest.raises(DemandError) as err:
        validate_demand(SystemConfig(3, 2, 3), (1, 1, 1, 2, 2, 2))
    assert err.value.missing == (3,)
    with pytest.raises(DemandError):
        validate_demand(SystemConfig(3, 2, 3), (1, 2, 3))


def test_demand_stats_distinct():
    st_ = demand_stats(SystemConfig(3, 2, 6), range(1, 7))
    assert set(st_.count.values()) == {1}
    assert set(st_.alpha.values()) == {1}


def test_demand_stats_repeated():
    d = (1, 1, 2, 2, 3, 3)
    st_ = demand_stats(SystemConfig(3, 2, 3), d)
    # direct count over S_1 = {2..6} of users requesting d_3 = 2
    assert sum(1 for u in range(2, 7) if d[u - 1] == d[2]) == 2
    assert st_.count[(1, 3)] == 2 and st_.alpha[(1, 3)] == 1
    assert st_.alpha[(1, 2)] == -1
    assert st_.coef(1, 2) == 4  # -1/1 mod 5
    assert st_.coef(1, 3) == 3  # 1/2 mod 5


@given(configs, st.data())
@settings(max_examples=60, deadline=None)
def test_counts_are_invertible(cfg_args, data):
    cfg = SystemConfig(*cfg_args)
    extra = data.draw(st.lists(st.integers(1, cfg.n), min_size=cfg.K - cfg.n, max_size=cfg.K - cfg.n))
    d = data.draw(st.permutations(list(range(1, cfg.n + 1)) + extra))
    stats = demand_stats(cfg, d)
    for (k, s), c in stats.count.items():
        assert 1 <= c <= cfg.K - cfg.n + 1
        assert c % cfg.p != 0
        assert (stats.alpha[(k, s)] == -1) == (d[k - 1] == d[s - 1])
