"""Instance configuration, topology, subpacketization and demand statistics.

Users are numbered ``1..K`` with ``K = K1*K2``; mirror ``m`` serves the
contiguous block ``(m-1)*K2 + 1 .. m*K2``. Every file is split into
``K*(K-1)`` subfiles indexed by ordered pairs ``(i, j)``, ``i != j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, DemandError, InputError
from .gf import GF, choose_prime, is_prime


class Subfile(NamedTuple):
    """Identifier of subfile ``W^{ij}_n``."""

    n: int
    i: int
    j: int

    def __str__(self) -> str:
        if max(self.i, self.j) >= 10:
            return f"W^{{{self.i},{self.j}}}_{self.n}"
        return f"W^{{{self.i}{self.j}}}_{self.n}"


@dataclass(frozen=True)
class SystemConfig:
    k1: int
    k2: int
    n: int
    l: int = 1
    p: int | None = None

    def __post_init__(self):
        if self.k1 < 1:
            raise ConfigurationError(f"K1 must be >= 1, got {self.k1}")
        if self.k2 < 2:
            raise ConfigurationError(f"K2 must be >= 2, got {self.k2}")
        K = self.k1 * self.k2
        if not 2 <= self.n <= K:
            raise ConfigurationError(f"need 2 <= N <= K1*K2 = {K}, got N = {self.n}")
        if self.l < 1:
            raise ConfigurationError(f"subfile length L must be positive, got {self.l}")
        if self.p is None:
            object.__setattr__(self, "p", choose_prime(K, self.n))
        elif not is_prime(self.p):
            raise ConfigurationError(f"field modulus {self.p} is not prime")
        elif self.p < K - self.n + 2:
            raise ConfigurationError(
                f"prime {self.p} too small: need p >= K - N + 2 = {K - self.n + 2}"
            )

    @property
    def K(self) -> int:
        return self.k1 * self.k2

    @property
    def T(self) -> int:
        """Subfiles per file."""
        return self.K * (self.K - 1)

    @property
    def F(self) -> int:
        """File length in symbols."""
        return self.T * self.l

    @cached_property
    def field(self) -> GF:
        return GF(self.p)

    @cached_property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        K = self.K
        return tuple((i, j) for i in range(1, K + 1) for j in range(1, K + 1) if i != j)

    @cached_property
    def pair_rank(self) -> dict[tuple[int, int], int]:
        return {pr: r for r, pr in enumerate(self.pairs)}

    def users_of_mirror(self, m: int) -> tuple[int, ...]:
        return users_of_mirror(self, m)

    def mirror_of(self, k: int) -> int:
        _check_user(self, k)
        return (k - 1) // self.k2 + 1

    def succ(self, k: int) -> int:
        return succ(self, k)

    def pred(self, k: int) -> int:
        _check_user(self, k)
        return self.K if k == 1 else k - 1

    def wrap(self, k: int) -> int:
        """Reduce an index in ``1..K+1`` cyclically into ``1..K``."""
        return (k - 1) % self.K + 1

    def as_dict(self) -> dict:
        return {"k1": self.k1, "k2": self.k2, "n": self.n, "l": self.l, "prime": self.p}


def _check_user(cfg: SystemConfig, k: int) -> None:
    if not 1 <= k <= cfg.K:
        raise ConfigurationError(f"user index {k} outside 1..{cfg.K}")


def users_of_mirror(cfg: SystemConfig, m: int) -> tuple[int, ...]:
    if not 1 <= m <= cfg.k1:
        raise ConfigurationError(f"mirror index {m} outside 1..{cfg.k1}")
    start = (m - 1) * cfg.k2
    return tuple(range(start + 1, start + cfg.k2 + 1))


def succ(cfg: SystemConfig, k: int) -> int:
    _check_user(cfg, k)
    return 1 if k == cfg.K else k + 1


@dataclass(frozen=True, eq=False)
class FileLibrary:
    """``N`` files as ``(N, K(K-1), L)`` symbol arrays, subfiles in pair-rank order."""

    cfg: SystemConfig
    data: np.ndarray

    def __post_init__(self):
        shape = (self.cfg.n, self.cfg.T, self.cfg.l)
        if self.data.shape != shape:
            raise InputError(f"library array has shape {self.data.shape}, expected {shape}")

    def subfile(self, sid: Subfile) -> np.ndarray:
        return self.data[sid.n - 1, self.cfg.pair_rank[(sid.i, sid.j)]]

    def file(self, n: int) -> np.ndarray:
        """Concatenation of the subfiles of file ``n`` in rank order."""
        return self.data[n - 1].reshape(-1)


def subpacketize(cfg: SystemConfig, raw_files: Sequence[Sequence[int]]) -> FileLibrary:
    if len(raw_files) != cfg.n:
        raise InputError(f"expected {cfg.n} files, got {len(raw_files)}")
    rows = []
    for idx, raw in enumerate(raw_files, start=1):
        arr = np.asarray(raw, dtype=np.int64)
        if arr.ndim != 1 or arr.size != cfg.F:
            raise InputError(
                f"file {idx} has {arr.size} symbols, expected F = K(K-1)*L = {cfg.F}"
            )
        if arr.size and (arr.min() < 0 or arr.max() >= cfg.p):
            raise InputError(f"file {idx} has symbols outside GF({cfg.p})")
        rows.append(arr.reshape(cfg.T, cfg.l))
    return FileLibrary(cfg, np.stack(rows))


def random_library(cfg: SystemConfig, seed: int = 0) -> FileLibrary:
    rng = np.random.default_rng(seed)
    data = rng.integers(0, cfg.p, size=(cfg.n, cfg.T, cfg.l), dtype=np.int64)
    return FileLibrary(cfg, data)


def validate_demand(cfg: SystemConfig, d: Sequence[int]) -> tuple[int, ...]:
    """Return ``d`` as a tuple, or raise :class:`DemandError` if it is unusable.

    Demands must be surjective onto the library: the collapse step in the
    coded recovery relies on every file having at least one requester.
    """
    d = tuple(int(x) for x in d)
    if len(d) != cfg.K:
        raise DemandError(f"demand has {len(d)} entries, expected K = {cfg.K}")
    bad = [x for x in d if not 1 <= x <= cfg.n]
    if bad:
        raise DemandError(f"file indices {sorted(set(bad))} outside 1..{cfg.n}")
    missing = sorted(set(range(1, cfg.n + 1)) - set(d))
    if missing:
        raise DemandError(
            f"demand is not surjective: files {missing} are not requested", missing
        )
    return d


@dataclass(frozen=True)
class DemandStats:
    """Counts ``N^s_k`` and signs ``alpha^s_k`` for ordered pairs ``k != s``."""

    cfg: SystemConfig
    demand: tuple[int, ...]
    count: dict[tuple[int, int], int] = field(repr=False)
    alpha: dict[tuple[int, int], int] = field(repr=False)

    def coef(self, k: int, s: int) -> int:
        """Field value of ``alpha^s_k / N^s_k``."""
        gf = self.cfg.field
        return gf.mul(self.alpha[(k, s)] % gf.p, gf.inv(self.count[(k, s)]))

    def same_demand_count(self, k: int) -> int:
        """Users other than ``k`` requesting ``d_k`` (``N^k_k``)."""
        dk = self.demand[k - 1]
        return sum(1 for u, du in enumerate(self.demand, start=1) if u != k and du == dk)


def demand_stats(cfg: SystemConfig, d: Iterable[int]) -> DemandStats:
    d = validate_demand(cfg, d)
    count, alpha = {}, {}
    for k in range(1, cfg.K + 1):
        tally: dict[int, int] = {}
        for u in range(1, cfg.K + 1):
            if u != k:
                tally[d[u - 1]] = tally.get(d[u - 1], 0) + 1
        for s in range(1, cfg.K + 1):
            if s == k:
                continue
            count[(k, s)] = tally[d[s - 1]]
            alpha[(k, s)] = -1 if d[k - 1] == d[s - 1] else 1
    return DemandStats(cfg, d, count, alpha)
