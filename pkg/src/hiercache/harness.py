"""Episode runner, demand sweeps and an independent decodability oracle."""

from __future__ import annotations

import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Iterator, Sequence

import numpy as np

from . import scheme1, scheme2
from .errors import BudgetExceeded, ConfigurationError
from .labels import Cache, Transmission
from .model import FileLibrary, Subfile, SystemConfig, demand_stats, random_library, validate_demand
from .rates import (
    RateReport,
    composite,
    formula_report,
    measured_rates,
)

DEFAULT_BUDGET = 10**6


@dataclass
class Placement:
    scheme: int
    mirrors: dict[int, Cache]
    users: dict[int, Cache]

    def measured_memories(self, cfg: SystemConfig) -> tuple[Fraction, Fraction]:
        m1 = max(len(c) for c in self.mirrors.values())
        m2 = max(len(c) for c in self.users.values())
        return Fraction(m1, cfg.T), Fraction(m2, cfg.T)


@dataclass
class Delivery:
    server: list[Transmission]
    mirrors: dict[int, list[Transmission]]

    def phase_counts(self) -> dict[int, dict[str, int]]:
        out = {}
        for m, txs in self.mirrors.items():
            counts: dict[str, int] = {}
            for tx in txs:
                counts[tx.phase] = counts.get(tx.phase, 0) + 1
            out[m] = counts
        return out


def _check_scheme(scheme: int) -> int:
    if scheme not in (1, 2):
        raise ConfigurationError(f"scheme must be 1 or 2, got {scheme!r}")
    return scheme


def place(cfg: SystemConfig, scheme: int, library: FileLibrary) -> Placement:
    _check_scheme(scheme)
    pm = scheme1.place_mirror1 if scheme == 1 else scheme2.place_mirror2
    pu = scheme1.place_user1 if scheme == 1 else scheme2.place_user2
    return Placement(
        scheme,
        {m: pm(cfg, library, m) for m in range(1, cfg.k1 + 1)},
        {k: pu(cfg, library, k) for k in range(1, cfg.K + 1)},
    )


def deliver(
    cfg: SystemConfig,
    library: FileLibrary,
    placement: Placement,
    d: Sequence[int],
    strict_parity: bool = False,
) -> Delivery:
    stats = demand_stats(cfg, d)
    server = scheme1.server_transmissions(cfg, library, stats.demand, stats)
    mirrors = {}
    for m, cache in placement.mirrors.items():
        if placement.scheme == 1:
            mirrors[m] = scheme1.mirror_transmissions1(
                cfg, m, cache, server, stats.demand, strict_parity
            )
        else:
            mirrors[m] = scheme2.mirror_transmissions2(cfg, m, cache, server, stats.demand)
    return Delivery(server, mirrors)


def decode_all(
    cfg: SystemConfig,
    placement: Placement,
    delivery: Delivery,
    d: Sequence[int],
) -> dict[int, scheme1.DecodeResult]:
    dec = scheme1.user_decode1 if placement.scheme == 1 else scheme2.user_decode2
    return {
        k: dec(cfg, k, cache, delivery.mirrors[cfg.mirror_of(k)], d)
        for k, cache in placement.users.items()
    }


# ---------------------------------------------------------------- oracle


def _unit_columns(M: np.ndarray, p: int) -> set[int]:
    """Columns ``c`` such that the unit vector ``e_c`` lies in the row space of ``M``.

    After reduction to RREF, ``e_c`` is in the row space iff some row equals it.
    """
    M = M % p
    nrows, ncols = M.shape
    r = 0
    pivots = []
    for c in range(ncols):
        if r == nrows:
            break
        nz = np.flatnonzero(M[r:, c])
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            M[[r, piv]] = M[[piv, r]]
        M[r] = M[r] * pow(int(M[r, c]), p - 2, p) % p
        col = M[:, c].copy()
        col[r] = 0
        hit = np.flatnonzero(col)
        if hit.size:
            M[hit] = (M[hit] - np.outer(col[hit], M[r])) % p
        pivots.append((r, c))
        r += 1
    return {c for rr, c in pivots if np.count_nonzero(M[rr]) == 1}


def user_decodable(
    cfg: SystemConfig,
    rows: Sequence[Sequence[tuple[int, Subfile]]],
    n: int,
) -> tuple[tuple[int, int], ...]:
    """Pairs of file ``n`` NOT recoverable from the span of ``rows``."""
    p = cfg.p
    known = {terms[0][1] for terms in rows if len(terms) == 1 and terms[0][0] % p}
    rest = [[(c, s) for c, s in terms if s not in known] for terms in rows]
    rest = [t for t in rest if t]
    cols = sorted({s for t in rest for _, s in t})
    index = {s: i for i, s in enumerate(cols)}
    spanned = set(known)
    if rest:
        M = np.zeros((len(rest), len(cols)), dtype=np.int64)
        for r, t in enumerate(rest):
            for c, s in t:
                M[r, index[s]] = (M[r, index[s]] + c) % p
        spanned |= {cols[c] for c in _unit_columns(M, p)}
    return tuple((i, j) for i, j in cfg.pairs if Subfile(n, i, j) not in spanned)


def decodability_oracle(
    cfg: SystemConfig,
    scheme: int,
    d: Sequence[int],
    placement: Placement | None = None,
    delivery: Delivery | None = None,
    library: FileLibrary | None = None,
) -> dict[int, tuple[tuple[int, int], ...]]:
    """Per user, the pairs of its requested file outside the span of what it holds.

    Only labels are read: rows are the user's cache items plus every
    transmission of its mirror, unknowns are all ``N*K*(K-1)`` subfiles.
    """
    d = validate_demand(cfg, d)
    if placement is None or delivery is None:
        library = library or random_library(cfg, 0)
        placement = placement or place(cfg, scheme, library)
        delivery = delivery or deliver(cfg, library, placement, d)
    out = {}
    for k, cache in placement.users.items():
        rows = [it.terms for it in cache.items.values()]
        rows += [tx.terms for tx in delivery.mirrors[cfg.mirror_of(k)]]
        out[k] = user_decodable(cfg, rows, d[k - 1])
    return out


# ---------------------------------------------------------------- episodes


@dataclass
class UserOutcome:
    user: int
    file: int
    success: bool
    missing: tuple[tuple[int, int], ...]
    mismatch: bool = False

    def as_dict(self) -> dict:
        return {
            "user": self.user,
            "file": self.file,
            "success": self.success,
            "missing": [list(p) for p in self.missing],
            "payload_mismatch": self.mismatch,
        }


@dataclass
class EpisodeReport:
    cfg: SystemConfig
    scheme: int
    demand: tuple[int, ...]
    users: list[UserOutcome]
    phase_counts: dict[int, dict[str, int]]
    rates: RateReport
    per_mirror_counts: dict[int, int]
    oracle: dict[int, tuple[tuple[int, int], ...]] | None = None
    elapsed: float = 0.0
    anomalies: list[str] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return all(u.success for u in self.users)

    @property
    def oracle_agrees(self) -> bool | None:
        if self.oracle is None:
            return None
        return all(set(self.oracle[u.user]) == set(u.missing) for u in self.users)

    @property
    def missing_total(self) -> int:
        return sum(len(u.missing) for u in self.users)

    def as_dict(self, timing: bool = False) -> dict:
        out = {
            "config": self.cfg.as_dict(),
            "scheme": self.scheme,
            "demand": list(self.demand),
            "success": self.success,
            "users": [u.as_dict() for u in self.users],
            "phase_counts": {str(m): c for m, c in self.phase_counts.items()},
            "per_mirror_counts": {str(m): c for m, c in self.per_mirror_counts.items()},
            "rates": self.rates.as_dict(),
            "anomalies": list(self.anomalies),
        }
        if self.oracle is not None:
            out["oracle_agrees"] = self.oracle_agrees
        if timing:
            out["elapsed_s"] = self.elapsed
        return out


def run_episode(
    cfg: SystemConfig,
    scheme: int,
    d: Sequence[int],
    library: FileLibrary,
    placement: Placement | None = None,
    oracle: bool = False,
    strict_parity: bool = False,
) -> EpisodeReport:
    """Placement, server delivery, mirror delivery and user decoding for one demand.

    Decode failures are reported, not raised.
    """
    t0 = time.perf_counter()
    d = validate_demand(cfg, d)
    placement = placement or place(cfg, scheme, library)
    delivery = deliver(cfg, library, placement, d, strict_parity)
    results = decode_all(cfg, placement, delivery, d)
    users = []
    for k, res in sorted(results.items()):
        mismatch = res.payload is not None and not np.array_equal(
            res.payload, library.file(res.file)
        )
        users.append(UserOutcome(k, res.file, res.success and not mismatch, res.missing, mismatch))
    meas = measured_rates(delivery.server, delivery.mirrors, cfg)
    report = formula_report(cfg, scheme)
    report.measured_m1, report.measured_m2 = placement.measured_memories(cfg)
    report.measured_r1, report.measured_r2 = meas.r1, meas.r2
    report.measured_rbar = composite(meas.r1, meas.r2, cfg.k1)
    verdicts = None
    if oracle:
        verdicts = decodability_oracle(cfg, scheme, d, placement, delivery)
    return EpisodeReport(
        cfg,
        scheme,
        d,
        users,
        delivery.phase_counts(),
        report,
        meas.per_mirror,
        verdicts,
        time.perf_counter() - t0,
        list(meas.anomalies),
    )


# ---------------------------------------------------------------- sweeps


def count_surjections(K: int, N: int) -> int:
    return sum((-1) ** i * comb(N, i) * (N - i) ** K for i in range(N + 1))


def surjections(K: int, N: int) -> Iterator[tuple[int, ...]]:
    """All surjective demands ``[K] -> [N]`` in lexicographic order."""
    d = [0] * K
    seen = [0] * (N + 1)

    def rec(pos: int, covered: int):
        if pos == K:
            if covered == N:
                yield tuple(d)
            return
        for f in range(1, N + 1):
            new = covered + (seen[f] == 0)
            if N - new > K - pos - 1:
                continue
            d[pos] = f
            seen[f] += 1
            yield from rec(pos + 1, new)
            seen[f] -= 1

    yield from rec(0, 0)


def _completions(N: int, covered: int, remaining: int) -> int:
    """Ways to fill ``remaining`` slots so that all ``N`` files end up requested."""
    left = N - covered
    return sum((-1) ** i * comb(left, i) * (N - i) ** remaining for i in range(left + 1))


def random_demands(cfg: SystemConfig, seed: int, trials: int) -> list[tuple[int, ...]]:
    """``trials`` independent, uniformly distributed surjective demands.

    Each slot picks an already-requested or a new file with probability
    proportional to the number of surjective completions, so no draw is
    rejected (plain rejection from ``[N]^K`` stalls when ``N`` is close to ``K``).
    """
    rng = random.Random(seed)
    K, N = cfg.K, cfg.n
    out = []
    for _ in range(trials):
        d, order = [], []
        for pos in range(K):
            c = len(order)
            rest = K - pos - 1
            w_old = c * _completions(N, c, rest)
            w_new = (N - c) * _completions(N, c + 1, rest)
            if rng.randrange(w_old + w_new) < w_old:
                d.append(order[rng.randrange(c)])
            else:
                unseen = [f for f in range(1, N + 1) if f not in order]
                f = unseen[rng.randrange(len(unseen))]
                order.append(f)
                d.append(f)
        out.append(tuple(d))
    return out


@dataclass
class SweepReport:
    cfg: SystemConfig
    scheme: int
    mode: str
    seed: int
    trials: int | None
    attempted: int = 0
    passed: int = 0
    failures: list[dict] = field(default_factory=list)
    oracle_disagreements: list[dict] = field(default_factory=list)
    oracle_checked: int = 0
    rate_values: set[tuple[Fraction, Fraction]] = field(default_factory=set)
    memory_values: set[tuple[Fraction, Fraction]] = field(default_factory=set)
    phase_counts: dict[str, int] | None = None
    formula: RateReport | None = None
    anomalies: list[str] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def rates_invariant(self) -> bool:
        return len(self.rate_values) <= 1

    @property
    def measured(self) -> tuple[Fraction, Fraction] | None:
        return next(iter(self.rate_values)) if len(self.rate_values) == 1 else None

    @property
    def memory_audit(self) -> bool:
        f = self.formula
        return self.memory_values == {(f.m1, f.m2)}

    @property
    def rate_audit(self) -> bool:
        """Measured rates equal the closed forms (only meaningful when unflagged)."""
        f = self.formula
        return self.rate_values == {(f.r1, f.r2)}

    @property
    def ok(self) -> bool:
        audits = self.rates_invariant and self.memory_audit
        if not self.formula.flags:
            audits = audits and self.rate_audit
        return (
            self.passed == self.attempted
            and audits
            and not self.oracle_disagreements
            and not self.anomalies
        )

    def as_dict(self, timing: bool = False) -> dict:
        meas = self.measured
        out = {
            "config": self.cfg.as_dict(),
            "scheme": self.scheme,
            "mode": self.mode,
            "seed": self.seed,
            "trials": self.trials,
            "attempted": self.attempted,
            "passed": self.passed,
            "ok": self.ok,
            "rates_invariant": self.rates_invariant,
            "memory_audit": self.memory_audit,
            "rate_audit": self.rate_audit,
            "phase_counts": self.phase_counts,
            "formula": self.formula.as_dict(),
            "measured_r1": None if meas is None else str(meas[0]),
            "measured_r2": None if meas is None else str(meas[1]),
            "measured_rbar": None if meas is None else str(composite(meas[0], meas[1], self.cfg.k1)),
            "oracle_checked": self.oracle_checked,
            "oracle_disagreements": self.oracle_disagreements,
            "failures": self.failures,
            "anomalies": self.anomalies,
        }
        if timing:
            out["elapsed_s"] = self.elapsed
        return out


def _run_batch(args) -> list[EpisodeReport]:
    cfg, scheme, library, demands, oracle, strict = args
    placement = place(cfg, scheme, library)
    return [run_episode(cfg, scheme, d, library, placement, oracle, strict) for d in demands]


def sweep(
    cfg: SystemConfig,
    scheme: int,
    mode: str = "exhaustive",
    seed: int = 0,
    trials: int = 100,
    budget: int = DEFAULT_BUDGET,
    oracle: bool = True,
    workers: int = 1,
    strict_parity: bool = False,
    library: FileLibrary | None = None,
) -> SweepReport:
    """Run every surjective demand (``exhaustive``) or ``trials`` random ones.

    Unless ``library`` is given it is drawn from ``seed``; random demands use
    the same seed.
    """
    _check_scheme(scheme)
    library = library or random_library(cfg, seed)
    t0 = time.perf_counter()
    if mode == "exhaustive":
        total = count_surjections(cfg.K, cfg.n)
        if total > budget:
            raise BudgetExceeded(
                f"{total} surjective demands exceed the budget of {budget}; use random mode"
            )
        demands = list(surjections(cfg.K, cfg.n))
    elif mode == "random":
        demands = random_demands(cfg, seed, trials)
    else:
        raise ConfigurationError(f"unknown sweep mode {mode!r}")

    if workers > 1 and len(demands) > 1:
        size = -(-len(demands) // workers)
        chunks = [demands[i:i + size] for i in range(0, len(demands), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = pool.map(
                _run_batch, [(cfg, scheme, library, c, oracle, strict_parity) for c in chunks]
            )
            episodes = [ep for b in batches for ep in b]
    else:
        episodes = _run_batch((cfg, scheme, library, demands, oracle, strict_parity))

    rep = SweepReport(cfg, scheme, mode, seed, trials if mode == "random" else None)
    rep.formula = formula_report(cfg, scheme)
    for ep in episodes:
        rep.attempted += 1
        if ep.success:
            rep.passed += 1
        else:
            rep.failures.append(
                {
                    "demand": list(ep.demand),
                    "users": [u.as_dict() for u in ep.users if not u.success],
                }
            )
        if ep.oracle is not None:
            rep.oracle_checked += 1
            if not ep.oracle_agrees:
                rep.oracle_disagreements.append(
                    {
                        "demand": list(ep.demand),
                        "oracle": {str(k): [list(p) for p in v] for k, v in ep.oracle.items()},
                    }
                )
        rep.rate_values.add((ep.rates.measured_r1, ep.rates.measured_r2))
        rep.memory_values.add((ep.rates.measured_m1, ep.rates.measured_m2))
        if rep.phase_counts is None:
            rep.phase_counts = ep.phase_counts[1]
        for a in ep.anomalies:
            if a not in rep.anomalies:
                rep.anomalies.append(a)
    rep.elapsed = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------- traces


def golden_trace(
    cfg: SystemConfig | None = None,
    scheme: int = 1,
    d: Sequence[int] | None = None,
    mirror: int = 1,
    library: FileLibrary | None = None,
) -> list[str]:
    """Symbolic transcript: ``Y^1..Y^K`` then the given mirror's phases in order."""
    cfg = cfg or SystemConfig(3, 2, 6)
    d = validate_demand(cfg, d or range(1, cfg.K + 1))
    library = library or random_library(cfg, 0)
    placement = place(cfg, scheme, library)
    delivery = deliver(cfg, library, placement, d)
    lines = [f"Y^{tx.tag[0]} = {tx.describe(cfg.p)}" for tx in delivery.server]
    lines += [f"{tx.phase}: {tx.describe(cfg.p)}" for tx in delivery.mirrors[mirror]]
    return lines
