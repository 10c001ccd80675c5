"""Closed-form and measured memories/rates, all as exact fractions.

Memories are in files, rates in files per broadcast; one subfile is
``1/(K(K-1))`` of a file. Decimal rendering happens only in :func:`render`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from math import comb
from typing import Mapping, Sequence

from .labels import Transmission
from .model import SystemConfig

FLAG_K1_ONE = "r2-formula-unvalidated-for-k1=1"
FLAG_UNEQUAL_MIRRORS = "unequal-per-mirror-counts"


def binom(n: int, k: int) -> int:
    """Binomial coefficient, zero outside ``0 <= k <= n``."""
    if k < 0 or n < 0 or k > n:
        return 0
    return comb(n, k)


def memories_scheme1(cfg: SystemConfig) -> tuple[Fraction, Fraction]:
    K, K2, N = cfg.K, cfg.k2, cfg.n
    T = K * (K - 1)
    m1 = Fraction((K - K2) * (K - K2 - 1) * N + K2 * (K - 2) * N + K2, T)
    m2 = Fraction(((K - 1) * (K - 2) - (K - K2) * (K - K2 - 1)) * N, T)
    return m1, m2


def memories_scheme2(cfg: SystemConfig) -> tuple[Fraction, Fraction]:
    K, K2, N = cfg.K, cfg.k2, cfg.n
    T = K * (K - 1)
    m1 = Fraction((K - K2) * (K - K2 - 1) * N, T)
    m2 = Fraction(N * (K * (K - 2) - (K - K2) * (K - K2 - 1)) + 1, T)
    return m1, m2


def r1(cfg: SystemConfig) -> Fraction:
    return Fraction(1, cfg.K - 1)


def r2_scheme1(cfg: SystemConfig) -> Fraction:
    """Closed form for the mirror rate of the first scheme.

    Only validated for ``K1 >= 2``; see :func:`formula_flags`.
    """
    K, K2 = cfg.K, cfg.k2
    count = 2 * (K + 1 + K2 * binom(K - K2, 2))
    if K2 == 2:
        count -= 1  # one E-phase sum is empty
    return Fraction(count, K * (K - 1))


def r2_scheme2(cfg: SystemConfig) -> Fraction:
    K, K2 = cfg.K, cfg.k2
    return Fraction(K + 2 * K2 * binom(K - K2, 2), K * (K - 1))


def composite(r1_: Fraction, r2_: Fraction, k1: int) -> Fraction:
    return Fraction(r1_) + k1 * Fraction(r2_)


def formula_flags(cfg: SystemConfig, scheme: int) -> list[str]:
    if scheme == 1 and cfg.k1 == 1:
        return [FLAG_K1_ONE]
    return []


def memories(cfg: SystemConfig, scheme: int) -> tuple[Fraction, Fraction]:
    return memories_scheme1(cfg) if scheme == 1 else memories_scheme2(cfg)


def r2(cfg: SystemConfig, scheme: int) -> Fraction:
    return r2_scheme1(cfg) if scheme == 1 else r2_scheme2(cfg)


@dataclass
class MeasuredRates:
    r1: Fraction
    r2: Fraction
    server_count: int
    per_mirror: dict[int, int]
    anomalies: list[str] = field(default_factory=list)


def measured_rates(
    server_tx: Sequence[Transmission],
    mirror_tx: Mapping[int, Sequence[Transmission]],
    cfg: SystemConfig,
) -> MeasuredRates:
    T = cfg.T
    per_mirror = {m: len(txs) for m, txs in sorted(mirror_tx.items())}
    anomalies = []
    if len(set(per_mirror.values())) > 1:
        anomalies.append(FLAG_UNEQUAL_MIRRORS)
    worst = max(per_mirror.values(), default=0)
    return MeasuredRates(
        Fraction(len(server_tx), T), Fraction(worst, T), len(server_tx), per_mirror, anomalies
    )


@dataclass
class RateReport:
    scheme: int
    m1: Fraction
    m2: Fraction
    r1: Fraction
    r2: Fraction
    rbar: Fraction
    measured_m1: Fraction | None = None
    measured_m2: Fraction | None = None
    measured_r1: Fraction | None = None
    measured_r2: Fraction | None = None
    measured_rbar: Fraction | None = None
    flags: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        out = {"scheme": self.scheme, "flags": list(self.flags)}
        for name in ("m1", "m2", "r1", "r2", "rbar"):
            for prefix in ("", "measured_"):
                v = getattr(self, prefix + name)
                out[prefix + name] = None if v is None else str(v)
        return out


def formula_report(cfg: SystemConfig, scheme: int) -> RateReport:
    m1, m2 = memories(cfg, scheme)
    a, b = r1(cfg), r2(cfg, scheme)
    return RateReport(scheme, m1, m2, a, b, composite(a, b, cfg.k1), flags=formula_flags(cfg, scheme))


def render(x: Fraction, places: int = 2) -> str:
    """Decimal string rounded half-up."""
    q = Decimal(1).scaleb(-places)
    return str((Decimal(x.numerator) / Decimal(x.denominator)).quantize(q, rounding=ROUND_HALF_UP))
