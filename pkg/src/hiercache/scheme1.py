"""First scheme: coded placement at the mirrors, uncoded placement at users.

Mirror ``m`` caches every subfile whose pair avoids its users ``U_m``, the
differences ``W^{k,succ(k)}_n - W^{kj}_n`` and the file-wise sums of
``W^{k,succ(k)}_n`` for its own users. Users cache the pairs that touch
``U_m`` but not themselves. Delivery: ``K`` coded server messages, then
five mirror phases A-E.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import IntegrityError
from .gf import GF
from .labels import (
    Cache,
    Transmission,
    diff_item,
    evaluate,
    sum_item,
    uncoded_item,
)
from .model import DemandStats, FileLibrary, Subfile, SystemConfig, demand_stats


def _outside_pairs(cfg: SystemConfig, U) -> list[tuple[int, int]]:
    return [(i, j) for i, j in cfg.pairs if i not in U and j not in U]


def place_mirror1(cfg: SystemConfig, library: FileLibrary, m: int) -> Cache:
    U = set(cfg.users_of_mirror(m))
    cache = Cache("mirror", m)
    for n in range(1, cfg.n + 1):
        for i, j in _outside_pairs(cfg, U):
            cache.add(uncoded_item(library, n, i, j))
    for k in sorted(U):
        for n in range(1, cfg.n + 1):
            for j in range(1, cfg.K + 1):
                # j = succ(k) would store the zero difference
                if j != k and j != cfg.succ(k):
                    cache.add(diff_item(library, k, j, n))
    for k in sorted(U):
        cache.add(sum_item(library, k))
    return cache


def user_pairs(cfg: SystemConfig, k: int) -> list[tuple[int, int]]:
    """Pairs user ``k`` stores uncoded: touching its mirror's block, avoiding ``k``."""
    U = set(cfg.users_of_mirror(cfg.mirror_of(k)))
    return [
        (i, j)
        for i, j in cfg.pairs
        if i != k and j != k and (i in U or j in U)
    ]


def place_user1(cfg: SystemConfig, library: FileLibrary, k: int) -> Cache:
    cache = Cache("user", k)
    for n in range(1, cfg.n + 1):
        for i, j in user_pairs(cfg, k):
            cache.add(uncoded_item(library, n, i, j))
    return cache


def server_transmissions(
    cfg: SystemConfig,
    library: FileLibrary,
    d: Sequence[int],
    stats: DemandStats | None = None,
) -> list[Transmission]:
    stats = stats or demand_stats(cfg, d)
    d = stats.demand
    out = []
    for k in range(1, cfg.K + 1):
        terms = tuple(
            (stats.coef(k, s), Subfile(d[s - 1], k, s))
            for s in range(1, cfg.K + 1)
            if s != k
        )
        out.append(Transmission(0, "SM", (k,), terms, evaluate(terms, library)))
    return out


def recover_row(
    cfg: SystemConfig,
    k: int,
    cache: Cache,
    y_payload: np.ndarray,
    stats: DemandStats,
) -> dict[Subfile, np.ndarray]:
    """Recover ``W^{kj}_{d_k}`` for every ``j != k`` from ``Y^k`` and the coded items.

    ``cache`` must hold the differences and the file-wise sum for user ``k``
    (the mirror's cache in the first scheme, the user's own in the second).
    """
    gf = cfg.field
    d = stats.demand
    sk = cfg.succ(k)
    acc = y_payload
    for j in range(1, cfg.K + 1):
        if j == k or j == sk:
            continue
        item = cache.get("diff", k, j, d[j - 1])
        if item is None:
            raise IntegrityError(f"{cache.owner} {cache.index} lacks diff ({k},{j},{d[j - 1]})")
        acc = gf.axpy(stats.coef(k, j), item.payload, acc)
    # acc = sum_{n != d_k} W^{k,sk}_n, minus W^{k,sk}_{d_k} if another user shares d_k
    total = cache.get("sum", k)
    if total is None:
        raise IntegrityError(f"{cache.owner} {cache.index} lacks the sum item for user {k}")
    factor = 2 if stats.same_demand_count(k) > 0 else 1
    if factor % gf.p == 0:
        raise IntegrityError(f"cannot halve in GF({gf.p})")
    head = gf.scale(gf.inv(factor), gf.vsub(total.payload, acc))
    dk = d[k - 1]
    out = {Subfile(dk, k, sk): head}
    for j in range(1, cfg.K + 1):
        if j == k or j == sk:
            continue
        item = cache.get("diff", k, j, dk)
        if item is None:
            raise IntegrityError(f"{cache.owner} {cache.index} lacks diff ({k},{j},{dk})")
        out[Subfile(dk, k, j)] = gf.vsub(head, item.payload)
    return out


def mirror_recover_own_subfiles(
    cfg: SystemConfig,
    m: int,
    cache: Cache,
    server_tx: Sequence[Transmission],
    d: Sequence[int],
) -> dict[int, dict[Subfile, np.ndarray]]:
    stats = demand_stats(cfg, d)
    by_user = {tx.tag[0]: tx for tx in server_tx}
    out = {}
    for k in cfg.users_of_mirror(m):
        if k not in by_user:
            raise IntegrityError(f"server message Y^{k} missing")
        out[k] = recover_row(cfg, k, cache, by_user[k].payload, stats)
    return out


def transmissions_a(
    cfg: SystemConfig,
    m: int,
    cache: Cache,
    server_tx: Sequence[Transmission],
) -> list[Transmission]:
    """Forward ``Y^k`` for own users; strip outside-pair terms for the rest."""
    gf = cfg.field
    U = set(cfg.users_of_mirror(m))
    out = []
    for tx in server_tx:
        k = tx.tag[0]
        if k in U:
            out.append(Transmission(m, "A", (k,), tx.terms, tx.payload))
            continue
        payload = tx.payload
        kept = []
        for c, sid in tx.terms:
            if sid.j in U:
                kept.append((c, sid))
                continue
            item = cache.get("uncoded", *sid)
            if item is None:
                raise IntegrityError(f"mirror {m} cannot strip {sid} from Y^{k}")
            payload = gf.axpy(-c, item.payload, payload)
        out.append(Transmission(m, "A", (k,), tuple(kept), payload))
    return out


def transmissions_b(cfg: SystemConfig, m: int, cache: Cache, d: Sequence[int]) -> list[Transmission]:
    U = cfg.users_of_mirror(m)
    out = []
    for k in U:
        for i, j in _outside_pairs(cfg, set(U)):
            item = cache.get("uncoded", d[k - 1], i, j)
            if item is None:
                raise IntegrityError(f"mirror {m} lacks W^{{{i}{j}}}_{d[k - 1]}")
            out.append(Transmission(m, "B", (k, i, j), item.terms, item.payload))
    return out


def parity_classes(cfg: SystemConfig, m: int, strict: bool = False) -> list[tuple[str, tuple[int, ...]]]:
    """Groups of users whose ``W^{k,succ(k)}_{d_k}`` are summed in phase C.

    Grouping is by parity of the global user index. With a single mirror and
    odd ``K`` the pairs ``(K, 1)`` and ``(1, 2)`` would land in the same odd
    class, and user 1 has no way to cancel ``W^{K1}_{d_K}``; unless
    ``strict`` is set, user ``K`` then gets its own class.
    """
    U = cfg.users_of_mirror(m)
    odd = [k for k in U if k % 2 == 1]
    even = [k for k in U if k % 2 == 0]
    extra = []
    if not strict and cfg.K % 2 == 1 and 1 in U and cfg.K in U:
        odd.remove(cfg.K)
        extra = [cfg.K]
    classes = [("odd", tuple(odd)), ("even", tuple(even)), ("wrap", tuple(extra))]
    return [(name, ks) for name, ks in classes if ks]


def next_first(cfg: SystemConfig, m: int) -> int:
    """First user of the next mirror, cyclically."""
    return cfg.wrap(m * cfg.k2 + 1)


def _sum_tx(cfg, m, phase, tag, sids, known) -> Transmission:
    gf = cfg.field
    payload = gf.zeros(cfg.l)
    for sid in sids:
        payload = gf.vadd(payload, known[sid])
    return Transmission(m, phase, tag, tuple((1, sid) for sid in sids), payload)


def mirror_transmissions1(
    cfg: SystemConfig,
    m: int,
    cache: Cache,
    server_tx: Sequence[Transmission],
    d: Sequence[int],
    strict_parity: bool = False,
) -> list[Transmission]:
    recovered = mirror_recover_own_subfiles(cfg, m, cache, server_tx, d)
    known = {sid: v for row in recovered.values() for sid, v in row.items()}
    U = cfg.users_of_mirror(m)
    nf = next_first(cfg, m)
    out = transmissions_a(cfg, m, cache, server_tx)
    out += transmissions_b(cfg, m, cache, d)
    for name, ks in parity_classes(cfg, m, strict_parity):
        sids = [Subfile(d[k - 1], k, cfg.succ(k)) for k in ks]
        out.append(_sum_tx(cfg, m, "C", (name,), sids, known))
    for j in range(1, cfg.K + 1):
        if j in U or j == nf:
            continue
        sids = [Subfile(d[k - 1], k, j) for k in U]
        out.append(_sum_tx(cfg, m, "D", (j,), sids, known))
    targets = list(U) + ([nf] if nf not in U else [])
    for s in targets:
        ks = [k for k in U if k not in (cfg.pred(s), s)]
        if not ks:
            continue
        sids = [Subfile(d[k - 1], k, s) for k in ks]
        out.append(_sum_tx(cfg, m, "E", (s,), sids, known))
    return out


@dataclass
class DecodeResult:
    user: int
    file: int
    payload: np.ndarray | None = field(repr=False)
    missing: tuple[tuple[int, int], ...]
    sources: dict[tuple[int, int], str] = field(default_factory=dict, repr=False)

    @property
    def success(self) -> bool:
        return not self.missing


def peel(
    tx: Transmission,
    known: dict[Subfile, np.ndarray],
    gf: GF,
    accept: Callable[[Subfile], bool],
) -> tuple[Subfile, np.ndarray] | None:
    """Solve ``tx`` for its only unknown term, if there is exactly one and it is wanted."""
    unknown = [(c, sid) for c, sid in tx.terms if sid not in known]
    if len(unknown) != 1 or not accept(unknown[0][1]):
        return None
    c, sid = unknown[0]
    val = tx.payload
    for c2, sid2 in tx.terms:
        if sid2 in known:
            val = gf.axpy(-c2, known[sid2], val)
    return sid, gf.scale(gf.inv(c), val)


def wants(k: int, n: int) -> Callable[[Subfile], bool]:
    return lambda sid: sid.n == n and (sid.i == k or sid.j == k)


def assemble(cfg: SystemConfig, k: int, n: int, known, sources) -> DecodeResult:
    parts, missing = [], []
    for i, j in cfg.pairs:
        v = known.get(Subfile(n, i, j))
        if v is None:
            missing.append((i, j))
        else:
            parts.append(v)
    payload = np.concatenate(parts) if not missing else None
    return DecodeResult(k, n, payload, tuple(missing), sources)


def user_decode1(
    cfg: SystemConfig,
    k: int,
    cache: Cache,
    mirror_tx: Sequence[Transmission],
    d: Sequence[int],
) -> DecodeResult:
    gf = cfg.field
    n = d[k - 1]
    known = cache.uncoded()
    sources = {(s.i, s.j): "cache" for s in known if s.n == n}
    for tx in mirror_tx:
        if tx.phase == "B":
            sid = tx.terms[0][1]
            known[sid] = tx.payload
            if sid.n == n:
                sources[(sid.i, sid.j)] = "B"
    accept = wants(k, n)
    for phase in "ACDE":
        for tx in mirror_tx:
            if tx.phase != phase:
                continue
            hit = peel(tx, known, gf, accept)
            if hit is not None:
                sid, val = hit
                known[sid] = val
                sources[(sid.i, sid.j)] = phase
    return assemble(cfg, k, n, known, sources)
