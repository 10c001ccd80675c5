"""Second scheme: the coded items move from the mirrors into the user caches.

Mirrors keep only the subfiles whose pair avoids their own users and
forward phases A and B of the first scheme; each user runs the coded
recovery itself.
"""

from __future__ import annotations

from typing import Sequence

from .errors import IntegrityError
from .labels import Cache, Transmission, diff_item, sum_item, uncoded_item
from .model import FileLibrary, SystemConfig, demand_stats
from .scheme1 import (
    DecodeResult,
    assemble,
    peel,
    recover_row,
    transmissions_a,
    transmissions_b,
    user_pairs,
    wants,
)


def place_mirror2(cfg: SystemConfig, library: FileLibrary, m: int) -> Cache:
    U = set(cfg.users_of_mirror(m))
    cache = Cache("mirror", m)
    for n in range(1, cfg.n + 1):
        for i, j in cfg.pairs:
            if i not in U and j not in U:
                cache.add(uncoded_item(library, n, i, j))
    return cache


def place_user2(cfg: SystemConfig, library: FileLibrary, k: int) -> Cache:
    cache = Cache("user", k)
    for n in range(1, cfg.n + 1):
        for i, j in user_pairs(cfg, k):
            cache.add(uncoded_item(library, n, i, j))
    sk = cfg.succ(k)
    for n in range(1, cfg.n + 1):
        for j in range(1, cfg.K + 1):
            if j != k and j != sk:
                cache.add(diff_item(library, k, j, n))
    cache.add(sum_item(library, k))
    return cache


def mirror_transmissions2(
    cfg: SystemConfig,
    m: int,
    cache: Cache,
    server_tx: Sequence[Transmission],
    d: Sequence[int],
) -> list[Transmission]:
    return transmissions_a(cfg, m, cache, server_tx) + transmissions_b(cfg, m, cache, d)


def user_decode2(
    cfg: SystemConfig,
    k: int,
    cache: Cache,
    mirror_tx: Sequence[Transmission],
    d: Sequence[int],
) -> DecodeResult:
    gf = cfg.field
    stats = demand_stats(cfg, d)
    n = stats.demand[k - 1]
    known = cache.uncoded()
    sources = {(s.i, s.j): "cache" for s in known if s.n == n}
    own = None
    for tx in mirror_tx:
        if tx.phase == "B":
            sid = tx.terms[0][1]
            known[sid] = tx.payload
            if sid.n == n:
                sources[(sid.i, sid.j)] = "B"
        elif tx.phase == "A" and tx.tag == (k,):
            own = tx
    accept = wants(k, n)
    for tx in mirror_tx:
        if tx.phase != "A":
            continue
        hit = peel(tx, known, gf, accept)
        if hit is not None:
            sid, val = hit
            known[sid] = val
            sources[(sid.i, sid.j)] = "A"
    if own is not None:
        try:
            row = recover_row(cfg, k, cache, own.payload, stats)
        except IntegrityError:
            row = {}
        for sid, val in row.items():
            known[sid] = val
            sources[(sid.i, sid.j)] = "coded"
    return assemble(cfg, k, n, known, sources)
