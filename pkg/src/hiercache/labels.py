"""Symbolically labelled payloads shared by both schemes.

A label is a tuple of ``(coefficient, Subfile)`` terms with coefficients
already reduced into the field. Payloads are computed by whoever builds
the item from the data it actually holds; :func:`evaluate` recomputes a
label from the library so the two can be checked against each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .model import FileLibrary, Subfile, SystemConfig

Terms = tuple[tuple[int, Subfile], ...]


def evaluate(terms: Iterable[tuple[int, Subfile]], library: FileLibrary) -> np.ndarray:
    gf = library.cfg.field
    acc = gf.zeros(library.cfg.l)
    for c, sid in terms:
        acc = gf.axpy(c, library.subfile(sid), acc)
    return acc


def format_terms(terms: Sequence[tuple[int, Subfile]], p: int) -> str:
    out = []
    for c, sid in terms:
        if c == 1:
            sign, body = "+", str(sid)
        elif c == p - 1:
            sign, body = "-", str(sid)
        else:
            sign, body = "+", f"{c}*{sid}"
        if not out:
            out.append(body if sign == "+" else f"-{body}")
        else:
            out.append(f"{sign} {body}")
    return " ".join(out)


@dataclass(frozen=True, eq=False)
class CachedItem:
    """One stored subfile-sized payload.

    ``kind`` is ``"uncoded"`` (key ``(n, i, j)``), ``"diff"`` (key
    ``(k, j, n)``: ``W^{k,succ(k)}_n - W^{kj}_n``) or ``"sum"`` (key ``(k,)``:
    the sum over all files of ``W^{k,succ(k)}_n``).
    """

    kind: str
    key: tuple[int, ...]
    terms: Terms
    payload: np.ndarray = field(repr=False)


def uncoded_item(library: FileLibrary, n: int, i: int, j: int) -> CachedItem:
    sid = Subfile(n, i, j)
    return CachedItem("uncoded", (n, i, j), ((1, sid),), library.subfile(sid))


def diff_item(library: FileLibrary, k: int, j: int, n: int) -> CachedItem:
    cfg = library.cfg
    terms = ((1, Subfile(n, k, cfg.succ(k))), (cfg.p - 1, Subfile(n, k, j)))
    return CachedItem("diff", (k, j, n), terms, evaluate(terms, library))


def sum_item(library: FileLibrary, k: int) -> CachedItem:
    cfg = library.cfg
    terms = tuple((1, Subfile(n, k, cfg.succ(k))) for n in range(1, cfg.n + 1))
    return CachedItem("sum", (k,), terms, evaluate(terms, library))


@dataclass(eq=False)
class Cache:
    """Contents of one mirror or user cache, keyed by ``(kind, *key)``."""

    owner: str  # "mirror" | "user"
    index: int
    items: dict[tuple, CachedItem] = field(default_factory=dict, repr=False)

    def add(self, item: CachedItem) -> None:
        self.items[(item.kind, *item.key)] = item

    def get(self, kind: str, *key: int) -> CachedItem | None:
        return self.items.get((kind, *key))

    def count(self, kind: str | None = None) -> int:
        if kind is None:
            return len(self.items)
        return sum(1 for it in self.items.values() if it.kind == kind)

    def uncoded(self) -> dict[Subfile, np.ndarray]:
        return {
            Subfile(*it.key): it.payload
            for it in self.items.values()
            if it.kind == "uncoded"
        }

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True, eq=False)
class Transmission:
    """A broadcast payload: ``origin`` is 0 for the server or the mirror index.

    ``phase`` is one of ``SM, A, B, C, D, E``; ``tag`` records the index the
    phase iterates over (user ``k`` for SM/A, column ``j``/``s`` for D/E,
    class id for C, ``(k, i, j)`` for B).
    """

    origin: int
    phase: str
    tag: tuple
    terms: Terms
    payload: np.ndarray = field(repr=False)

    def describe(self, p: int) -> str:
        return format_terms(self.terms, p)
