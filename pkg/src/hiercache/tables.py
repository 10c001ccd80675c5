"""Rate/memory table rows and achievability points for the CLI.

Every row carries a ``source``: ``computed`` (closed forms), ``measured``
(counted from one simulated episode) or ``published`` (values printed in the
source tables, loaded verbatim from ``data/published_tables.json``).
"""

from __future__ import annotations

import json
from decimal import Decimal
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Iterable

from .errors import HierCacheError
from .harness import run_episode
from .model import SystemConfig, random_library
from .rates import composite, formula_report, render

CSV_FIELDS = [
    "n", "k1", "k2", "scheme",
    "m1_frac", "m2_frac", "r1_frac", "r2_frac", "rbar_frac",
    "m1", "m2", "r1", "r2", "rbar",
    "source", "flags",
]
POINT_FIELDS = ["label", "m1_frac", "m2_frac", "r1_frac", "r2_frac", "rbar_frac",
                "m1", "m2", "r1", "r2", "rbar", "source", "flags"]
DEFAULT_ROWS = [(3, 1, 3), (8, 4, 2), (10, 5, 2), (12, 6, 2), (14, 7, 2)]
BASELINES = ("WWCY", "KNMD", "ZWXWLL")
PUBLISHED_TOLERANCE = Fraction(1, 100)


@lru_cache(maxsize=None)
def published_tables() -> dict:
    text = resources.files("hiercache").joinpath("data/published_tables.json").read_text()
    return json.loads(text)


def published_row(n: int, k1: int, k2: int, scheme: int) -> dict | None:
    """Printed row for ``(n, k1, k2)`` from the table belonging to ``scheme``."""
    table = published_tables()["tables"]["I" if scheme == 1 else "II"]
    for row in table["rows"]:
        if (row["n"], row["k1"], row["k2"]) == (n, k1, k2):
            return row
    return None


def _rate_fields(values: dict[str, Fraction | None]) -> dict:
    out = {}
    for name, v in values.items():
        out[f"{name}_frac"] = "" if v is None else str(v)
        out[name] = "" if v is None else render(v)
    return out


def default_demand(cfg: SystemConfig) -> tuple[int, ...]:
    """``d_k = ((k-1) mod N) + 1``, surjective whenever ``N <= K``."""
    return tuple((k - 1) % cfg.n + 1 for k in range(1, cfg.K + 1))


def _far(a: Fraction, printed: str) -> bool:
    return abs(a - Fraction(Decimal(printed))) > PUBLISHED_TOLERANCE


def table_rows(
    triples: Iterable[tuple[int, int, int]] = DEFAULT_ROWS,
    schemes: Iterable[int] = (1, 2),
    measured: bool = True,
    with_baselines: bool = False,
) -> list[dict]:
    rows = []
    for n, k1, k2 in triples:
        try:
            cfg = SystemConfig(k1, k2, n)
        except HierCacheError as exc:
            rows.append({"n": n, "k1": k1, "k2": k2, "source": "error", "flags": str(exc)})
            continue
        for scheme in schemes:
            rep = formula_report(cfg, scheme)
            base = {"n": n, "k1": k1, "k2": k2, "scheme": str(scheme)}
            rows.append({
                **base,
                **_rate_fields({"m1": rep.m1, "m2": rep.m2, "r1": rep.r1, "r2": rep.r2, "rbar": rep.rbar}),
                "source": "computed",
                "flags": ";".join(rep.flags),
            })
            meas_vals = None
            if measured:
                ep = run_episode(cfg, scheme, default_demand(cfg), random_library(cfg, 0))
                mr, mr2 = ep.rates.measured_r1, ep.rates.measured_r2
                meas_vals = (mr, mr2, composite(mr, mr2, k1))
                flags = list(ep.anomalies)
                if (mr, mr2) != (rep.r1, rep.r2):
                    flags.append("measured-differs-from-formula")
                if not ep.success:
                    flags.append("decode-failure")
                rows.append({
                    **base,
                    **_rate_fields({
                        "m1": ep.rates.measured_m1, "m2": ep.rates.measured_m2,
                        "r1": mr, "r2": mr2, "rbar": meas_vals[2],
                    }),
                    "source": "measured",
                    "flags": ";".join(flags),
                })
            printed = published_row(n, k1, k2, scheme)
            if printed is not None:
                vals = printed[str(scheme)]
                ref = meas_vals or (rep.r1, rep.r2, rep.rbar)
                off = [name for name, ours, theirs in zip(("r1", "r2", "rbar"), ref, vals) if _far(ours, theirs)]
                rows.append({
                    **base,
                    **{f"{c}_frac": "" for c in ("m1", "m2", "r1", "r2", "rbar")},
                    "m1": "", "m2": "", "r1": vals[0], "r2": vals[1], "rbar": vals[2],
                    "source": "published",
                    "flags": ";".join(f"published-differs:{name}" for name in off),
                })
        if with_baselines:
            for scheme in schemes:
                printed = published_row(n, k1, k2, scheme)
                if printed is None:
                    continue
                table = "I" if scheme == 1 else "II"
                for name in BASELINES:
                    vals = printed[name]
                    rows.append({
                        "n": n, "k1": k1, "k2": k2, "scheme": name,
                        **{f"{c}_frac": "" for c in ("m1", "m2", "r1", "r2", "rbar")},
                        "m1": "", "m2": "", "r1": vals[0], "r2": vals[1], "rbar": vals[2],
                        "source": "published",
                        "flags": f"table-{table}",
                    })
    return rows


def points(cfg: SystemConfig) -> list[dict]:
    """Trivial corner points plus the two scheme points, for external plotting."""
    N, K1, K2 = cfg.n, cfg.k1, cfg.k2
    zero = Fraction(0)
    corners = [
        ("corner-user-full", zero, Fraction(N), zero, zero, "as-published"),
        ("corner-mirror-full", Fraction(N), zero, zero, Fraction(K2), ""),
        ("corner-both-full", Fraction(N), Fraction(N), zero, zero, ""),
    ]
    out = []
    for label, m1, m2, a, b, flag in corners:
        out.append({
            "label": label,
            **_rate_fields({"m1": m1, "m2": m2, "r1": a, "r2": b, "rbar": composite(a, b, K1)}),
            "source": "published",
            "flags": flag,
        })
    for scheme in (1, 2):
        rep = formula_report(cfg, scheme)
        out.append({
            "label": f"scheme-{scheme}",
            **_rate_fields({"m1": rep.m1, "m2": rep.m2, "r1": rep.r1, "r2": rep.r2, "rbar": rep.rbar}),
            "source": "computed",
            "flags": ";".join(rep.flags),
        })
    return out
