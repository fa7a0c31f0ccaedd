"""Nonparametric comparison pipeline.

Brunner-Munzel rank test with midrank tie handling, Satterthwaite degrees of
freedom and a two-sided t-distribution p-value; Bonferroni correction; and a
report that places simulated summaries next to the published human-human /
human-soft-robot benchmark statistics shipped in ``data/reference_tables.json``.

The published values are display context and ordering references only; they
are never oracles for computed p-values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np
from scipy import stats as sps

from .metrics import TASK_ROW_ORDER, TaskSummary
from .model import ParameterError


@dataclass(frozen=True)
class BmResult:
    statistic: float
    df: float
    p_value: float
    p_hat: float        # relative effect P(X < Y) + 0.5 P(X = Y)
    degenerate: bool


def brunner_munzel(a: Sequence[float], b: Sequence[float]) -> BmResult:
    """Two-sided Brunner-Munzel test of samples ``a`` vs ``b``.

    ``p_hat`` estimates the probability that a draw from ``a`` is below a draw
    from ``b`` (ties counted half). When both rank variances vanish (complete
    separation or two constant samples) the t statistic is undefined; the
    result is flagged degenerate and carries the one-sided limiting p-value
    (0 for separation, 1 for indistinguishable samples).
    """
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    na, nb = len(x), len(y)
    if na < 2 or nb < 2:
        raise ParameterError(f"need at least 2 samples per group, got {na} and {nb}")
    ranks = sps.rankdata(np.concatenate([x, y]))
    ra, rb = ranks[:na], ranks[na:]
    ra_mean = ra.mean()
    rb_mean = rb.mean()
    # p_hat in the 0.5 + (difference of mean ranks)/N form: negating the rank
    # difference is exact in floating point, so swapping the samples gives
    # exactly 1 - p_hat.
    p_hat = 0.5 + (rb_mean - ra_mean) / (na + nb)

    ria = sps.rankdata(x)
    rib = sps.rankdata(y)
    sa2 = np.sum((ra - ria - ra_mean + (na + 1) / 2.0) ** 2) / (na - 1)
    sb2 = np.sum((rb - rib - rb_mean + (nb + 1) / 2.0) ** 2) / (nb - 1)

    if sa2 == 0.0 and sb2 == 0.0:
        if p_hat == 0.5:
            return BmResult(0.0, math.nan, 1.0, float(p_hat), True)
        stat = math.inf if p_hat > 0.5 else -math.inf
        return BmResult(stat, math.nan, 0.0, float(p_hat), True)

    stat = na * nb * (rb_mean - ra_mean) / ((na + nb) * math.sqrt(na * sa2 + nb * sb2))
    df = (na * sa2 + nb * sb2) ** 2 / (
        (na * sa2) ** 2 / (na - 1) + (nb * sb2) ** 2 / (nb - 1)
    )
    p = 2.0 * float(sps.t.sf(abs(stat), df))
    return BmResult(float(stat), float(df), min(1.0, p), float(p_hat), False)


def bonferroni(p_values: Sequence[float], m: int | None = None) -> list:
    """Multiply each p by the family size ``m`` (default: len(p)), clamp at 1."""
    p_list = list(p_values)
    if m is None:
        m = len(p_list)
    if m < len(p_list):
        raise ParameterError(f"family size {m} smaller than the {len(p_list)} tests given")
    return [min(1.0, p * m) for p in p_list]


# ---------------------------------------------------------------------------
# Published benchmark reference


def load_reference() -> dict:
    """The packaged benchmark summary tables (see the JSON description field)."""
    text = resources.files("comanip.data").joinpath("reference_tables.json").read_text()
    return json.loads(text)


_ROW_KEYS = {  # ASCII summary codes -> reference table keys
    "x+": "x+", "x-": "x-", "x±": "x±", "y+": "y+", "y-": "y-", "y±": "y±",
    "xy++": "xy++", "xy--": "xy--", "xy±±": "xy±±", "overall": "overall",
}


@dataclass(frozen=True)
class CompareRow:
    task_code: str
    sim_n: int | None
    sim_mean: float | None
    sim_sd: float | None
    hh_mean: float
    hh_sd: float
    hsr_mean: float
    hsr_sd: float
    p_display: str
    significant: bool


def compare_report(sim_summaries: Sequence[TaskSummary], metric: str,
                   reference: dict | None = None) -> list:
    """Side-by-side rows: simulated mean+-sd next to the published HH and HSR values.

    ``metric`` selects the reference table (``"completion_time"`` or
    ``"scaled_path_length"``). Simulated rows missing from the input appear
    with empty sim columns; rows outside the published table are skipped.
    """
    if reference is None:
        reference = load_reference()
    if metric not in reference:
        raise ParameterError(f"unknown reference metric {metric!r}")
    table = reference[metric]
    by_code = {s.task_code: s for s in sim_summaries}
    rows = []
    for code in TASK_ROW_ORDER:
        key = _ROW_KEYS.get(code)
        if key is None or key not in table:
            continue
        ref_row = table[key]
        sim = by_code.get(code)
        rows.append(CompareRow(
            task_code=code,
            sim_n=sim.n if sim else None,
            sim_mean=sim.mean if sim else None,
            sim_sd=sim.sd if sim else None,
            hh_mean=ref_row["hh_mean"],
            hh_sd=ref_row["hh_sd"],
            hsr_mean=ref_row["hsr_mean"],
            hsr_sd=ref_row["hsr_sd"],
            p_display=ref_row["p_display"],
            significant=ref_row["significant"],
        ))
    return rows


def format_report(rows: Sequence[CompareRow], metric: str) -> str:
    """Aligned text table; published p-values under 0.05 are marked with '*'."""
    header = f"{'task':>8}  {'sim (mean ± sd)':>20}  {'HH (mean ± sd)':>18}  {'HSR (mean ± sd)':>18}  {'p (HH vs HSR)':>14}"
    lines = [f"metric: {metric}", header, "-" * len(header)]
    for r in rows:
        if r.sim_mean is None:
            sim = "-"
        else:
            sim = f"{r.sim_mean:.2f} ± {r.sim_sd:.2f} (n={r.sim_n})"
        mark = "*" if r.significant else " "
        lines.append(
            f"{r.task_code:>8}  {sim:>20}  {r.hh_mean:>7.2f} ± {r.hh_sd:<4.2f}     "
            f"{r.hsr_mean:>7.2f} ± {r.hsr_sd:<4.2f}     {r.p_display:>12}{mark}"
        )
    return "\n".join(lines) + "\n"


def report_to_dict(rows: Sequence[CompareRow], metric: str) -> dict:
    return {
        "metric": metric,
        "rows": [
            {
                "task": r.task_code,
                "sim": None if r.sim_mean is None else {"n": r.sim_n, "mean": r.sim_mean, "sd": r.sim_sd},
                "hh": {"mean": r.hh_mean, "sd": r.hh_sd},
                "hsr": {"mean": r.hsr_mean, "sd": r.hsr_sd},
                "p_display": r.p_display,
                "significant": r.significant,
            }
            for r in rows
        ],
    }
