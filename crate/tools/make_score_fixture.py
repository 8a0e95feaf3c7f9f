"""Builds the synthetic score fixture used by the CLI tests.

Writes crates/cli/tests/fixtures/scores.csv and expected.json. Expected
values are computed here with numpy/scipy, independently of the Rust code:
per-item and pooled means (pooled = per-listener mean over items, then mean
over listeners) and two-sided Wilcoxon signed-rank p-values. Per-item
differences are drawn without ties or zeros so scipy's exact method applies;
pooled p-values use full 2^n sign-flip enumeration with mid-ranks.
"""

import csv
import itertools
import json
import pathlib

import numpy as np
from scipy import stats

OUT = pathlib.Path(__file__).resolve().parent.parent / "crates" / "cli" / "tests" / "fixtures"
LISTENERS = [f"L{i:02d}" for i in range(1, 17)]
SERIES = {
    "SHmix": (["Pop", "glock"], ["SH30-LR", "SH30-MS", "SH10-LR", "SH10-MS", "mono", "LP3500", "LP7000", "ref"]),
    "QNmix": (["RnB", "panDialogM"], ["QN6-LR", "QN6-MS", "QN12-LR", "QN12-MS", "mono", "LP3500", "LP7000", "ref"]),
    "QNLR": (["violin"], ["QN0-LR", "QN6-LR", "QN12-LR", "QN18-LR", "QN24-LR", "LP3500", "LP7000", "ref"]),
    "QNMS": (["violin"], ["QN0-MS", "QN6-MS", "QN12-MS", "QN18-MS", "QN24-MS", "LP3500", "LP7000", "ref"]),
}
BASE = {"ref": 97, "LP7000": 55, "LP3500": 25, "mono": 65}


def base_score(cond):
    if cond in BASE:
        return BASE[cond]
    tag = cond.split("-")[0]
    value = int(tag[2:])
    return 20 + value * 2 if tag.startswith("QN") else 90 - value


def rank_p(d):
    """Exact two-sided signed-rank p by sign-flip enumeration (ties ok)."""
    d = np.asarray([x for x in d if x != 0.0])
    if len(d) == 0:
        return 1.0
    ranks = stats.rankdata(np.abs(d))
    w = ranks[d > 0].sum()
    center = ranks.sum() / 2
    total = 0
    extreme = 0
    for signs in itertools.product([0, 1], repeat=len(d)):
        s = ranks[np.array(signs, dtype=bool)].sum()
        total += 1
        if abs(s - center) >= abs(w - center) - 1e-9:
            extreme += 1
    return extreme / total


def main():
    rng = np.random.default_rng(20240501)
    rows = []
    for series, (items, conds) in SERIES.items():
        for item in items:
            for cond in conds:
                if cond.endswith("-MS"):
                    continue
                mu = base_score(cond)
                lr = np.clip(np.round(rng.normal(mu, 8, len(LISTENERS))), 0, 100).astype(int)
                for l, s in zip(LISTENERS, lr):
                    rows.append((l, item, series, cond, int(s)))
                if cond.endswith("-LR"):
                    ms_series = "QNMS" if series == "QNLR" else series
                    ms_cond = cond[:-3] + "-MS"
                    # Probability that MS beats LR for this item.
                    p_up = {"Pop": 0.7, "glock": 0.4, "RnB": 0.9, "panDialogM": 0.1, "violin": 0.5}[item]
                    # Distinct non-zero magnitudes: no ties, no zero differences.
                    mags = rng.permutation(np.arange(1, len(LISTENERS) + 1)) * 2
                    for l, s, m in zip(LISTENERS, lr, mags):
                        d = int(m) if rng.random() < p_up else -int(m)
                        ms = s + d
                        if not 0 <= ms <= 100:
                            ms = s - d
                        assert 0 <= ms <= 100
                        rows.append((l, item, ms_series, ms_cond, int(ms)))
    rows.sort()

    by_cell = {}
    for l, item, series, cond, s in rows:
        by_cell.setdefault((item, series, cond), {})[l] = s

    per_item = {f"{i}|{se}|{c}": float(np.mean(list(v.values()))) for (i, se, c), v in by_cell.items()}
    pooled_listener = {}
    for (i, se, c), v in by_cell.items():
        for l, s in v.items():
            pooled_listener.setdefault((se, c), {}).setdefault(l, []).append(s)
    pooled = {f"{se}|{c}": float(np.mean([np.mean(x) for x in v.values()])) for (se, c), v in pooled_listener.items()}

    p_item = {}
    p_pooled = {}
    for (item, series, cond), lr in by_cell.items():
        if not cond.endswith("-LR"):
            continue
        ms_series = "QNMS" if series == "QNLR" else series
        ms = by_cell[(item, ms_series, cond[:-3] + "-MS")]
        d = np.array([ms[l] - lr[l] for l in LISTENERS], dtype=float)
        abs_d = np.abs(d)
        assert len(set(abs_d)) == len(abs_d) and (d != 0).all()
        p = float(stats.wilcoxon(d, alternative="two-sided", method="exact").pvalue)
        assert abs(p - rank_p(d)) < 1e-12
        p_item[f"{item}|{cond}"] = p
    for (series, cond), lr in pooled_listener.items():
        if not cond.endswith("-LR"):
            continue
        ms_series = "QNMS" if series == "QNLR" else series
        ms = pooled_listener[(ms_series, cond[:-3] + "-MS")]
        d = [np.mean(ms[l]) - np.mean(lr[l]) for l in LISTENERS]
        p_pooled[f"{series}|{cond}"] = rank_p(d)

    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / "scores.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["listener_id", "item", "series", "condition", "score"])
        w.writerows(rows)
    expected = {
        "rows": len(rows),
        "listeners": len(LISTENERS),
        "per_item_mean": per_item,
        "pooled_mean": pooled,
        "per_item_p": p_item,
        "pooled_p": p_pooled,
    }
    with open(OUT / "expected.json", "w") as f:
        json.dump(expected, f, indent=1, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
