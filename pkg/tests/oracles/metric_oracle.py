"""Brute-force reference scorer used to freeze tests/fixtures/expected_report.json.

Standalone on purpose: stdlib only, exact fractions, nested loops, no imports from the
package.  Regenerate with

    python3 tests/oracles/metric_oracle.py tests/fixtures/pred.jsonl tests/fixtures/gold.jsonl
"""

import json
import sys
from fractions import Fraction


def read(path):
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    return lines[1:]


def tokens_of(role):
    s, e = role["span"]
    out = []
    t = s
    while t <= e:
        out.append(t)
        t += 1
    return out


def div(a, b, both_empty):
    if b == 0:
        return Fraction(1) if both_empty else Fraction(0)
    return Fraction(a, b) if isinstance(a, int) else a / b


def f1(p, r):
    if p + r == 0:
        return Fraction(0)
    return 2 * p * r / (p + r)


def wrong_frame(p, g, penalty):
    return penalty and p["frame"] != g["frame"]


def exact(preds, golds, penalty):
    tp = fp = fn = 0
    for p, g in zip(preds, golds):
        used = [False] * len(g["roles"])
        hits = 0
        if not wrong_frame(p, g, penalty):
            for pr in p["roles"]:
                for k, gr in enumerate(g["roles"]):
                    if not used[k] and pr["label"] == gr["label"] and pr["span"] == gr["span"]:
                        used[k] = True
                        hits += 1
                        break
        tp += hits
        fp += len(p["roles"]) - hits
        fn += len(g["roles"]) - hits
    return tp, fp, fn


def token_pairs(roles):
    pairs = []
    for r in roles:
        for t in tokens_of(r):
            if (r["label"], t) not in pairs:
                pairs.append((r["label"], t))
    return pairs


def global_(preds, golds, penalty):
    tp = fp = fn = 0
    for p, g in zip(preds, golds):
        pp, gp = token_pairs(p["roles"]), token_pairs(g["roles"])
        hits = 0
        if not wrong_frame(p, g, penalty):
            for x in pp:
                if x in gp:
                    hits += 1
        tp += hits
        fp += len(pp) - hits
        fn += len(gp) - hits
    return tp, fp, fn


def overlap(a, b):
    n = 0
    for t in tokens_of(a):
        if t in tokens_of(b):
            n += 1
    return n


def soft(preds, golds, penalty):
    p_terms, r_terms = [], []
    n_pred = n_gold = 0
    for p, g in zip(preds, golds):
        n_pred += len(p["roles"])
        n_gold += len(g["roles"])
        free_g = [True] * len(g["roles"])
        free_p = [True] * len(p["roles"])
        if not wrong_frame(p, g, penalty):
            while True:
                # scan every free same-label pair; keep the largest overlap, first gold then first pred
                best = None
                for gi, gr in enumerate(g["roles"]):
                    for pj, pr in enumerate(p["roles"]):
                        if free_g[gi] and free_p[pj] and gr["label"] == pr["label"]:
                            o = overlap(gr, pr)
                            if o > 0 and (best is None or o > best[0]):
                                best = (o, gi, pj)
                if best is None:
                    break
                o, gi, pj = best
                free_g[gi] = free_p[pj] = False
                p_terms.append(Fraction(o, len(tokens_of(p["roles"][pj]))))
                r_terms.append(Fraction(o, len(tokens_of(g["roles"][gi]))))
        p_terms += [Fraction(0)] * sum(free_p)
        r_terms += [Fraction(0)] * sum(free_g)
    both = n_pred == 0 and n_gold == 0
    p = div(sum(p_terms, Fraction(0)), len(p_terms), both)
    r = div(sum(r_terms, Fraction(0)), len(r_terms), both)
    return p, r


def micro(tp, fp, fn):
    both = tp + fp + fn == 0
    return div(tp, tp + fp, both), div(tp, tp + fn, both)


def report(preds, golds, penalty=True):
    out = {"frame_accuracy": Fraction(sum(p["frame"] == g["frame"] for p, g in zip(preds, golds)), len(golds))}
    tp, fp, fn = exact(preds, golds, penalty)
    gtp, gfp, gfn = global_(preds, golds, penalty)
    for name, (p, r) in (("exact", micro(tp, fp, fn)), ("soft", soft(preds, golds, penalty)),
                         ("global", micro(gtp, gfp, gfn))):
        out[name] = {"precision": p, "recall": r, "f1": f1(p, r)}
    out["counts"] = {"exact_tp": tp, "exact_fp": fp, "exact_fn": fn,
                     "global_tp": gtp, "global_fp": gfp, "global_fn": gfn}
    return out


def serial(x):
    if isinstance(x, dict):
        return {k: serial(v) for k, v in x.items()}
    if isinstance(x, Fraction):
        return {"value": float(x), "fraction": f"{x.numerator}/{x.denominator}"}
    return x


if __name__ == "__main__":
    pred_path, gold_path = sys.argv[1], sys.argv[2]
    preds, golds = read(pred_path), read(gold_path)
    result = {"frame_penalty": serial(report(preds, golds, True)),
              "no_frame_penalty": serial(report(preds, golds, False))}
    json.dump(result, sys.stdout, indent=2)
    sys.stdout.write("\n")
