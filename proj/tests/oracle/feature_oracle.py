#!/usr/bin/env python3
"""Reference computation of the 130 per-account features for small datasets.

Written straight from the feature definitions, one account at a time, with
no shared code. Prints the expected matrix as CSV (header + one row per
account, in accounts.csv order). Float arithmetic follows the definitions'
natural left-to-right order so results are comparable bit for bit.

Usage: feature_oracle.py DATASET_DIR > expected.csv
"""

import csv
import datetime as dt
import json
import math
import sys

KINDS = ["Licit", "Exchange", "DecentralizedExchange", "NestedExchange", "Escrow", "Mixer", "Mule", "Funds",
         "Business", "CryptoLending", "ServiceAddress", "NestedServiceAddress", "InterimAddress", "SingleUse",
         "OuterLayer"]
ILLICIT = {"Mixer", "NestedExchange", "NestedServiceAddress", "InterimAddress", "Funds", "Business", "CryptoLending"}
STREAMS = ["sent_value", "recv_value", "fee_paid", "inputs_per_sent", "outputs_per_sent", "inputs_per_recv",
           "outputs_per_recv", "gap", "hold_time"]
COUNTS = ["n_sent", "n_recv", "n_total", "distinct_in_counterparties", "distinct_out_counterparties",
          "equal_output_records", "single_output_sent", "multi_input_sent", "dust_receipts", "both_sides_records"]
SCALARS = ["lifetime_span", "activity_rate", "final_balance", "net_flow", "sent_recv_ratio", "mean_counterparties",
           "top_counterparty_share", "first_seen_offset", "last_seen_offset", "has_sent", "has_received"]
CLUSTER = ["cluster_size", "cluster_tx_count", "cluster_volume", "cluster_counterparties"]


def names():
    out = [f"{s}_{a}" for s in STREAMS for a in ("min", "max", "mean", "std", "sum")]
    out += COUNTS + SCALARS + CLUSTER
    for k in KINDS:
        out += [f"sent_tx_to_{k}", f"recv_tx_from_{k}", f"value_to_{k}", f"value_from_{k}"]
    return out


def ts(text):
    return int(dt.datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=dt.timezone.utc).timestamp())


def load(d):
    accounts = list(csv.DictReader(open(f"{d}/accounts.csv")))
    txs = []
    for r in csv.DictReader(open(f"{d}/transactions.csv")):
        txs.append({
            "ins": json.loads(r["inputs"]), "outs": json.loads(r["outputs"]),
            "iv": [float(v) for v in json.loads(r["in_values"])],
            "ov": [float(v) for v in json.loads(r["out_values"])],
            "t": ts(r["timestamp"]), "fee": float(r["fee"]),
        })
    return accounts, txs


def stats(xs):
    if not xs:
        return [0.0] * 5
    total = 0.0
    for x in xs:
        total += x
    mean = total / len(xs)
    ss = 0.0
    for x in xs:
        ss += (x - mean) * (x - mean)
    return [min(xs), max(xs), mean, math.sqrt(ss / len(xs)), total]


def total(xs):
    s = 0.0
    for x in xs:
        s += x
    return s


def clusters(accounts, txs):
    owner = {a["id"]: a["id"] for a in accounts}

    def root(x):
        while owner[x] != x:
            x = owner[x]
        return x

    for t in txs:
        roots = {root(a) for a in t["ins"]}
        keep = min(roots, key=lambda r: [a["id"] for a in accounts].index(r))
        for r in roots:
            owner[r] = keep
    return {a["id"]: root(a["id"]) for a in accounts}


def features(acct, accounts, txs, cl):
    me = acct["id"]
    kind_of = {a["id"]: a["kind"] for a in accounts}
    sent = [t for t in txs if me in t["ins"]]
    recv = [t for t in txs if me in t["outs"]]
    involved = [t for t in txs if me in t["ins"] or me in t["outs"]]

    def mine_in(t):
        return total([v for a, v in zip(t["ins"], t["iv"]) if a == me])

    def mine_out(t):
        return total([v for a, v in zip(t["outs"], t["ov"]) if a == me])

    sent_v = [mine_in(t) for t in sent]
    recv_v = [mine_out(t) for t in recv]
    fee_v = [t["fee"] * (mine_in(t) / total(t["iv"])) for t in sent]
    gaps = [float(b["t"] - a["t"]) for a, b in zip(involved, involved[1:])]

    # Holding times: each spent value is matched to the oldest unspent
    # receipt of exactly that value. Endowments count as received at the
    # account's first record.
    holds, pending = [], []
    for i, t in enumerate(involved):
        if i == 0:
            pending += [[t["t"], float(g), False] for g in json.loads(acct["genesis"])]
        for a, v in zip(t["ins"], t["iv"]):
            if a != me:
                continue
            for p in pending:
                if not p[2] and p[1] == v:
                    p[2] = True
                    holds.append(float(t["t"] - p[0]))
                    break
        for a, v in zip(t["outs"], t["ov"]):
            if a == me:
                pending.append([t["t"], v, False])

    f = []
    for xs in (sent_v, recv_v, fee_v, [float(len(t["ins"])) for t in sent], [float(len(t["outs"])) for t in sent],
               [float(len(t["ins"])) for t in recv], [float(len(t["outs"])) for t in recv], gaps, holds):
        f += stats(xs)

    in_cp = {a for t in recv for a in t["ins"] if a != me}
    out_cp = {a for t in sent for a in t["outs"] if a != me}
    f += [float(len(sent)), float(len(recv)), float(len(involved)), float(len(in_cp)), float(len(out_cp)),
          float(sum(1 for t in involved if len(t["ov"]) >= 2 and len(set(t["ov"])) == 1)),
          float(sum(1 for t in sent if len(t["outs"]) == 1)),
          float(sum(1 for t in sent if len(t["ins"]) >= 2)),
          float(sum(1 for t in recv for a, v in zip(t["outs"], t["ov"]) if a == me and v < 8000)),
          float(sum(1 for t in involved if me in t["ins"] and me in t["outs"]))]

    start = min(t["t"] for t in txs)
    first = float(involved[0]["t"] - start) if involved else 0.0
    last = float(involved[-1]["t"] - start) if involved else 0.0
    span = last - first
    s_tot, r_tot = total(sent_v), total(recv_v)
    g_tot = total([float(g) for g in json.loads(acct["genesis"])])
    paid = {}
    for t in sent:
        share = mine_in(t) / total(t["iv"])
        for a, v in zip(t["outs"], t["ov"]):
            if a != me:
                paid[a] = paid.get(a, 0.0) + v * share
    paid_sum = total([paid[k] for k in sorted(paid, key=lambda k: [x["id"] for x in accounts].index(k))])
    per_tx = total([float(len(set(t["ins"] + t["outs"]) - {me})) for t in involved])
    f += [span,
          float(len(involved)) / max(span / 86400.0, 1.0),
          g_tot + r_tot - s_tot,
          r_tot - s_tot,
          s_tot / r_tot if r_tot > 0 else 0.0,
          per_tx / len(involved) if involved else 0.0,
          max(paid.values()) / paid_sum if paid_sum > 0 else 0.0,
          first, last,
          1.0 if sent else 0.0, 1.0 if recv else 0.0]

    members = {a["id"] for a in accounts if cl[a["id"]] == cl[me]}
    touching = [t for t in txs if members & set(t["ins"] + t["outs"])]
    volume = total([v for t in txs for a, v in zip(t["ins"], t["iv"]) if a in members])
    others = {a for t in touching for a in t["ins"] + t["outs"] if a not in members}
    f += [float(len(members)), float(len(touching)), volume, float(len(others))]

    for k in KINDS:
        to_tx = float(sum(1 for t in sent if any(a != me and kind_of[a] == k for a in t["outs"])))
        from_tx = float(sum(1 for t in recv if any(a != me and kind_of[a] == k for a in t["ins"])))
        value_to = 0.0
        for t in sent:
            share = mine_in(t) / total(t["iv"])
            for a, v in zip(t["outs"], t["ov"]):
                if a != me and kind_of[a] == k:
                    value_to += v * share
        value_from = 0.0
        for t in recv:
            mine, in_sum = mine_out(t), total(t["iv"])
            for a, v in zip(t["ins"], t["iv"]):
                if a != me and kind_of[a] == k:
                    value_from += mine * v / in_sum
        f += [to_tx, from_tx, value_to, value_from]
    return f


def main():
    accounts, txs = load(sys.argv[1])
    txs.sort(key=lambda t: t["t"])
    cl = clusters(accounts, txs)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(names() + ["entity_label", "category_label"])
    for a in accounts:
        k = a["provenance"] if a["kind"] == "SingleUse" else a["kind"]
        w.writerow([repr(v) for v in features(a, accounts, txs, cl)] +
                   [a["kind"], "illicit" if k in ILLICIT else "licit"])


if __name__ == "__main__":
    main()
