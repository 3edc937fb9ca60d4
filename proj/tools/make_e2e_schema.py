#!/usr/bin/env python3
"""Writes the end-to-end laundering schema (schemas/e2e_laundering.csv).

Three laundering campaigns run over shared licit background traffic. Each
campaign places funds through exchange deposits and a cross-chain desk,
layers them through mules, interim chains, peel chains, coinjoins, p2p
trades, hot-car single-use hops, nested services and mixers, and integrates
through crypto lending and front businesses.

Usage: make_e2e_schema.py [--scale S] [--out PATH]
"""

import argparse
import datetime as dt
import sys


def campaign(c, rows, q):
    """Appends one campaign's rows. Instance numbers are offset per campaign."""
    ia = 12 * c  # interim addresses 1..12 per campaign
    mu = 4 * c
    sa = 3 * c
    su = 3 * c
    nsa = 2 * c
    ex = lambda k: 1 + (c + k) % 3
    I = lambda k: f"InterimAddress {ia + k}"
    M = lambda k: f"Mule {mu + k}"
    S = lambda k: f"ServiceAddress {10 + sa + k}"
    U = lambda k: f"SingleUse {su + k}"
    N = lambda k: f"NestedServiceAddress {nsa + k}"
    mixer = f"Mixer {c + 1}"
    lender = f"CryptoLending {c + 1}"
    biz = lambda k: f"Business {2 * c + k}"

    # Placement: deposits in multiple exchanges and a cross-chain desk.
    for k in (1, 2):
        rows.append((M(k), S(k), q(500), "", 1))
        rows.append((S(k), f"Exchange {ex(k)}", q(500), "", 1))
    rows.append((f"Exchange {ex(0)}", I(1), q(600), "", 1))
    rows.append((f"Exchange {ex(1)}", I(2), q(600), "", 1))

    # Layering.
    rows.append((I(1), M(4), q(800), "1x3", 1))          # fund split into a mule
    rows.append((M(4), I(3), q(1200), "", 1))
    rows.append((I(2), I(3), q(800), "", 2))              # consolidation
    for k in (3, 4, 5):
        rows.append((I(k), I(k + 1), q(1500), "1x2", 1))  # peel chain
    rows.append((I(6), "Licit 3", q(300), "1x10", 1))     # dusting of licit accounts
    rows.append((I(6), "Licit 4", q(400), "coinjoin", 1))
    rows.append((M(4), U(1), q(2600), "", 1))             # hot car
    rows.append((U(1), U(2), q(2600), "", 1))
    rows.append((U(2), f"Exchange {ex(2)}", q(2200), "", 1))
    rows.append((f"Exchange {ex(2)}", N(1), q(1000), "1x1", 1))  # nested service, exchange hops
    rows.append((N(1), f"Exchange {ex(0)}", q(1000), "1x1", 1))
    rows.append((f"Exchange {ex(0)}", N(2), q(1000), "1x1", 1))
    rows.append((N(2), I(7), q(1000), "", 1))
    rows.append((I(5), mixer, q(1800), "", 1))             # four mixer subclasses in turn
    rows.append((I(7), mixer, q(1800), "", 1))
    rows.append((mixer, I(8), q(1800), "", 1))
    rows.append((mixer, I(9), q(1800), "", 1))
    rows.append((I(8), "Licit 4", q(300), "inout", 1))    # recipients join the inputs
    rows.append((I(8), I(10), q(500), "", 1))
    rows.append((I(9), U(3), q(400), "", 1))
    rows.append((U(3), I(10), q(400), "", 1))

    # Integration: crypto lending, money-service and small businesses.
    rows.append((I(10), lender, q(700), "", 1))
    rows.append((lender, "Licit 5", q(500), "", 1))
    rows.append(("Licit 5", lender, q(500), "", 1))
    rows.append((lender, I(10), q(250), "", 1))
    rows.append((I(10), biz(1), q(900), "", 1))
    rows.append((biz(1), "Licit 6", q(800), "", 1))
    rows.append((biz(2), f"Exchange {ex(1)}", q(600), "", 1))
    rows.append((f"Exchange {ex(1)}", biz(2), q(300), "", 1))  # crypto appreciation


def background(rows, q):
    rows.append(("Licit 1", "ServiceAddress 1", q(2800), "", 1))
    rows.append(("ServiceAddress 1", "Exchange 1", q(2800), "", 1))
    rows.append(("Licit 2", "ServiceAddress 2", q(2800), "", 1))
    rows.append(("ServiceAddress 2", "Exchange 2", q(2800), "", 1))
    rows.append(("Licit 7", "ServiceAddress 3", q(3000), "", 1))
    rows.append(("ServiceAddress 3", "Exchange 3", q(3000), "", 1))
    rows.append(("Exchange 1", "Licit 7", q(3000), "", 1))
    rows.append(("Exchange 2", "Licit 1", q(3000), "", 1))


def licit_tail(rows, q):
    rows.append(("Licit 1", "Licit 2", q(2000), "", 1))
    rows.append(("Licit 2", "Licit 7", q(1500), "", 1))
    rows.append(("Licit 7", "Licit 8", q(1500), "", 1))
    rows.append(("Licit 8", "Licit 1", q(1500), "", 1))
    rows.append(("Exchange 3", "Licit 8", q(3000), "", 1))
    rows.append(("Licit 8", "DecentralizedExchange 1", q(300), "", 1))
    rows.append(("Licit 2", "Escrow 1", q(600), "", 1))
    rows.append(("Escrow 1", "Licit 8", q(600), "", 1))
    rows.append(("Licit 4", "Licit 3", q(1000), "", 1))
    rows.append(("Licit 3", "Exchange 1", q(1000), "", 1))
    rows.append(("Licit 5", "Exchange 2", q(1000), "", 1))
    rows.append(("Licit 1", "SingleUse 20", q(6500), "", 1))
    rows.append(("SingleUse 20", "Licit 2", q(6500), "", 1))


# Base quantities are relative; UNIT makes scale 1.0 yield about 2e5 records.
UNIT = 1.3


def build(scale):
    q = lambda base: max(1, int(round(base * UNIT * scale)))
    rows = []
    background(rows, q)
    for c in range(3):
        campaign(c, rows, q)
    licit_tail(rows, q)
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scale", type=float, default=1.0)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()
    rows = build(args.scale)
    day = dt.date(2021, 1, 4)
    lines = ["sender,receiver,quantity,timestamp,min_inputs,pattern"]
    for i, (s, r, qty, pat, mi) in enumerate(rows):
        lines.append(f"{s},{r},{qty},{(day + dt.timedelta(days=i)).isoformat()},{mi},{pat}")
    text = "\n".join(lines) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as f:
            f.write(text)
    print(f"{len(rows)} rows, {sum(r[2] for r in rows)} requested records", file=sys.stderr)


if __name__ == "__main__":
    main()
