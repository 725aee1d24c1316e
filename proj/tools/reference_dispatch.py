#!/usr/bin/env python3
"""Solve the AC-OPF of a case file and write its generator dispatch.

The fidelity phase needs a reference dispatch (one row per generator, per
unit) to fix each generator's reference cost. This script computes one with
SciPy's SLSQP on the same line model the library uses (series impedance
only), and writes ``gen_index,p_ref,q_ref``.

    python tools/reference_dispatch.py data/case3.m data/case3_dispatch.csv
"""

import argparse
import sys

import numpy as np
from scipy.optimize import minimize

import pdopf


def solve(model, restarts=4, seed=0):
    nb, ng = len(model.buses), len(model.generators)
    gens, loads, lines = model.generators, model.loads, model.lines
    slack = model.slack_bus
    demand = np.zeros(nb, dtype=complex)
    for load in loads:
        demand[load.bus] += load.demand

    def unpack(x):
        return x[:nb], x[nb:2 * nb], x[2 * nb:2 * nb + ng], x[2 * nb + ng:]

    def flows(vm, va):
        out = []
        for line in lines:
            out.append(pdopf.line_flows(line.admittance, vm[line.from_bus], va[line.from_bus],
                                        vm[line.to_bus], va[line.to_bus]))
        return out

    def cost(x):
        _, _, pg, _ = unpack(x)
        return sum(g.cost(p) for g, p in zip(gens, pg))

    def balance(x):
        vm, va, pg, qg = unpack(x)
        net = -demand.copy()
        for g, p, q in zip(gens, pg, qg):
            net[g.bus] += complex(p, q)
        for line, (s_ft, s_tf) in zip(lines, flows(vm, va)):
            net[line.from_bus] -= s_ft
            net[line.to_bus] -= s_tf
        return np.concatenate([net.real, net.imag])

    def limits(x):
        vm, va, _, _ = unpack(x)
        out = []
        for line, (s_ft, s_tf) in zip(lines, flows(vm, va)):
            d = va[line.from_bus] - va[line.to_bus]
            out += [line.angle_limit - d, line.angle_limit + d]
            if np.isfinite(line.thermal_limit):
                lim = line.thermal_limit ** 2
                out += [lim - abs(s_ft) ** 2, lim - abs(s_tf) ** 2]
        return np.array(out)

    def clip(lo, hi):
        return (None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi)

    bounds = [(b.v_min, b.v_max) for b in model.buses]
    bounds += [(0.0, 0.0) if k == slack else (None, None) for k in range(nb)]
    bounds += [clip(g.s_min.real, g.s_max.real) for g in gens]
    bounds += [clip(g.s_min.imag, g.s_max.imag) for g in gens]

    scale = max(1.0, abs(cost(np.concatenate([np.ones(nb), np.zeros(nb),
                                               [g.s_max.real / 2 for g in gens],
                                               np.zeros(ng)]))))
    rng = np.random.default_rng(seed)
    best = None
    for k in range(restarts):
        total = demand.real.sum()
        share = total / ng
        x0 = np.concatenate([
            np.ones(nb) if k == 0 else rng.uniform(0.95, 1.05, nb),
            np.zeros(nb),
            [min(max(share, g.s_min.real), g.s_max.real) for g in gens],
            np.zeros(ng),
        ])
        res = minimize(lambda x: cost(x) / scale, x0, method="SLSQP", bounds=bounds,
                       constraints=[{"type": "eq", "fun": balance},
                                    {"type": "ineq", "fun": limits}],
                       options={"maxiter": 2000, "ftol": 1e-14})
        feasible = (np.max(np.abs(balance(res.x))) < 1e-8
                    and (len(limits(res.x)) == 0 or np.min(limits(res.x)) > -1e-8))
        if feasible and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise RuntimeError("no feasible AC-OPF solution found")
    _, _, pg, qg = unpack(best.x)
    lo = np.array([g.s_min.real for g in gens])
    hi = np.array([g.s_max.real for g in gens])
    qlo = np.array([g.s_min.imag for g in gens])
    qhi = np.array([g.s_max.imag for g in gens])
    return np.clip(pg, lo, hi), np.clip(qg, qlo, qhi), best.fun * scale


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("case")
    parser.add_argument("output")
    parser.add_argument("--restarts", type=int, default=4)
    args = parser.parse_args(argv)

    model = pdopf.read_case_file(args.case)
    pg, qg, total = solve(model, restarts=args.restarts)
    with open(args.output, "w") as f:
        f.write("gen_index,p_ref,q_ref\n")
        for k, (p, q) in enumerate(zip(pg, qg)):
            f.write(f"{k},{float(p)!r},{float(q)!r}\n")
    print(f"{args.case}: total cost {total:.6f}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
