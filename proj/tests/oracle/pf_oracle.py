#!/usr/bin/env python3
"""Independent AC power-flow reference used to freeze expected values.

Parses a MATPOWER-style case file, assembles the bus admittance matrix and
runs a polar Newton-Raphson power flow with numpy only. This implementation
shares no code with the C++ solver under test; it exists so that solver
results can be checked against an independently computed solution.

Usage:
  pf_oracle.py solve CASE.m [--out ref.json]     solve and print/export vm, va
  pf_oracle.py check CASE.m                      compare against the solved
                                                 voltage profile shipped in the
                                                 case file's bus table
"""

import json
import math
import re
import sys

import numpy as np


def parse_matrix(text, name):
    m = re.search(r"mpc\.%s\s*=\s*\[(.*?)\];" % name, text, re.S)
    if m is None:
        raise ValueError("matrix %s not found" % name)
    rows = []
    for line in m.group(1).splitlines():
        line = line.split("%")[0].strip().rstrip(";")
        if not line:
            continue
        rows.append([float(tok) for tok in line.split()])
    return np.array(rows)


def parse_case(path):
    text = open(path).read()
    base = float(re.search(r"mpc\.baseMVA\s*=\s*([0-9.eE+-]+)", text).group(1))
    return {
        "base_mva": base,
        "bus": parse_matrix(text, "bus"),
        "gen": parse_matrix(text, "gen"),
        "branch": parse_matrix(text, "branch"),
    }


def build_ybus(case):
    bus, branch = case["bus"], case["branch"]
    n = bus.shape[0]
    idx = {int(b): i for i, b in enumerate(bus[:, 0])}
    Y = np.zeros((n, n), dtype=complex)
    for row in branch:
        if row[10] == 0:
            continue
        f, t = idx[int(row[0])], idx[int(row[1])]
        ys = 1.0 / complex(row[2], row[3])
        bc = complex(0.0, row[4] / 2.0)
        tap = row[8] if row[8] != 0.0 else 1.0
        shift = math.radians(row[9])
        a = tap * np.exp(1j * shift)
        Y[f, f] += (ys + bc) / (a * np.conj(a))
        Y[t, t] += ys + bc
        Y[f, t] += -ys / np.conj(a)
        Y[t, f] += -ys / a
    for i in range(n):
        Y[i, i] += complex(bus[i, 4], bus[i, 5]) / case["base_mva"]
    return Y, idx


def solve(case, tol=1e-10, max_iter=30):
    bus, gen = case["bus"], case["gen"]
    base = case["base_mva"]
    n = bus.shape[0]
    Y, idx = build_ybus(case)

    p_inj = -bus[:, 2] / base
    q_inj = -bus[:, 3] / base
    vset = np.ones(n)
    is_gen = np.zeros(n, dtype=bool)
    for row in gen:
        if row[7] == 0:
            continue
        i = idx[int(row[0])]
        p_inj[i] += row[1] / base
        vset[i] = row[5]
        is_gen[i] = True

    types = bus[:, 1].astype(int)  # 1 PQ, 2 PV, 3 slack
    slack = int(np.where(types == 3)[0][0])
    pv = [i for i in range(n) if types[i] == 2]
    pq = [i for i in range(n) if types[i] == 1]

    vm = np.ones(n)
    va = np.full(n, math.radians(bus[slack, 8]))
    for i in pv + [slack]:
        vm[i] = vset[i] if is_gen[i] else 1.0

    non_slack = pv + pq
    G, B = Y.real, Y.imag

    for it in range(max_iter):
        V = vm * np.exp(1j * va)
        S = V * np.conj(Y @ V)
        dp = p_inj - S.real
        dq = q_inj - S.imag
        mis = np.concatenate([dp[non_slack], dq[pq]])
        if np.max(np.abs(mis)) < tol:
            return vm, va, it, np.max(np.abs(mis))

        # standard polar Jacobian
        P, Q = S.real, S.imag
        J11 = np.zeros((n, n))
        J12 = np.zeros((n, n))
        J21 = np.zeros((n, n))
        J22 = np.zeros((n, n))
        for i in range(n):
            for k in range(n):
                if i == k:
                    J11[i, i] = -Q[i] - B[i, i] * vm[i] ** 2
                    J12[i, i] = P[i] / vm[i] + G[i, i] * vm[i]
                    J21[i, i] = P[i] - G[i, i] * vm[i] ** 2
                    J22[i, i] = Q[i] / vm[i] - B[i, i] * vm[i]
                elif Y[i, k] != 0:
                    th = va[i] - va[k]
                    gc = G[i, k] * math.cos(th) + B[i, k] * math.sin(th)
                    gs = G[i, k] * math.sin(th) - B[i, k] * math.cos(th)
                    J11[i, k] = vm[i] * vm[k] * gs
                    J12[i, k] = vm[i] * gc
                    J21[i, k] = -vm[i] * vm[k] * gc
                    J22[i, k] = vm[i] * gs
        top = np.hstack([J11[np.ix_(non_slack, non_slack)], J12[np.ix_(non_slack, pq)]])
        bot = np.hstack([J21[np.ix_(pq, non_slack)], J22[np.ix_(pq, pq)]])
        J = np.vstack([top, bot])
        dx = np.linalg.solve(J, mis)
        na = len(non_slack)
        va[non_slack] += dx[:na]
        vm[pq] += dx[na:]
    raise RuntimeError("power flow did not converge")


def branch_flows(case, vm, va):
    """From-end active power per in-service branch, MW."""
    bus, branch = case["bus"], case["branch"]
    base = case["base_mva"]
    idx = {int(b): i for i, b in enumerate(bus[:, 0])}
    V = vm * np.exp(1j * va)
    flows = []
    for row in branch:
        if row[10] == 0:
            flows.append(None)
            continue
        f, t = idx[int(row[0])], idx[int(row[1])]
        ys = 1.0 / complex(row[2], row[3])
        bc = complex(0.0, row[4] / 2.0)
        tap = row[8] if row[8] != 0.0 else 1.0
        a = tap * np.exp(1j * math.radians(row[9]))
        yff = (ys + bc) / (a * np.conj(a))
        yft = -ys / np.conj(a)
        i_f = yff * V[f] + yft * V[t]
        flows.append((V[f] * np.conj(i_f)).real * base)
    return flows


def main():
    if len(sys.argv) < 3:
        print(__doc__)
        return 1
    cmd, path = sys.argv[1], sys.argv[2]
    case = parse_case(path)
    vm, va, iters, mis = solve(case)
    va_deg = np.degrees(va)
    if cmd == "solve":
        out = {
            "iterations": iters,
            "max_mismatch": mis,
            "vm": vm.tolist(),
            "va_deg": va_deg.tolist(),
        }
        if len(sys.argv) > 4 and sys.argv[3] == "--out":
            json.dump(out, open(sys.argv[4], "w"), indent=1)
            print("wrote", sys.argv[4])
        else:
            print(json.dumps(out, indent=1))
    elif cmd == "check":
        ref_vm = case["bus"][:, 7]
        ref_va = case["bus"][:, 8]
        dvm = np.abs(vm - ref_vm)
        dva = np.abs(va_deg - ref_va)
        print("iterations:", iters)
        print("max |vm - shipped|: %.5f at bus %d" % (dvm.max(), case["bus"][dvm.argmax(), 0]))
        print("max |va - shipped|: %.4f deg at bus %d" % (dva.max(), case["bus"][dva.argmax(), 0]))
        worst = np.argsort(-dvm)[:8]
        for i in worst:
            print("  bus %4d  vm %.4f shipped %.4f   va %8.3f shipped %8.3f"
                  % (case["bus"][i, 0], vm[i], ref_vm[i], va_deg[i], ref_va[i]))
    else:
        print(__doc__)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
