#!/usr/bin/env python3
"""Regenerates config/ocp_graphite.csv and config/ocp_nmc811.csv.

Both curves are the published LG M50 (graphite / NMC811) open-circuit
potential fits, sampled on a uniform stoichiometry grid.
"""
import math
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "config"
POINTS = 201


def graphite(x):
    return (1.9793 * math.exp(-39.3631 * x) + 0.2482
            - 0.0909 * math.tanh(29.8538 * (x - 0.1234))
            - 0.04478 * math.tanh(14.9159 * (x - 0.2769))
            - 0.0205 * math.tanh(30.4444 * (x - 0.6103)))


def nmc811(x):
    return (-0.8090 * x + 4.4875
            - 0.0428 * math.tanh(18.5138 * (x - 0.5542))
            - 17.7326 * math.tanh(15.7890 * (x - 0.3117))
            + 17.5842 * math.tanh(15.9308 * (x - 0.3120)))


def write(name, fn):
    lines = ["stoichiometry,volts"]
    for i in range(POINTS):
        x = i / (POINTS - 1)
        lines.append(f"{x:.6f},{fn(x):.9f}")
    (OUT / name).write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    write("ocp_graphite.csv", graphite)
    write("ocp_nmc811.csv", nmc811)
