#!/usr/bin/env python3
"""Regenerate the JSON fixtures under fixtures/."""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "fixtures"

XYZ = ["x", "y", "z"]
X3 = ["x1", "x2", "x3"]
X4 = ["x1", "x2", "x3", "x4"]
X5 = ["x1", "x2", "x3", "x4", "x5"]
X6 = ["x1", "x2", "x3", "x4", "x5", "x6"]


def cube(n, lo=-1.0, hi=1.0):
    return [[lo, hi] for _ in range(n)]


def structure(coords, kind, order, eta, companion=None, job=None, theta=None):
    doc = {"dimension": len(coords), "coordinates": coords, "kind": kind, "order": order, "eta": eta}
    if companion is not None:
        doc["companion"] = companion
    if theta is not None:
        doc["theta"] = theta
    if job is not None:
        doc["job"] = job
    return doc


def chart(name, box, sigma, tensor):
    return {"name": name, "box": box, "sigma": sigma, "tensor": tensor}


def atlas(coords, kind, order, charts, job=None):
    doc = {"dimension": len(coords), "coordinates": coords, "kind": kind, "order": order, "charts": charts}
    if job is not None:
        doc["job"] = job
    return doc


EULER_H1 = "(x^2 + y^2 + z^2)/2"
EULER_H2 = "(x^2 + y^2/2 + z^2/3)/2"

# three overlapping charts on the plane with potentials x, x+1, x+3
PLANE_CHARTS = [
    chart("alpha", [[-1.0, 0.5], [-1.0, 1.0]], "x", {"x,y": "exp(x)"}),
    chart("beta", [[0.0, 1.5], [-1.0, 1.0]], "x + 1", {"x,y": "exp(x + 1)"}),
    chart("gamma", [[0.2, 2.0], [-1.0, 1.0]], "x + 3", {"x,y": "exp(x + 3)"}),
]

FIXTURES = {
    "so3_poisson.json": structure(XYZ, "poisson", 2, {"x,y": "z", "y,z": "x", "z,x": "y"}),
    "r6_counterexample.json": structure(X6, "np", 3, {"x1,x2,x3": "1", "x4,x5,x6": "1"}),
    "canonical_np3.json": structure(X3, "np", 3, {"x1,x2,x3": "1"}, job={"fixers": ["x3"]}),
    "euler_top.json": structure(
        XYZ, "np", 3, {"x,y,z": "1"},
        job={"hamiltonians": [EULER_H1, EULER_H2], "split": [EULER_H1, EULER_H2],
             "x0": [1.0, 0.1, 0.1], "t_end": 10.0, "h": 1e-3,
             "functions": ["x^2 + y^2 + z^2", EULER_H2, "x*y"]}),
    "harmonic_oscillator.json": structure(
        ["q", "p"], "poisson", 2, {"q,p": "1"},
        job={"hamiltonians": ["(q^2 + p^2)/2"], "x0": [1.0, 0.0], "t_end": 6.283185307179586,
             "h": 1e-3, "pair": ["q*p", "q + p^2"], "functions": ["q", "p"]}),
    "jacobi_r4.json": structure(
        X4, "jacobi", 2, {"x1,x2": "exp(-x1)", "x3,x4": "exp(-x1)"}, {"x2": "-exp(-x1)"}),
    "lc_poisson_r4.json": atlas(X4, "poisson", 2, [
        chart("a", [[-1.0, 0.4], [-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]], "x1", {"x1,x2": "1", "x3,x4": "1"}),
        chart("b", [[0.0, 1.0], [-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]], "x1 + 2",
              {"x1,x2": "exp(2)", "x3,x4": "exp(2)"}),
    ]),
    "lc_poisson_3chart.json": atlas(["x", "y"], "poisson", 2, PLANE_CHARTS),
    "lc_dissipation.json": atlas(
        ["x", "y"], "poisson", 2, PLANE_CHARTS,
        job={"hamiltonians": ["(x^2 + y^2)/2"], "x0": [0.5, 0.2], "t_end": 2.0, "h": 1e-3,
             "pair": ["x*y", "x + y^2"]}),
    "lee_inconsistent.json": atlas(["x", "y"], "poisson", 2, [
        PLANE_CHARTS[0], chart("beta", [[0.0, 1.5], [-1.0, 1.0]], "x^2", {"x,y": "exp(x + 1)"})]),
    "overlap_mismatch.json": atlas(["x", "y"], "poisson", 2, [
        PLANE_CHARTS[0], chart("beta", [[0.0, 1.5], [-1.0, 1.0]], "x + 1", {"x,y": "2*exp(x + 1)"})]),
    "constant_sigma.json": atlas(X3, "np", 3, [
        chart("a", cube(3), "0", {"x1,x2,x3": "1"}),
        chart("b", [[0.5, 2.0], [-1.0, 1.0], [-1.0, 1.0]], "1", {"x1,x2,x3": "exp(2)"}),
    ]),
    "lc_np3.json": atlas(
        X3, "np", 3, [
            chart("a", [[-1.0, 0.3], [-1.0, 1.0], [-1.0, 1.0]], "x1", {"x1,x2,x3": "1"}),
            chart("b", [[0.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]], "x1 + 1", {"x1,x2,x3": "exp(2)"}),
        ],
        job={"hamiltonians": ["x1*x2 + x3", "x3^2 - x2"], "x0": [0.1, 0.2, 0.3], "t_end": 1.0,
             "h": 1e-3, "fixers": ["x3"]}),
    "lc_np3_r4.json": atlas(
        X4, "np", 3, [
            chart("a", [[-1.0, 0.3], [-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]], "x1 - x4", {"x1,x2,x3": "1"}),
            chart("b", [[0.0, 1.0], [-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]], "x1 - x4 + 1",
                  {"x1,x2,x3": "exp(2)"}),
        ],
        job={"hamiltonians": ["x1*x2 + x4", "x3^2 - x2*x4"], "x0": [0.1, 0.2, 0.3, -0.2],
             "t_end": 1.0, "h": 1e-3, "fixers": ["x3*x4 + x1"]}),
    "lc_np4.json": atlas(
        X5, "np", 4, [
            chart("a", [[-1.0, 0.5]] + cube(4), "x1 + x2/2", {"x1,x2,x3,x4": "1"}),
            chart("b", [[0.0, 1.0]] + cube(4), "x1 + x2/2 + 1", {"x1,x2,x3,x4": "exp(3)"}),
        ],
        job={"hamiltonians": ["x1*x5 + x4", "x3^2 - x2", "x2 + x5"], "x0": [0.1, 0.2, 0.3, 0.1, 0.0],
             "t_end": 1.0, "h": 1e-3, "fixers": ["x3*x5 + x1", "x4*x2 - x3"]}),
    "lc_gp_p1.json": atlas(XYZ, "gp", 2, [
        chart("a", cube(3), "x + y", {"x,y": "z", "y,z": "x", "z,x": "y"})]),
    "lc_gp_p2.json": atlas(X5, "gp", 4, [
        chart("a", [[-1.0, 0.5]] + cube(4), "x1 - x5", {"x1,x2,x3,x4": "1", "x2,x3,x4,x5": "2"}),
        chart("b", [[0.0, 1.0]] + cube(4), "x1 - x5 - 1",
              {"x1,x2,x3,x4": "exp(-3)", "x2,x3,x4,x5": "2*exp(-3)"}),
    ]),
    "lift_r3.json": atlas(
        X3, "np", 3, [chart("a", cube(3), "x1", {"x1,x2,x3": "exp(2*x1)"})],
        job={"hamiltonians": ["x1^2 + x2*x3", "x2^2 - x1*x3 + x3"]}),
    "lift_r4.json": atlas(
        X4, "np", 3, [chart("a", cube(4), "x1", {"x1,x2,x3": "exp(2*x1)"})],
        job={"hamiltonians": ["x1*x4 + x2^2", "x3*x4 - x1 + x2*x3"]}),
    "lift_theta0.json": atlas(
        X3, "np", 3, [chart("a", cube(3), "0", {"x1,x2,x3": "1"})],
        job={"hamiltonians": ["x1^2 + x2*x3", "x2^2 - x1*x3 + x3"]}),
    "missing_x0.json": structure(
        XYZ, "np", 3, {"x,y,z": "1"},
        job={"hamiltonians": [EULER_H1, EULER_H2], "t_end": 1.0, "h": 1e-3}),
    "bad_expression.json": structure(XYZ, "poisson", 2, {"x,y": "x^-1"}),
}


GLUED = {
    # glued Nambu-Jacobi pairs, written out as plain structure files
    "nj3_glued.json": ("lc_np3.json", {"fixers": ["x1*x2 + x3"]}),
    "nj4_glued.json": ("lc_np4.json", {"fixers": ["x3*x5 + x1", "x4*x2 - x3"]}),
}


def main():
    from lcnambu.atlas import ConformalAtlas, glue

    OUT.mkdir(exist_ok=True)
    for name, doc in FIXTURES.items():
        (OUT / name).write_text(json.dumps(doc, indent=2) + "\n")
    for name, (source, job) in GLUED.items():
        gp = glue(ConformalAtlas.from_json(FIXTURES[source]))
        doc = gp.to_json()
        doc["job"] = job
        (OUT / name).write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {len(FIXTURES) + len(GLUED)} fixtures to {OUT}")


if __name__ == "__main__":
    main()
