"""Regenerate the demo scenarios shipped in ``src/pdcontract/data``.

Every file is derived from fixed seeds, so rerunning this script reproduces
the shipped data byte for byte.
"""

import json
from pathlib import Path

import numpy as np

from pdcontract.graphs import cycle_graph, path_graph, write_edge_list
from pdcontract.instances import (
    random_convex_problem,
    random_graph,
    random_least_squares,
    random_node_quadratics,
    random_quadratic_problem,
)

OUT = Path(__file__).resolve().parents[1] / "src" / "pdcontract" / "data"


def dump(name, obj):
    (OUT / name).write_text(json.dumps(obj, indent=1) + "\n")


def constrained(p):
    return {"Q": p.objective.Q.tolist(), "q": p.objective.q.tolist(),
            "A": p.constraint.A.tolist(), "b": p.constraint.b.tolist()}


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    dump("unit.problem.json", {"Q": [[1, 0], [0, 1]], "q": [0, 0], "A": [[1, 0]], "b": [1]})
    dump("unit.scenario.json", {"kind": "standard", "problem": "unit.problem.json", "epsilon": 0.5})

    dump("quadratic.problem.json", constrained(random_quadratic_problem(0, n=4, k=2)))
    dump("quadratic.scenario.json", {"kind": "standard", "problem": "quadratic.problem.json", "seed": 0})

    weak = {"Q": [[1, 0, 0], [0, 1, 0], [0, 0, 0]], "q": [1, -1, 0],
            "A": [[0, 0, 1]], "b": [1]}
    dump("weak.problem.json", weak)
    dump("weak.scenario.json", {"kind": "standard", "problem": "weak.problem.json", "seed": 1})

    dump("convex.problem.json", constrained(random_convex_problem(0)))
    dump("convex.scenario.json", {"kind": "augmented", "problem": "convex.problem.json", "rho": 1.0, "seed": 2})

    write_edge_list(path_graph(2), OUT / "path2.edges")
    dump("path2.problem.json", {"nodes": [{"Q": [[1]], "q": [-1]}, {"Q": [[1]], "q": [1]}]})
    dump("path2.scenario.json", {"kind": "distributed", "problem": "path2.problem.json",
                                 "graph": "path2.edges", "epsilon": 0.5, "seed": 3})

    write_edge_list(path_graph(5), OUT / "path5.edges")
    nodes = random_node_quadratics(5, N=5, n=2)
    dump("path5.problem.json", {"nodes": [{"Q": o.Q.tolist(), "q": o.q.tolist()} for o in nodes]})
    dump("path5.scenario.json", {"kind": "distributed", "problem": "path5.problem.json",
                                 "graph": "path5.edges", "T": 400, "seed": 4})

    ls = random_least_squares(6, N=6, n=2)
    write_edge_list(random_graph(6, 6), OUT / "ls6.edges")
    dump("ls6.problem.json", {"H": ls.H.tolist(), "z": ls.z.tolist()})
    dump("ls6.scenario.json", {"kind": "distributed-ls", "problem": "ls6.problem.json",
                               "graph": "ls6.edges", "rho": 1.0, "T": 400, "seed": 5})

    u = np.array([1.0, 0.0, 0.0])
    dump("tv.problem.json", {"family": "moving-target", "Q": np.eye(3).tolist(),
                             "r0": [0.5, -0.5, 1.0], "u": u.tolist(), "amp_r": 0.1,
                             "A": [[1.0, 1.0, 1.0]], "b0": [1.0], "w": [1.0], "amp_b": 0.1,
                             "omega": 1.0})
    dump("tv.scenario.json", {"kind": "tv", "problem": "tv.problem.json", "h": 0.01, "T": 100,
                              "initial": [0.0] * 4})

    write_edge_list(cycle_graph(4), OUT / "cycle4.edges")
    tv_nodes = [{"Q": np.eye(2).tolist(), "r0": [float(i), -float(i)], "u": [1.0, 0.0],
                 "amp": 0.1, "omega": 1.0, "phase": 0.5 * i} for i in range(4)]
    dump("tvd.problem.json", {"family": "moving-target", "nodes": tv_nodes})
    dump("tvd.scenario.json", {"kind": "tv-distributed", "problem": "tvd.problem.json",
                               "graph": "cycle4.edges", "h": 0.01, "T": 100,
                               "initial": [0.0] * 16})


if __name__ == "__main__":
    main()
