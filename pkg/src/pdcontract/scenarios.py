"""Scenario files: loading, validation and assembly of the objects they describe.

A scenario is a JSON object::

    {"kind": "standard", "problem": "problem.json", "epsilon": 0.9, "seed": 0}

``problem`` is either a path (relative to the scenario file) or an inline
object; distributed kinds also take ``graph``, an edge-list path or an
inline list of pairs. Optional keys: ``rho``, ``h``, ``T``, ``initial``.

Problem objects by kind:

* ``standard`` / ``augmented``: ``{"Q", "q", "A", "b"}`` (or nested as
  ``{"objective": {"Q", "q"}, "constraint": {"A", "b"}}``)
* ``distributed``: ``{"nodes": [{"Q", "q"}, ...]}``
* ``distributed-ls``: ``{"H", "z"}``
* ``tv``: ``{"family": "moving-target", "Q", "r0", "u", "amp_r", "A", "b0", "w", "amp_b", "omega"}``
* ``tv-distributed``: ``{"family": "moving-target", "nodes": [{"Q", "r0", "u", "amp", "omega", "phase"}, ...]}``
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .graphs import Graph, graph_spectrum, read_edge_list
from .problems import (
    ConstrainedProblem,
    EqualityConstraint,
    LeastSquaresInstance,
    QuadraticObjective,
    TVDistributedProblem,
    moving_target_node,
    moving_target_problem,
)

KINDS = ("standard", "augmented", "distributed", "distributed-ls", "tv", "tv-distributed")
GRAPH_KINDS = {"distributed", "distributed-ls", "tv-distributed"}
DATA_DIR = Path(__file__).parent / "data"


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    kind: str
    problem: dict
    graph: Optional[Graph] = None
    epsilon: float = 0.9
    rho: float = 1.0
    h: Optional[float] = None
    T: Optional[float] = None
    seed: int = 0
    initial: Optional[list] = None
    name: str = ""
    source: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ScenarioError(f"unknown kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.kind in GRAPH_KINDS and self.graph is None:
            raise ScenarioError(f"kind {self.kind!r} requires a graph")
        if not 0 < self.epsilon < 1:
            raise ScenarioError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.rho <= 0:
            raise ScenarioError("rho must be positive")
        if self.h is not None and self.h <= 0 or self.T is not None and self.T <= 0:
            raise ScenarioError("h and T must be positive")

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ScenarioError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from None


def _resolve(value, base, loader):
    if isinstance(value, str):
        p = Path(value)
        if not p.is_absolute():
            p = base / p
        if not p.exists():
            raise ScenarioError(f"referenced file not found: {p}")
        return loader(p)
    return value


def scenario_from_dict(data, base=Path("."), name="", source=None):
    if "kind" not in data:
        raise ScenarioError("scenario lacks 'kind'")
    if "problem" not in data:
        raise ScenarioError("scenario lacks 'problem'")
    problem = _resolve(data["problem"], base, _read_json)
    graph = None
    if "graph" in data:
        g = _resolve(data["graph"], base, read_edge_list)
        graph = g if isinstance(g, Graph) else Graph.from_edges(g)
    known = {"kind", "problem", "graph", "epsilon", "rho", "h", "T", "seed", "initial", "name"}
    return Scenario(
        kind=data["kind"], problem=problem, graph=graph,
        epsilon=float(data.get("epsilon", 0.9)), rho=float(data.get("rho", 1.0)),
        h=data.get("h"), T=data.get("T"), seed=int(data.get("seed", 0)),
        initial=data.get("initial"), name=data.get("name", name), source=source,
        extra={k: v for k, v in data.items() if k not in known},
    )


def load_scenario(path):
    path = Path(path)
    return scenario_from_dict(_read_json(path), base=path.parent, name=path.name.removesuffix(".json").removesuffix(".scenario"), source=str(path))


def builtin_scenarios():
    """Paths of the demo scenarios shipped with the package, sorted by name."""
    return sorted(DATA_DIR.glob("*.scenario.json"))


# --- object assembly -------------------------------------------------------------

def _arr(d, key, kind):
    if key not in d:
        raise ScenarioError(f"{kind} problem lacks {key!r}")
    return np.asarray(d[key], dtype=float)


def _flat(problem):
    if "objective" in problem or "constraint" in problem:
        return {**problem.get("objective", {}), **problem.get("constraint", {})}
    return problem


def build_constrained(problem, kind="standard"):
    d = _flat(problem)
    Q = _arr(d, "Q", kind)
    q = np.asarray(d.get("q", np.zeros(len(Q))), dtype=float)
    return ConstrainedProblem(QuadraticObjective(Q, q), EqualityConstraint(_arr(d, "A", kind), _arr(d, "b", kind)))


def build_node_objectives(problem):
    nodes = problem.get("nodes")
    if not nodes:
        raise ScenarioError("distributed problem lacks 'nodes'")
    return [QuadraticObjective(_arr(nd, "Q", "node"), nd.get("q")) for nd in nodes]


def build_least_squares(problem):
    return LeastSquaresInstance(_arr(problem, "H", "least-squares"), _arr(problem, "z", "least-squares"))


def _family(problem):
    fam = problem.get("family", "moving-target")
    if fam != "moving-target":
        raise ScenarioError(f"unknown time-varying family {fam!r}")


def build_tv(problem):
    _family(problem)
    n = len(_arr(problem, "Q", "tv"))
    A = _arr(problem, "A", "tv")
    k = np.atleast_2d(A).shape[0]
    return moving_target_problem(
        Q=problem["Q"], r0=problem.get("r0", np.zeros(n)), u=problem.get("u", np.ones(n) / np.sqrt(n)),
        A=A, b0=problem.get("b0", np.zeros(k)), w=problem.get("w", np.ones(k) / np.sqrt(k)),
        amp_r=float(problem.get("amp_r", 0.1)), amp_b=float(problem.get("amp_b", 0.1)),
        omega=float(problem.get("omega", 1.0)))


def build_tv_distributed(problem, spec):
    _family(problem)
    nodes = problem.get("nodes")
    if not nodes:
        raise ScenarioError("tv-distributed problem lacks 'nodes'")
    objs = []
    for nd in nodes:
        n = len(_arr(nd, "Q", "node"))
        objs.append(moving_target_node(nd["Q"], nd.get("r0", np.zeros(n)), nd.get("u", np.ones(n) / np.sqrt(n)),
                                       amp=float(nd.get("amp", 0.1)), omega=float(nd.get("omega", 1.0)),
                                       phase=float(nd.get("phase", 0.0))))
    return TVDistributedProblem(objs, spec)


def spectrum_of(scenario):
    return graph_spectrum(scenario.graph)
