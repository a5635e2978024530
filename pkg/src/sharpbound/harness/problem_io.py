"""JSON problem and result documents.

A problem document has an ``objective`` block ``{"a": K x N, "b": K}`` and an
``ambiguity`` block whose ``kind`` is one of ``pod_bivariate``,
``boolean_higher_order``, ``moment`` or ``generic_submodular``.  An optional
``decision`` block turns it into a robust decision problem.  Indices are
0-based throughout.  See the README for the full field list.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import (AffineDecisionObjective, BooleanHigherOrder, DiscreteMarginal, GenericSubmodular,
                    JointDistribution, Moment, PiecewiseAffineObjective, PodBivariate, Polyhedron,
                    ProductSupport, SpecError, SubmodularConstraint, support_of)
from ..genbound import marginal_constraints, product_lower_bound
from ..lattice import LatticeFunction


class ParseError(ValueError):
    """A document is malformed or does not match the schema."""


@dataclass
class Problem:
    spec: object
    objective: PiecewiseAffineObjective | None
    X: Polyhedron | None = None
    decision: AffineDecisionObjective | None = None


def _need(doc: dict, key: str, where: str):
    if not isinstance(doc, dict) or key not in doc:
        raise ParseError("%s: missing field %r" % (where, key))
    return doc[key]


def _marginals(raw, where: str) -> list[DiscreteMarginal]:
    if not isinstance(raw, list) or not raw:
        raise ParseError("%s: marginals must be a non-empty list" % where)
    return [DiscreteMarginal(_need(m, "values", where), _need(m, "probs", where)) for m in raw]


def _generic_constraint(c: dict, support: ProductSupport) -> SubmodularConstraint:
    kind = _need(c, "type", "constraint")
    bound = float(_need(c, "bound", "constraint"))
    name = c.get("name", "")
    if kind == "table":
        return SubmodularConstraint(LatticeFunction.from_table(support, _need(c, "values", "constraint")), bound, name)
    if kind == "linear":
        coef = np.asarray(_need(c, "coef", "constraint"), dtype=float).reshape(support.n)
        const = float(c.get("const", 0.0))
        f = LatticeFunction(support, lambda xi: float(np.dot(coef, xi)) + const, lambda pts: pts @ coef + const)
        return SubmodularConstraint(f, bound, name)
    if kind == "product_lower":
        return product_lower_bound(support, int(_need(c, "i", "constraint")), int(_need(c, "j", "constraint")), bound)
    raise ParseError("unknown generic constraint type %r" % kind)


def spec_from_dict(doc: dict):
    kind = _need(doc, "kind", "ambiguity")
    if kind == "pod_bivariate":
        margs = _marginals(_need(doc, "marginals", kind), kind)
        raw = doc.get("pair_targets", "default")
        if raw == "default":
            targets = None
        else:
            targets = {(int(_need(t, "i", "pair target")), int(_need(t, "j", "pair target")),
                        float(_need(t, "xi_i", "pair target")), float(_need(t, "xi_j", "pair target"))):
                       float(_need(t, "bound", "pair target")) for t in raw}
        return PodBivariate(margs, targets)
    if kind == "boolean_higher_order":
        raw = doc.get("q_targets", "default")
        q = None if raw == "default" else {tuple(int(v) for v in _need(t, "subset", "q target")):
                                           float(_need(t, "bound", "q target")) for t in raw}
        return BooleanHigherOrder(_need(doc, "p", kind), int(_need(doc, "M", kind)), q)
    if kind == "moment":
        support = ProductSupport(_need(doc, "support", kind))
        cross = {(int(_need(c, "i", "cross moment")), int(_need(c, "j", "cross moment"))):
                 float(_need(c, "bound", "cross moment")) for c in doc.get("cross_moments", [])}
        return Moment(support, _need(doc, "moments", kind), cross, doc.get("functions"))
    if kind == "generic_submodular":
        margs = _marginals(doc["marginals"], kind) if "marginals" in doc else None
        support = ProductSupport(doc["support"]) if "support" in doc else (support_of(margs) if margs else None)
        if support is None:
            raise ParseError("generic_submodular: need a support or marginals")
        cons = list(marginal_constraints(support, margs)) if margs else []
        cons += [_generic_constraint(c, support) for c in doc.get("constraints", [])]
        return GenericSubmodular(support, cons, tuple(margs) if margs else None)
    raise ParseError("unknown ambiguity kind %r" % kind)


def problem_from_dict(doc: dict) -> Problem:
    try:
        spec = spec_from_dict(_need(doc, "ambiguity", "problem"))
        obj = None
        if "objective" in doc:
            o = doc["objective"]
            obj = PiecewiseAffineObjective(_need(o, "a", "objective"), _need(o, "b", "objective"))
        X = dec = None
        if "decision" in doc:
            d = doc["decision"]
            x = _need(d, "X", "decision")
            lb = np.asarray(_need(x, "lb", "decision.X"), dtype=float)
            G = x.get("G", np.zeros((0, lb.size)))
            X = Polyhedron(G, x.get("h", np.zeros(len(G))), lb, _need(x, "ub", "decision.X"))
            dec = AffineDecisionObjective(_need(d, "A", "decision"), _need(d, "a0", "decision"),
                                          _need(d, "c", "decision"), _need(d, "b0", "decision"))
        if obj is None and dec is None:
            raise ParseError("problem needs an objective or a decision block")
        return Problem(spec, obj, X, dec)
    except (SpecError, TypeError, KeyError, IndexError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc)) from exc


def load_problem(path) -> Problem:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(str(exc)) from exc
    return problem_from_dict(doc)


def spec_to_dict(spec) -> dict:
    def marg(ms):
        return [{"values": list(m.values), "probs": list(m.probs)} for m in ms]

    if isinstance(spec, PodBivariate):
        out = {"kind": "pod_bivariate", "marginals": marg(spec.marginals)}
        out["pair_targets"] = "default" if spec.pair_targets is None else [
            {"i": i, "j": j, "xi_i": s, "xi_j": t, "bound": v} for (i, j, s, t), v in spec.targets().items()]
        return out
    if isinstance(spec, BooleanHigherOrder):
        out = {"kind": "boolean_higher_order", "p": list(spec.p), "M": spec.M}
        out["q_targets"] = "default" if spec.q_targets is None else [
            {"subset": list(I), "bound": v} for I, v in sorted(spec.q_targets.items(), key=lambda kv: (len(kv[0]), kv[0]))]
        return out
    if isinstance(spec, Moment):
        out = {"kind": "moment", "support": [list(d) for d in spec.support.dims],
               "moments": [list(m) for m in spec.moments],
               "cross_moments": [{"i": i, "j": j, "bound": v} for (i, j), v in sorted(spec.cross_moments.items())]}
        if spec.functions is not None:
            out["functions"] = [t.tolist() for t in spec.functions]
        return out
    if isinstance(spec, GenericSubmodular):
        # oracles are arbitrary callables, so they are written out as tables
        out = {"kind": "generic_submodular", "support": [list(d) for d in spec.support.dims], "constraints": []}
        for c in spec.constraints:
            f = c.f if isinstance(c.f, LatticeFunction) else LatticeFunction(spec.support, c.f)
            out["constraints"].append({"type": "table", "values": f.table().tolist(), "bound": c.gamma,
                                       "name": c.name})
        return out
    raise TypeError("unknown ambiguity set %s" % type(spec).__name__)


def problem_to_dict(problem: Problem) -> dict:
    out = {"ambiguity": spec_to_dict(problem.spec)}
    if problem.objective is not None:
        out["objective"] = {"a": problem.objective.a.tolist(), "b": problem.objective.b.tolist()}
    if problem.decision is not None:
        X, d = problem.X, problem.decision
        out["decision"] = {"X": {"lb": X.lb.tolist(), "ub": X.ub.tolist(), "G": X.G.tolist(), "h": X.h.tolist()},
                           "A": d.A.tolist(), "a0": d.a0.tolist(), "c": d.c.tolist(), "b0": d.b0.tolist()}
    return out


def joint_to_list(joint: JointDistribution) -> list:
    return [{"point": list(pt), "mass": w} for pt, w in joint.mass.items()]


def joint_from_list(support: ProductSupport, rows) -> JointDistribution:
    try:
        return JointDistribution(support, {tuple(r["point"]): float(r["mass"]) for r in rows})
    except (KeyError, TypeError) as exc:
        raise ParseError("bad distribution record: %s" % exc) from exc


def dump_json(doc, path=None) -> str:
    text = json.dumps(doc, indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
