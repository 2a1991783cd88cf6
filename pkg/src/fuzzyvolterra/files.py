"""Problem files, family files and the band table (JSON in, CSV out)."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from . import fuzzy
from .analysis import FamilySample
from .fuzzy import FuzzyNumber
from .quadrature import FuzzyTrajectory, TimeGrid
from .solver import ProblemSpec, RhsSpec

PROBLEM_FIELDS = {"a", "q", "u0", "rhs", "R", "K", "n", "gamma", "tol", "max_iter", "t_min"}
REQUIRED_FIELDS = {"a", "q", "u0", "rhs", "R"}
RHS_FIELDS = {
    "linear": {"kind", "lambda"},
    "singular_linear": {"kind", "lambda", "r"},
    "affine": {"kind", "c", "g"},
}
FAMILY_FIELDS = {"label", "K", "members", "triangular"}
BAND_HEADER = ["t", "alpha", "lower", "upper"]


class InputError(ValueError):
    pass


def _reject_unknown(doc: dict, allowed: set, where: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise InputError(f"unknown field(s) in {where}: {', '.join(sorted(unknown))}")


def _fuzzy_value(spec: Any, levels: int, where: str) -> FuzzyNumber:
    """A crisp number, a triangular triple, or ``{"lower": [...], "upper": [...]}``."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return fuzzy.crisp(float(spec), levels)
    if isinstance(spec, list) and len(spec) == 3 and all(isinstance(x, (int, float)) for x in spec):
        return fuzzy.triangular(*map(float, spec), levels=levels)
    if isinstance(spec, dict):
        if "triangular" in spec:
            _reject_unknown(spec, {"triangular"}, where)
            return fuzzy.triangular(*map(float, spec["triangular"]), levels=levels)
        _reject_unknown(spec, {"lower", "upper"}, where)
        if "lower" in spec and "upper" in spec:
            return FuzzyNumber(spec["lower"], spec["upper"])
    raise InputError(f"{where}: expected a number, [left, mode, right], or lower/upper arrays")


def _fuzzy_field(spec: Any, levels: int, where: str) -> Union[FuzzyNumber, FuzzyTrajectory]:
    if isinstance(spec, dict) and "table" in spec:
        _reject_unknown(spec, {"table"}, where)
        rows = spec["table"]
        if not isinstance(rows, list) or len(rows) < 2:
            raise InputError(f"{where}: a per-node table needs at least two rows")
        times, values = [], []
        for i, row in enumerate(rows):
            if not isinstance(row, dict) or "t" not in row:
                raise InputError(f"{where}: table row {i} needs a 't' field")
            _reject_unknown(row, {"t", "lower", "upper", "triangular", "value"}, f"{where} row {i}")
            times.append(float(row["t"]))
            value = row.get("value", {k: v for k, v in row.items() if k != "t"})
            values.append(_fuzzy_value(value, levels, f"{where} row {i}"))
        k = values[0].levels
        values = [v.resample(k) for v in values]
        return FuzzyTrajectory.from_values(TimeGrid(np.array(times)), values)
    return _fuzzy_value(spec, levels, where)


def _checked_value(u: Union[FuzzyNumber, FuzzyTrajectory], where: str):
    if isinstance(u, FuzzyNumber):
        verdict = fuzzy.validate(u)
        if not verdict:
            raise InputError(f"{where}: {verdict.message}")
    return u


def problem_from_dict(doc: dict, overrides: Optional[dict] = None) -> ProblemSpec:
    """Build a :class:`ProblemSpec`; ``overrides`` use the file's field names (K, n, tol, max_iter)."""
    if not isinstance(doc, dict):
        raise InputError("problem file must hold a JSON object")
    _reject_unknown(doc, PROBLEM_FIELDS, "problem")
    missing = REQUIRED_FIELDS - set(doc)
    if missing:
        raise InputError(f"missing field(s) in problem: {', '.join(sorted(missing))}")
    doc = dict(doc)
    for key, value in (overrides or {}).items():
        if value is not None:
            doc[key] = value
    levels = int(doc.get("K", fuzzy.DEFAULT_LEVELS))
    try:
        a = float(doc["a"])
        u0 = _checked_value(_fuzzy_field(doc["u0"], levels, "u0"), "u0")
        rhs = _rhs_from_dict(doc["rhs"], levels, a)
        return ProblemSpec(
            a=a,
            q=float(doc["q"]),
            u0=u0,
            rhs=rhs,
            R=float(doc["R"]),
            levels=levels,
            steps=int(doc.get("n", 256)),
            grading=None if doc.get("gamma") is None else float(doc["gamma"]),
            tol=float(doc.get("tol", 1e-12)),
            max_iter=int(doc.get("max_iter", 200)),
            t_min=None if doc.get("t_min") is None else float(doc["t_min"]),
        )
    except InputError:
        raise
    except (TypeError, KeyError) as exc:
        raise InputError(f"malformed problem: {exc}") from exc


def _rhs_from_dict(doc: Any, levels: int, a: float) -> RhsSpec:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise InputError("rhs must be an object with a 'kind'")
    kind = doc["kind"]
    if kind not in RHS_FIELDS:
        raise InputError(f"unknown rhs kind {kind!r}")
    _reject_unknown(doc, RHS_FIELDS[kind], f"rhs ({kind})")
    if kind == "linear":
        return RhsSpec.linear(float(doc.get("lambda", 0.0)))
    if kind == "singular_linear":
        return RhsSpec.singular_linear(float(doc.get("lambda", 0.0)), float(doc["r"]))
    if "c" not in doc or "g" not in doc:
        raise InputError("affine rhs needs 'c' and 'g'")
    g = _checked_value(_fuzzy_field(doc["g"], levels, "rhs.g"), "rhs.g")
    return RhsSpec.affine(doc["c"], g, horizon=a)


def _value_to_dict(u: Union[FuzzyNumber, FuzzyTrajectory]) -> Any:
    if isinstance(u, FuzzyNumber):
        return {"lower": u.lower.tolist(), "upper": u.upper.tolist()}
    return {
        "table": [
            {"t": float(t), "lower": u.lower[j].tolist(), "upper": u.upper[j].tolist()}
            for j, t in enumerate(u.grid.nodes)
        ]
    }


def problem_to_dict(problem: ProblemSpec) -> dict:
    """Resolved problem in file form (bands spelled out, defaults filled in)."""
    rhs = problem.rhs
    if rhs.kind == "linear":
        rdoc = {"kind": "linear", "lambda": rhs.lam}
    elif rhs.kind == "singular_linear":
        rdoc = {"kind": "singular_linear", "lambda": rhs.lam, "r": rhs.r}
    else:
        rdoc = {
            "kind": "affine",
            "c": [[float(t), float(c)] for t, c in zip(rhs.c_times, rhs.c_values)],
            "g": _value_to_dict(rhs.g),
        }
    return {
        "a": problem.a,
        "q": problem.q,
        "u0": _value_to_dict(problem.u0),
        "rhs": rdoc,
        "R": problem.R,
        "K": problem.levels,
        "n": problem.steps,
        "gamma": problem.grading,
        "tol": problem.tol,
        "max_iter": problem.max_iter,
        "t_min": problem.t_min,
    }


def load_json(path: Union[str, Path]) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def load_problem(path: Union[str, Path], overrides: Optional[dict] = None) -> ProblemSpec:
    return problem_from_dict(load_json(path), overrides)


def family_from_dict(doc: dict) -> FamilySample:
    """``{"label", "K", "members": [bands...], "triangular": [[l, m, r], ...]}``."""
    if not isinstance(doc, dict):
        raise InputError("family file must hold a JSON object")
    _reject_unknown(doc, FAMILY_FIELDS, "family")
    levels = int(doc.get("K", fuzzy.DEFAULT_LEVELS))
    members = []
    for i, spec in enumerate(doc.get("members", [])):
        members.append(_fuzzy_value(spec, levels, f"member {i}"))
    for i, triple in enumerate(doc.get("triangular", [])):
        if not isinstance(triple, list) or len(triple) != 3:
            raise InputError(f"triangular entry {i} must be [left, mode, right]")
        members.append(fuzzy.triangular(*map(float, triple), levels=levels))
    if not members:
        raise InputError("family has no members")
    return FamilySample(members, str(doc.get("label", "")))


def family_to_dict(family: FamilySample) -> dict:
    return {
        "label": family.label,
        "K": family.levels,
        "members": [{"lower": u.lower.tolist(), "upper": u.upper.tolist()} for u in family.members],
    }


def load_family(path: Union[str, Path]) -> FamilySample:
    return family_from_dict(load_json(path))


def _num(x: float) -> str:
    return format(float(x), ".17g")


def write_bands(path: Union[str, Path], traj: FuzzyTrajectory) -> int:
    """Write ``t,alpha,lower,upper`` rows (t-major); returns the row count."""
    alphas = fuzzy.alpha_nodes(traj.levels)
    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(BAND_HEADER)
        for j, t in enumerate(traj.grid.nodes):
            for i, a in enumerate(alphas):
                writer.writerow([_num(t), _num(a), _num(traj.lower[j, i]), _num(traj.upper[j, i])])
                rows += 1
    return rows


def read_bands(path: Union[str, Path]) -> np.ndarray:
    """Rows of the band table as an ``(m, 4)`` array."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != BAND_HEADER:
            raise InputError(f"band table header must be {','.join(BAND_HEADER)}, got {header}")
        data = [[float(x) for x in row] for row in reader]
    return np.array(data, dtype=float).reshape(-1, 4)


def check_bands(path: Union[str, Path]) -> int:
    """Re-read a band table and confirm ``lower <= upper`` on every row; returns the row count."""
    rows = read_bands(path)
    bad = np.nonzero(rows[:, 2] > rows[:, 3])[0]
    if bad.size:
        raise InputError(f"band table row {int(bad[0]) + 2} has lower > upper")
    if np.any((rows[:, 1] < 0) | (rows[:, 1] > 1)):
        raise InputError("band table has alpha outside [0, 1]")
    return rows.shape[0]
