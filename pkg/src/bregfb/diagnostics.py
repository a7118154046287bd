"""Iteration traces and the verdicts computed from them.

Every check is a pure function of a trace.  Sums use ``math.fsum`` so that
re-diagnosing a reloaded trace reproduces the verdicts bit for bit.

Asymptotic statements are replaced by fixed finite-horizon surrogates:

* summable: the last ``floor(0.2 N)`` terms contribute less than 1% of the
  total;
* o(1/n): ``N gap_N <= m gap_m / 4`` with ``m = ceil(N / 10)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

import numpy as np

from .core import ContractError

__all__ = [
    "ROW_FIELDS",
    "POINT_FIELDS",
    "CSV_COLUMNS",
    "IterationTrace",
    "Verdict",
    "tail_rule",
    "check_quasi_fejer",
    "check_summability",
    "check_rate_o1n",
    "check_weighted_step_sum",
    "check_monotone_objective",
    "check_focusing_residual",
    "CHECKS",
    "diagnose",
    "report_document",
    "dumps_report",
]

# per-step quantities of step n -> n+1
STEP_FIELDS = (
    "gamma",
    "eta",
    "d_step_fwd",
    "d_step_bwd",
    "item_iii",
    "item_v",
    "item_vi",
    "theta_qty",
    "resolvent_gap",
)
# quantities of the point x_n; also recorded for the final iterate
POINT_FIELDS = ("d_to_z", "delta", "b_pair", "obj", "gap", "residual")
ROW_FIELDS = STEP_FIELDS + POINT_FIELDS
CSV_COLUMNS = ("n", "gamma", "d_step_fwd", "d_step_bwd", "d_to_z", "delta",
               "theta_qty", "obj", "gap", "residual")

TAIL_FRACTION = 0.2
TAIL_SHARE = 0.01
RATE_DECAY = 0.25
RATE_ANCHOR = 10
FEJER_REL = 1e-9
THETA_FLOOR = -1e-10
MONOTONE_REL = 1e-10
GAP_SLACK = 1e-10
GAP_FLOOR = 1e-12
RESIDUAL_TOL = 1e-8


def _enc(v):
    if v is None:
        return None
    v = float(v)
    if math.isnan(v):
        return None
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return v


def _dec(v):
    if v is None:
        return math.nan
    if v == "Infinity":
        return math.inf
    if v == "-Infinity":
        return -math.inf
    return float(v)


def _clean(obj):
    """Recursively make ``obj`` strict-JSON safe."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _enc(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


class IterationTrace:
    """Per-iteration record of one run.

    Row ``n`` holds ``x_n``, ``x_n*`` and the quantities of the step
    ``n -> n+1``; ``final`` holds the last iterate ``x_N`` with its point
    quantities.  For ``n = 0`` the dual vector is the minimal-norm element
    of ``A x_0`` (NaN if that is unavailable).  Iterates are kept for every
    ``n < dense_cap`` and every ``thin``-th index after that; scalar columns
    are always dense.
    """

    def __init__(self, dim, meta, dense_cap=10_000, thin=10):
        self.dim = int(dim)
        self.meta = dict(meta)
        self.dense_cap = int(dense_cap)
        self.thin = int(thin)
        self.n: List[int] = []
        self.cols: Dict[str, List[float]] = {k: [] for k in ROW_FIELDS}
        self.x_index: List[int] = []
        self._x: List[np.ndarray] = []
        self._xs: List[np.ndarray] = []
        self.final: Dict[str, object] = {}
        self.status = "running"
        self.cause: Optional[str] = None

    @classmethod
    def start(cls, dim, meta, dense_cap=10_000, thin=10):
        return cls(dim, meta, dense_cap, thin)

    # recording ------------------------------------------------------------

    def append_row(self, n, x, xs, row):
        if n != len(self.n):
            raise ContractError("rows must be appended in order")
        self.n.append(int(n))
        for k in ROW_FIELDS:
            self.cols[k].append(float(row.get(k, math.nan)))
        if n < self.dense_cap or n % self.thin == 0:
            self.x_index.append(int(n))
            self._x.append(np.array(x, dtype=float))
            self._xs.append(np.array(xs, dtype=float))

    def finish(self, x, xs, point, status, cause=None):
        self.final = {"n": len(self.n), "x": np.array(x, dtype=float),
                      "x_star": np.array(xs, dtype=float)}
        for k in POINT_FIELDS:
            self.final[k] = float(point.get(k, math.nan))
        self.status = status
        self.cause = cause

    # access ---------------------------------------------------------------

    @property
    def N(self) -> int:
        """Number of completed steps."""
        return len(self.n)

    @property
    def certified(self) -> bool:
        return bool(self.meta.get("certified", False))

    def column(self, name) -> np.ndarray:
        """Values of ``name`` for rows ``0 .. N-1``."""
        return np.array(self.cols[name], dtype=float)

    def series(self, name) -> np.ndarray:
        """A point quantity for ``0 .. N``, the final iterate included."""
        if name not in POINT_FIELDS:
            raise ContractError(f"{name!r} is not a point quantity")
        return np.array(self.cols[name] + [self.final.get(name, math.nan)], dtype=float)

    @property
    def iterates(self) -> np.ndarray:
        return np.array(self._x).reshape(-1, self.dim)

    @property
    def dual_iterates(self) -> np.ndarray:
        return np.array(self._xs).reshape(-1, self.dim)

    def x_at(self, n) -> np.ndarray:
        if n == self.N and self.final:
            return self.final["x"].copy()
        try:
            return self._x[self.x_index.index(n)].copy()
        except ValueError:
            raise ContractError(f"iterate {n} was not stored") from None

    @property
    def x_final(self) -> np.ndarray:
        return self.final["x"].copy()

    @property
    def residual_final(self) -> float:
        return float(self.final.get("residual", math.nan))

    # serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        fin = {k: (_clean(v) if isinstance(v, np.ndarray) else _enc(v) if k != "n" else v)
               for k, v in self.final.items()}
        return {
            "dim": self.dim,
            "meta": _clean(self.meta),
            "dense_cap": self.dense_cap,
            "thin": self.thin,
            "status": self.status,
            "cause": self.cause,
            "n": list(self.n),
            "columns": {k: [_enc(v) for v in self.cols[k]] for k in ROW_FIELDS},
            "x_index": list(self.x_index),
            "x": [_clean(v) for v in self._x],
            "x_star": [_clean(v) for v in self._xs],
            "final": fin,
        }

    @classmethod
    def from_dict(cls, d) -> "IterationTrace":
        tr = cls(d["dim"], d["meta"], d["dense_cap"], d["thin"])
        tr.status = d["status"]
        tr.cause = d["cause"]
        tr.n = [int(v) for v in d["n"]]
        tr.cols = {k: [_dec(v) for v in d["columns"][k]] for k in ROW_FIELDS}
        tr.x_index = [int(v) for v in d["x_index"]]
        tr._x = [np.array([_dec(u) for u in v]) for v in d["x"]]
        tr._xs = [np.array([_dec(u) for u in v]) for v in d["x_star"]]
        fin = dict(d["final"])
        if fin:
            fin["x"] = np.array([_dec(u) for u in fin["x"]])
            fin["x_star"] = np.array([_dec(u) for u in fin["x_star"]])
            for k in POINT_FIELDS:
                fin[k] = _dec(fin.get(k))
        tr.final = fin
        return tr

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=False)

    @classmethod
    def loads(cls, text) -> "IterationTrace":
        return cls.from_dict(json.loads(text))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "IterationTrace":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())

    def to_csv(self, path=None) -> str:
        """CSV export, one row per stored index plus the final iterate.

        Floats use 17 significant digits; NaN is written as an empty cell.
        """

        def fmt(v):
            v = float(v)
            return "" if math.isnan(v) else format(v, ".17g")

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(CSV_COLUMNS) + [f"x{k}" for k in range(self.dim)])
        stored = dict(zip(self.x_index, self._x))
        for i, n in enumerate(self.n):
            x = stored.get(n)
            xs = [fmt(v) for v in x] if x is not None else [""] * self.dim
            w.writerow([n] + [fmt(self.cols[c][i]) for c in CSV_COLUMNS[1:]] + xs)
        if self.final:
            vals = [self.final["n"]]
            for c in CSV_COLUMNS[1:]:
                vals.append(fmt(self.final[c]) if c in POINT_FIELDS else "")
            w.writerow(vals + [fmt(v) for v in self.final["x"]])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


@dataclass
class Verdict:
    """Outcome of one check: ``status`` is pass, fail or not_applicable."""

    name: str
    status: str
    metrics: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)

    @property
    def passed(self) -> Optional[bool]:
        if self.status == "not_applicable":
            return None
        return self.status == "pass"

    def to_dict(self):
        return _clean({"pass": self.passed, "status": self.status,
                       "metrics": self.metrics, "thresholds": self.thresholds})


def _na(name, reason):
    return Verdict(name, "not_applicable", {"reason": reason})


def tail_rule(terms) -> dict:
    """Finite-horizon summability surrogate for a sequence of terms."""
    terms = [float(t) for t in terms]
    N = len(terms)
    k = int(math.floor(TAIL_FRACTION * N))
    total = math.fsum(terms)
    tail = math.fsum(terms[N - k:]) if k else 0.0
    finite = math.isfinite(total) and math.isfinite(tail)
    ok = finite and (abs(tail) < TAIL_SHARE * abs(total) or tail == 0.0)
    return {"pass": ok, "total": total, "tail": tail, "tail_terms": k, "terms": N}


def check_quasi_fejer(trace: IterationTrace) -> Verdict:
    """Delta_{n+1} <= (1 + eta_n) Delta_n - theta_n and theta_n >= 0."""
    name = "check_quasi_fejer"
    if not trace.meta.get("has_z") or trace.N == 0:
        return _na(name, "known solution missing" if trace.N else "empty trace")
    delta = trace.series("delta")
    eta = trace.column("eta")
    theta = trace.column("theta_qty")
    worst, worst_n = -math.inf, None
    theta_min = math.inf
    start = 0 if math.isfinite(delta[0]) else 1
    for n in range(start, trace.N):
        excess = delta[n + 1] - ((1.0 + eta[n]) * delta[n] - theta[n])
        slack = FEJER_REL * (1.0 + abs(delta[n]))
        score = excess - slack
        if not math.isfinite(excess):
            score = math.inf
        if score > worst:
            worst, worst_n = score, n
        theta_min = min(theta_min, theta[n])
    ok = worst <= 0.0 and theta_min >= THETA_FLOOR
    dz = trace.series("d_to_z")
    downward = math.fsum(max(0.0, dz[n] - dz[n + 1]) for n in range(trace.N))
    bound = float(delta[start]) * math.prod(1.0 + e for e in eta[start:])
    return Verdict(
        name,
        "pass" if ok else "fail",
        {"max_violation": worst, "at_n": worst_n, "theta_min": theta_min,
         "first_checked_n": start, "d_to_z_downward_variation": downward,
         "delta0_eta_product": bound},
        {"slack": "1e-9*(1+|delta_n|)", "theta_floor": THETA_FLOOR},
    )


def check_summability(trace: IterationTrace, cert=None) -> Verdict:
    """Tail rule on the three summable sequences of the convergence proof."""
    name = "check_summability"
    if trace.N == 0:
        return _na(name, "empty trace")
    delta2 = cert.delta2 if cert is not None else trace.meta.get("delta2", 0.0)
    items = {"item_iii": tail_rule(trace.column("item_iii"))}
    if trace.meta.get("has_z"):
        items["item_v"] = tail_rule(trace.column("item_v"))
        if delta2 == 1.0:
            items["item_vi"] = {"pass": None, "vacuous": True}
        else:
            items["item_vi"] = tail_rule(trace.column("item_vi"))
    else:
        items["item_v"] = {"pass": None, "reason": "known solution missing"}
        items["item_vi"] = {"pass": None, "reason": "known solution missing"}
    ok = all(v["pass"] is not False for v in items.values())
    return Verdict(name, "pass" if ok else "fail", items,
                   {"tail_fraction": TAIL_FRACTION, "tail_share": TAIL_SHARE})


def _gaps(trace):
    return trace.series("gap")


def check_rate_o1n(trace: IterationTrace) -> Verdict:
    """Monotone gaps, quarter decay of n gap_n and a summable gap sequence."""
    name = "check_rate_o1n"
    if trace.meta.get("known_min") is None or trace.N == 0:
        return _na(name, "known minimum missing" if trace.N else "empty trace")
    gap = _gaps(trace)
    N = trace.N
    if not np.all(np.isfinite(gap)):
        return Verdict(name, "fail", {"reason": "non-finite gap"},
                       {"slack": GAP_SLACK})
    floor = GAP_FLOOR * (1.0 + abs(float(trace.meta["known_min"])))
    below = float(gap.min())
    g = np.maximum(gap, 0.0)
    rises = np.diff(gap)
    worst_rise = float(rises.max()) if rises.size else 0.0
    a = worst_rise <= GAP_SLACK
    m = int(math.ceil(N / RATE_ANCHOR))
    ng = [n * float(g[n]) for n in range(N + 1)]
    b = ng[N] <= RATE_DECAY * ng[m]
    tail = tail_rule(g)
    ok = a and b and tail["pass"] and below >= -floor
    return Verdict(
        name,
        "pass" if ok else "fail",
        {"max_increase": worst_rise, "anchor_index": m, "n_gap_anchor": ng[m],
         "n_gap_final": ng[N], "min_gap": below, "tail": tail, "n_gap": ng},
        {"slack": GAP_SLACK, "decay": RATE_DECAY, "anchor": "ceil(N/10)",
         "gap_floor": floor},
    )


def check_weighted_step_sum(trace: IterationTrace) -> Verdict:
    """Tail rule on n (D(x_{n+1}, x_n) + D(x_n, x_{n+1}))."""
    name = "check_weighted_step_sum"
    if trace.N == 0:
        return _na(name, "empty trace")
    fw, bw = trace.column("d_step_fwd"), trace.column("d_step_bwd")
    terms = [n * (fw[n] + bw[n]) for n in range(trace.N)]
    tail = tail_rule(terms)
    return Verdict(name, "pass" if tail["pass"] else "fail",
                   {"S_N": tail["total"], "tail": tail},
                   {"tail_fraction": TAIL_FRACTION, "tail_share": TAIL_SHARE})


def check_monotone_objective(trace: IterationTrace) -> Verdict:
    """obj_{n+1} <= obj_n + 1e-10 (1 + |obj_n|)."""
    name = "check_monotone_objective"
    if not trace.meta.get("has_objective"):
        return _na(name, "no minimization structure")
    obj = trace.series("obj")
    worst, at = -math.inf, None
    for n in range(len(obj) - 1):
        score = obj[n + 1] - obj[n] - MONOTONE_REL * (1.0 + abs(obj[n]))
        if not math.isfinite(score):
            score = math.inf
        if score > worst:
            worst, at = score, n
    ok = worst <= 0.0 or at is None
    return Verdict(name, "pass" if ok else "fail",
                   {"max_increase": worst if at is not None else 0.0, "at_n": at},
                   {"slack": "1e-10*(1+|obj_n|)"})


def check_focusing_residual(trace: IterationTrace, tol: float = RESIDUAL_TOL) -> Verdict:
    """Inclusion residual ||x_N* + B x_N|| at the final iterate."""
    name = "check_focusing_residual"
    r = trace.series("residual")
    if not math.isfinite(r[-1]):
        return _na(name, "residual not evaluable at the final iterate")
    return Verdict(name, "pass" if r[-1] <= tol else "fail",
                   {"r_final": float(r[-1]), "r_first": float(r[0])},
                   {"tol": tol})


CHECKS = {
    "check_quasi_fejer": check_quasi_fejer,
    "check_summability": check_summability,
    "check_rate_o1n": check_rate_o1n,
    "check_weighted_step_sum": check_weighted_step_sum,
    "check_monotone_objective": check_monotone_objective,
    "check_focusing_residual": check_focusing_residual,
}


def diagnose(trace: IterationTrace, checks: Optional[Iterable[str]] = None,
             residual_tol: float = RESIDUAL_TOL) -> Dict[str, Verdict]:
    """Run the named checks (all by default)."""
    names = list(CHECKS) if checks is None else list(checks)
    out = {}
    for nm in names:
        if nm not in CHECKS:
            raise ContractError(f"unknown check {nm!r}")
        fn = CHECKS[nm]
        out[nm] = fn(trace, residual_tol) if nm == "check_focusing_residual" else fn(trace)
    return out


def report_document(trace: IterationTrace, verdicts: Dict[str, Verdict]) -> dict:
    fin = trace.final
    return _clean({
        "name": trace.meta.get("name"),
        "fingerprint": trace.meta.get("fingerprint"),
        "status": trace.status,
        "cause": trace.cause,
        "certified": trace.certified,
        "forced": trace.meta.get("forced", False),
        "iterations": trace.N,
        "x_final": fin.get("x", np.array([])),
        "residual_final": fin.get("residual", math.nan),
        "validation": trace.meta.get("validation"),
        "checks": {k: v.to_dict() for k, v in verdicts.items()},
    })


def dumps_report(doc: dict) -> str:
    return json.dumps(_clean(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"
