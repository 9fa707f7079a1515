"""Result rows and their CSV / JSON serialisation."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

HEADER = (
    "experiment", "statistic", "n", "s", "t", "m", "x", "alpha", "k",
    "exact", "estimate", "error", "tolerance", "pass", "seconds",
)
PARAMS = ("n", "s", "t", "m", "x", "alpha", "k")
# exact agreement counts as a pass even against a strict-decrease bound of 0
EXACT_FLOOR = 1e-12


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, tuple):
        return ";".join(_fmt(x) for x in v)
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def _sort_value(v):
    if v is None:
        return (0,)
    if isinstance(v, tuple):
        return (1,) + tuple(float(x) for x in v)
    return (1, float(v))


@dataclass
class Row:
    """One audited comparison.

    ``statistic`` names what was compared. Rows ending in ``_pvalue`` pass when
    ``estimate > tolerance``; rows without a tolerance are informational and
    always pass; all others pass when ``error < tolerance`` or
    ``error <= EXACT_FLOOR``.
    """

    experiment: str
    statistic: str
    params: dict = field(default_factory=dict)
    exact: float | None = None
    estimate: float | None = None
    error: float | None = None
    tolerance: float | None = None
    seconds: float | None = None

    @property
    def passed(self) -> bool:
        if self.tolerance is None:
            return True
        if self.statistic.endswith("_pvalue"):
            return self.estimate > self.tolerance
        return self.error < self.tolerance or self.error <= EXACT_FLOOR

    def sort_key(self):
        return (self.statistic,) + tuple(_sort_value(self.params.get(p)) for p in PARAMS)

    def as_record(self) -> dict:
        rec = {"experiment": self.experiment, "statistic": self.statistic}
        for p in PARAMS:
            v = self.params.get(p)
            rec[p] = list(v) if isinstance(v, tuple) else v
        rec.update(
            exact=self.exact, estimate=self.estimate, error=self.error,
            tolerance=self.tolerance, seconds=self.seconds,
        )
        rec["pass"] = self.passed
        return {k: rec[k] for k in HEADER}


@dataclass
class ExperimentResult:
    experiment: str
    rows: list[Row] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def sorted(self) -> "ExperimentResult":
        return ExperimentResult(self.experiment, sorted(self.rows, key=Row.sort_key))

    def summary(self) -> str:
        ok = sum(r.passed for r in self.rows)
        verdict = "PASS" if self.passed else "FAIL"
        return f"{self.experiment}: {ok}/{len(self.rows)} rows pass [{verdict}]"


def to_csv(res: ExperimentResult) -> str:
    buf = io.StringIO()
    buf.write(",".join(HEADER) + "\n")
    for row in res.sorted().rows:
        rec = row.as_record()
        cells = (_fmt(row.params.get(k)) if k in PARAMS else _fmt(rec[k]) for k in HEADER)
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, list):
        return [_json_safe(x) for x in v]
    return v


def to_json(res: ExperimentResult) -> str:
    records = [{k: _json_safe(v) for k, v in r.as_record().items()} for r in res.sorted().rows]
    return json.dumps(records, indent=1, allow_nan=False) + "\n"


def write_results(res: ExperimentResult, cfg) -> str:
    """Serialise ``res`` in ``cfg.format``; write to ``cfg.output_path`` if set."""
    text = to_json(res) if cfg.format == "json" else to_csv(res)
    if cfg.output_path:
        path = Path(cfg.output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text
