"""Run one experiment: cache lookup, execution, CSV and JSON emission."""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from .cache import ResultCache
from .config import ExperimentConfig
from .experiments import REGISTRY


@dataclass
class ResultRecord:
    config_hash: str
    experiment: str
    columns: list
    rows: list
    criteria: list
    constants: dict
    timings: dict = field(default_factory=dict)
    from_cache: bool = False
    csv_path: Optional[str] = None
    json_path: Optional[str] = None

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.criteria)

    def payload(self) -> dict:
        d = asdict(self)
        for k in ("from_cache", "csv_path", "json_path"):
            d.pop(k)
        return d

    @classmethod
    def from_payload(cls, data: dict) -> "ResultRecord":
        return cls(**data, from_cache=True)


def fmt(v) -> str:
    """Stable text form of one cell."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else str(v)
    if isinstance(v, complex):
        return fmt(v.real) if v.imag == 0 else f"{fmt(v.real)}{'+' if v.imag >= 0 else ''}{fmt(v.imag)}j"
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def execute(config: ExperimentConfig, threads: int = 1) -> ResultRecord:
    if config.experiment not in REGISTRY:
        raise ValueError(f"unknown experiment {config.experiment!r}")
    start = time.perf_counter()
    out = REGISTRY[config.experiment](config.params, threads=threads)
    timings = dict(out.timings, total_seconds=time.perf_counter() - start)
    return ResultRecord(config.content_hash(), config.experiment, list(out.columns),
                        [[fmt(c) for c in row] for row in out.rows],
                        [c.as_dict() for c in out.criteria], _jsonable(out.constants),
                        _jsonable(timings))


def cache_lookup(config_hash: str, cache_dir: Optional[str | Path] = None
                 ) -> Optional[ResultRecord]:
    data = ResultCache(cache_dir).get(config_hash)
    if data is None:
        return None
    try:
        return ResultRecord.from_payload(data)
    except TypeError:
        return None


def write_outputs(record: ResultRecord, config: ExperimentConfig, out: str | Path
                  ) -> ResultRecord:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{record.experiment}.csv"
    json_path = out / f"{record.experiment}.json"
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    with open(csv_path, "w", newline="") as fh:
        fh.write(f"# generated {stamp}\n")
        fh.write("# config " + json.dumps(_jsonable(config.echo()), sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(record.columns)
        w.writerows(record.rows)
    summary = {"experiment": record.experiment, "config_hash": record.config_hash,
               "passed": record.passed, "criteria": record.criteria,
               "constants": record.constants, "timings": record.timings,
               "from_cache": record.from_cache, "csv": csv_path.name}
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    record.csv_path, record.json_path = str(csv_path), str(json_path)
    return record


def run(config: ExperimentConfig, out: Optional[str | Path] = None, use_cache: bool = True,
        threads: int = 1, cache_dir: Optional[str | Path] = None) -> ResultRecord:
    """Run ``config`` (or fetch it from the cache) and write CSV + JSON into ``out``."""
    use_cache = use_cache and config.cache
    record = cache_lookup(config.content_hash(), cache_dir) if use_cache else None
    if record is None:
        record = execute(config, threads)
        if use_cache:
            ResultCache(cache_dir).put(record.config_hash, record.payload())
    out = out or config.output_dir
    if out is not None:
        write_outputs(record, config, out)
    return record
