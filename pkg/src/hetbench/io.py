"""On-disk formats: dataset CSV, sweep tables, run-config JSON, atomic writes."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .autotune import SearchSpace
from .classifiers import ALGORITHMS, AlgorithmConfig, config_from_dict, default_config
from .datagen import FEATURE_NAMES, Dataset, FeatureVector, GenConfig, Label
from .evaluation import SplitConfig

HEADER = ("Index",) + FEATURE_NAMES + ("Label",)
_COLUMN_ALIASES = {"": "Index", "index": "Index", "lable": "Label", "label": "Label"}
_COLUMN_ALIASES.update({name.lower(): name for name in FEATURE_NAMES})


class CsvFormatError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def fmt_number(x: float) -> str:
    """Integers print bare; everything else with 6 significant digits."""
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return f"{x:.6g}"


def dataset_to_csv(data: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for i in range(len(data)):
        writer.writerow(
            [str(int(data.index[i]))]
            + [fmt_number(v) for v in data.features[i]]
            + [Label(int(data.labels[i])).spelling]
        )
    return buf.getvalue()


@dataclass
class ParsedCsv:
    index: np.ndarray
    features: np.ndarray
    labels: Optional[np.ndarray]
    warnings: list[str] = field(default_factory=list)

    def to_dataset(self) -> Dataset:
        if self.labels is None:
            raise CsvFormatError("input has no Label column")
        return Dataset(self.features, self.labels, self.index)


def parse_csv(text: str) -> ParsedCsv:
    """Parse a dataset CSV. The Label column is optional; misspelled
    header/label variants seen in hand-made files are accepted."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvFormatError("empty file", 1) from None
    columns = []
    for raw in header:
        name = _COLUMN_ALIASES.get(raw.strip().lower())
        if name is None:
            raise CsvFormatError(f"unknown column {raw!r}", 1)
        columns.append(name)
    missing = [n for n in FEATURE_NAMES if n not in columns]
    if missing:
        raise CsvFormatError(f"missing column(s) {', '.join(missing)}", 1)
    pos = {name: columns.index(name) for name in set(columns)}
    has_label = "Label" in pos

    index, features, labels, warnings = [], [], [], []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(columns):
            raise CsvFormatError(f"expected {len(columns)} fields, got {len(row)}", line_no)
        try:
            values = [float(row[pos[name]]) for name in FEATURE_NAMES]
        except ValueError as exc:
            raise CsvFormatError(f"non-numeric feature value ({exc})", line_no) from None
        if any(np.isnan(v) or np.isinf(v) for v in values):
            raise CsvFormatError("non-finite feature value", line_no)
        if not FeatureVector(*values).in_range():
            warnings.append(f"line {line_no}: feature value outside the documented range {values}")
        if "Index" in pos:
            try:
                index.append(int(float(row[pos["Index"]])))
            except ValueError:
                raise CsvFormatError(f"bad index {row[pos['Index']]!r}", line_no) from None
        else:
            index.append(len(features))
        if has_label:
            try:
                labels.append(int(Label.parse(row[pos["Label"]])))
            except ValueError as exc:
                raise CsvFormatError(str(exc), line_no) from None
        features.append(values)
    if not features:
        raise CsvFormatError("no data rows")
    return ParsedCsv(
        np.asarray(index, dtype=np.int64),
        np.asarray(features, dtype=np.float64),
        np.asarray(labels, dtype=np.int64) if has_label else None,
        warnings,
    )


def read_text(path: str) -> str:
    with open(path, encoding="utf-8", newline="") as fh:
        return fh.read()


def atomic_write(path: str, text: str) -> None:
    """Write ``text`` (UTF-8, as given) via a temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def sweep_to_csv(rows, key_name: str, with_train: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([key_name, "algorithm"] + (["train_score"] if with_train else []) + ["test_score"])
    for r in rows:
        cells = [fmt_number(r.key), r.algorithm]
        scores = ([r.train_score] if with_train else []) + [r.test_score]
        cells += ["" if s is None else f"{s:.6g}" for s in scores]
        writer.writerow(cells)
    return buf.getvalue()


def sweep_to_json(rows, key_name: str, with_train: bool = True) -> str:
    out = []
    for r in rows:
        d = {key_name: r.key, "algorithm": r.algorithm, "test_score": r.test_score}
        if with_train:
            d["train_score"] = r.train_score
        out.append(d)
    return dump_json(out)


# ---------------------------------------------------------------------------
# Run-config file
# ---------------------------------------------------------------------------

_RUN_KEYS = ("gen", "split", "algorithms", "search_space", "outputs")


@dataclass
class RunConfig:
    gen: Optional[GenConfig] = None
    split: Optional[SplitConfig] = None
    algorithms: Optional[list[AlgorithmConfig]] = None
    search_space: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)


def parse_run_config(doc: dict) -> RunConfig:
    """Validate a run-config document; unknown keys raise ``ValueError``."""
    if not isinstance(doc, dict):
        raise ValueError("run config must be a JSON object")
    for key in doc:
        if key not in _RUN_KEYS:
            raise ValueError(f"unknown run-config key {key!r}")
    cfg = RunConfig()
    if "gen" in doc:
        cfg.gen = GenConfig.from_dict(doc["gen"])
    if "split" in doc:
        cfg.split = SplitConfig.from_dict(doc["split"])
    if "algorithms" in doc:
        cfg.algorithms = [
            default_config(a) if isinstance(a, str) else config_from_dict(a) for a in doc["algorithms"]
        ]
    for algorithm, params in doc.get("search_space", {}).items():
        cfg.search_space[algorithm] = SearchSpace(algorithm, dict(params))
    outputs = doc.get("outputs", {})
    if not isinstance(outputs, dict):
        raise ValueError("outputs must be an object")
    cfg.outputs = dict(outputs)
    return cfg


def load_run_config(path: str) -> RunConfig:
    return parse_run_config(json.loads(read_text(path)))


def algorithm_list(text: str) -> list[str]:
    if text.strip().lower() == "all":
        return list(ALGORITHMS)
    names = [s.strip().lower() for s in text.split(",") if s.strip()]
    for name in names:
        if name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {name!r}; expected one of {', '.join(ALGORITHMS)} or 'all'")
    if not names:
        raise ValueError("no algorithms selected")
    return names


def parse_float_list(text: str) -> list[float]:
    return [float(s) for s in text.split(",") if s.strip()]


def parse_int_list(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip()]


def configs_for(names: Sequence[str]) -> list[AlgorithmConfig]:
    return [default_config(n) for n in names]
