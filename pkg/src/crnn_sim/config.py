"""Run configuration: JSON documents validated section-by-section.

Validation is strict: unknown keys are rejected, and errors carry the key
path plus a best-effort line number into the original text so they are
actionable from the command line (exit code 2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional


class ConfigError(ValueError):
    def __init__(self, path: str, message: str, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = f"{path}" + (f" (line {line})" if line else "")
        super().__init__(f"config error at {where}: {message}")


@dataclass
class Field:
    type: type
    required: bool = False
    default: Any = None
    check: Optional[Callable[[Any], bool]] = None
    describe: str = ""


def _line_of(raw_text: str, key: str) -> Optional[int]:
    needle = f'"{key}"'
    for i, line in enumerate(raw_text.splitlines(), 1):
        if needle in line:
            return i
    return None


def validate_section(
    doc: Dict, section: str, fields: Dict[str, Field], raw_text: str = ""
) -> Dict:
    got = doc.get(section, {})
    if not isinstance(got, dict):
        raise ConfigError(section, "expected an object", _line_of(raw_text, section))
    for key in got:
        if key not in fields:
            raise ConfigError(f"{section}.{key}", "unknown key", _line_of(raw_text, key))
    out = {}
    for key, spec in fields.items():
        if key in got:
            val = got[key]
            ok_type = isinstance(val, spec.type) and not (
                spec.type in (int, float) and isinstance(val, bool)
            )
            if spec.type is float and isinstance(val, int) and not isinstance(val, bool):
                val, ok_type = float(val), True
            if not ok_type:
                raise ConfigError(
                    f"{section}.{key}",
                    f"expected {spec.type.__name__}, got {type(val).__name__}",
                    _line_of(raw_text, key),
                )
            if spec.check and not spec.check(val):
                raise ConfigError(
                    f"{section}.{key}", spec.describe or "invalid value",
                    _line_of(raw_text, key),
                )
            out[key] = val
        elif spec.required:
            raise ConfigError(f"{section}.{key}", "missing required key",
                              _line_of(raw_text, section))
        else:
            out[key] = spec.default
    return out


def validate_document(doc: Dict, sections: Dict[str, Dict[str, Field]], raw_text: str = ""):
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected a JSON object")
    for key in doc:
        if key not in sections:
            raise ConfigError(key, "unknown section", _line_of(raw_text, key))
    return {name: validate_section(doc, name, fields, raw_text) for name, fields in sections.items()}


def load_config(path, sections: Dict[str, Dict[str, Field]]):
    with open(path, encoding="utf-8") as fh:
        raw = fh.read()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc.msg}", exc.lineno)
    return validate_document(doc, sections, raw)


# -- shared section vocabularies -------------------------------------------------

_pos_int = lambda v: v > 0
_nonneg_int = lambda v: v >= 0

TASK_FIELDS = {
    "n": Field(int, required=True, check=lambda v: v >= 2, describe="n must be >= 2"),
    "k": Field(int, default=2, check=_nonneg_int, describe="k must be >= 0"),
    "seed": Field(int, default=0),
    "count": Field(int, default=0, check=_nonneg_int, describe="count must be >= 0"),
    "adversarial_triples": Field(int, default=0, check=_nonneg_int,
                                 describe="adversarial_triples must be >= 0"),
    "init_state": Field(str, default="squeezed",
                        check=lambda v: v in ("squeezed", "gkp"),
                        describe="init_state must be 'squeezed' or 'gkp'"),
    "modified": Field(bool, default=False),
}

MODEL_FIELDS = {
    "cell_kind": Field(str, default="crnn",
                       check=lambda v: v in ("crnn", "gaussian", "gru", "ornn"),
                       describe="cell_kind must be one of crnn|gaussian|gru|ornn"),
    "n": Field(int, default=10, check=_pos_int, describe="model dimension must be positive"),
}

TRAIN_FIELDS = {
    "epochs": Field(int, default=80, check=_pos_int, describe="epochs must be positive"),
    "batch_size": Field(int, default=64, check=_pos_int, describe="batch_size must be positive"),
    "split": Field(float, default=0.8, check=lambda v: 0 < v < 1,
                   describe="split must be in (0, 1)"),
    "lr": Field(float, default=1e-3, check=lambda v: v > 0, describe="lr must be positive"),
    "beta1": Field(float, default=0.9),
    "beta2": Field(float, default=0.999),
    "eps": Field(float, default=1e-7),
    "seed": Field(int, default=0),
    "squeeze_scale": Field(float, default=1e3, check=lambda v: v > 0,
                           describe="squeeze_scale must be positive"),
    "ridge": Field(float, default=1e-6, check=lambda v: v >= 0,
                   describe="ridge must be >= 0"),
}

SEPARATION_FIELDS = {
    "n": Field(int, default=6, check=lambda v: v >= 2, describe="n must be >= 2"),
    "triples_train": Field(int, default=120, check=_pos_int,
                           describe="triples_train must be positive"),
    "triples_eval": Field(int, default=200, check=_pos_int,
                          describe="triples_eval must be positive"),
    "dims": Field(list, default=[4, 8, 16, 40],
                  check=lambda v: v and all(isinstance(d, int) and d > 0 for d in v),
                  describe="dims must be a nonempty list of positive ints"),
    "epochs": Field(int, default=40, check=_pos_int, describe="epochs must be positive"),
    "batch_size": Field(int, default=32, check=_pos_int, describe="batch_size must be positive"),
    "lr": Field(float, default=1e-3, check=lambda v: v > 0, describe="lr must be positive"),
    "seed": Field(int, default=0),
    "tol": Field(float, default=0.15, check=lambda v: v > 0, describe="tol must be positive"),
}

IO_FIELDS = {
    "out": Field(str, default="out"),
    "corpus": Field(str, default="bundled"),
    "dataset": Field(str, default=""),
    "checkpoint": Field(str, default=""),
    "max_pairs": Field(int, default=0, check=_nonneg_int, describe="max_pairs must be >= 0"),
}
