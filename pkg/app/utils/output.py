# app/utils/output.py
"""
Report envelopes and their JSON/CSV renderings.

Values are stored in nats under keys ending in `_nats` (`_nats2` for
variances). With log base 2 a `_bits` (`_bits2`) twin is added next to
each; the nats value is never replaced.
"""
import csv
import io
import json
import math
from typing import Any, Optional

from app.config import SCHEMA_VERSION
from app.schema.config_schema import LogBase, OutputFormat, RunConfig

LN2 = math.log(2.0)


def with_bits(value: Any) -> Any:
    if isinstance(value, dict):
        out = {}
        for key, item in value.items():
            out[key] = with_bits(item)
            for suffix, power in (("_nats2", 2), ("_nats", 1)):
                if isinstance(key, str) and key.endswith(suffix):
                    twin = key[: -len(suffix)] + suffix.replace("nats", "bits")
                    out[twin] = _scale(item, LN2 ** power)
                    break
        return out
    if isinstance(value, list):
        return [with_bits(item) for item in value]
    return value


def _scale(value: Any, factor: float) -> Any:
    if isinstance(value, list):
        return [_scale(v, factor) for v in value]
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return value / factor
    return value


def envelope(config: RunConfig, problem_sha256: Optional[str], result: Any) -> dict:
    """Schema version, problem hash and config echo around a command's result."""
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": config.command,
        "problem_sha256": problem_sha256,
        "config": config.model_dump(mode="json"),
        "result": result,
    }
    if config.log_base == LogBase.TWO:
        payload["result"] = with_bits(result)
    return payload


def _flatten(value: Any, prefix: str = "") -> dict[str, Any]:
    if isinstance(value, dict):
        flat: dict[str, Any] = {}
        for key in sorted(value):
            flat.update(_flatten(value[key], f"{prefix}{key}."))
        return flat
    if isinstance(value, list):
        return {prefix[:-1]: ";".join(_cell(v) for v in value)}
    return {prefix[:-1]: _cell(value)}


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def to_csv(payload: dict) -> str:
    """
    One line per result row (`result.rows` when present, the result itself
    otherwise), each carrying the envelope fields as extra columns.
    """
    result = payload["result"]
    shared = _flatten({k: v for k, v in payload.items() if k != "result"})
    rows = [result]
    if isinstance(result, dict) and "rows" in result:
        rows = result["rows"]
        shared.update(_flatten({k: v for k, v in result.items() if k != "rows"}, "result."))
    lines = [{**shared, **_flatten(row, "result.")} for row in rows]
    columns = sorted({key for line in lines for key in line})
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for line in lines:
        writer.writerow(line)
    return buffer.getvalue()


def render(payload: dict, fmt: OutputFormat = OutputFormat.JSON) -> str:
    if fmt == OutputFormat.CSV:
        return to_csv(payload)
    return json.dumps(payload, sort_keys=True, indent=2)
