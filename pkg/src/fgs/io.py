"""Reading and writing operator files."""
from __future__ import annotations

import json

import jsonschema

from .jacobi import PeriodicJacobi, PeriodicTail, PerturbedJacobi, Truncated

_AB = {
    "type": "object",
    "required": ["a", "b"],
    "additionalProperties": False,
    "properties": {
        "a": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "b": {"type": "array", "items": {"type": "number"}},
    },
}
_AB_NONEMPTY = {
    **_AB,
    "properties": {
        "a": {**_AB["properties"]["a"], "minItems": 1},
        "b": {**_AB["properties"]["b"], "minItems": 1},
    },
}

SCHEMA = {
    "type": "object",
    "oneOf": [
        {
            "required": ["periodic"],
            "not": {"anyOf": [{"required": ["prefix"]}, {"required": ["tail"]}]},
        },
        {"required": ["prefix", "tail"], "not": {"required": ["periodic"]}},
    ],
    "properties": {
        "periodic": _AB_NONEMPTY,
        "prefix": _AB,
        "tail": {
            "oneOf": [
                {"const": "truncated"},
                {
                    "type": "object",
                    "required": ["periodic"],
                    "additionalProperties": False,
                    "properties": {
                        "periodic": _AB_NONEMPTY,
                        "phase": {"type": "integer"},
                    },
                },
            ]
        },
        "reference": _AB_NONEMPTY,
    },
    "additionalProperties": False,
}


class SchemaError(ValueError):
    pass


def validate(doc) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if err is not None:
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise SchemaError(f"{path}: {err.message}")


def operator_from_dict(doc) -> PerturbedJacobi:
    validate(doc)
    try:
        if "periodic" in doc:
            pj = PeriodicJacobi(doc["periodic"]["a"], doc["periodic"]["b"])
            return PerturbedJacobi.periodic(pj)
        pre = doc["prefix"]
        tail_doc = doc["tail"]
        if tail_doc == "truncated":
            tail = Truncated()
        else:
            pj = PeriodicJacobi(tail_doc["periodic"]["a"], tail_doc["periodic"]["b"])
            tail = PeriodicTail(pj, tail_doc.get("phase", 0))
        return PerturbedJacobi(pre["a"], pre["b"], tail)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def reference_from_dict(doc) -> PeriodicJacobi | None:
    ref = doc.get("reference")
    if ref is None:
        return None
    return PeriodicJacobi(ref["a"], ref["b"])


def operator_to_dict(J: PerturbedJacobi) -> dict:
    def ab(a, b):
        return {"a": [float(x) for x in a], "b": [float(x) for x in b]}

    if isinstance(J.tail, PeriodicTail) and not J.prefix_a and J.tail.phase == 0:
        return {"periodic": ab(J.tail.periodic.a, J.tail.periodic.b)}
    doc = {"prefix": ab(J.prefix_a, J.prefix_b)}
    if isinstance(J.tail, PeriodicTail):
        doc["tail"] = {
            "periodic": ab(J.tail.periodic.a, J.tail.periodic.b),
            "phase": J.tail.phase,
        }
    else:
        doc["tail"] = "truncated"
    return doc


def load_operator(path: str) -> tuple[PerturbedJacobi, dict]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    return operator_from_dict(doc), doc
