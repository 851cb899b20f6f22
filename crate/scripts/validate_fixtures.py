"""Validate every ensemble fixture against fixtures/ensemble.schema.json."""

import json
import pathlib
import sys

import jsonschema

ROOT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
ENSEMBLES = ["single_tree.json", "two_trees.json", "five_tree.json"]


def main() -> int:
    schema = json.loads((ROOT / "ensemble.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    bad = 0
    for name in ENSEMBLES:
        errors = list(validator.iter_errors(json.loads((ROOT / name).read_text())))
        for e in errors:
            print(f"{name}: {e.json_path}: {e.message}")
        bad += bool(errors)
        print(f"{name}: {'ok' if not errors else 'INVALID'}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
