"""Runs the dyga tool and validates its JSON reports against the schema."""

import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema


def run(tool, *args):
    subprocess.run([tool, *args], check=True, capture_output=True)


def main():
    tool, schema_path = sys.argv[1], pathlib.Path(sys.argv[2])
    schema = json.loads(schema_path.read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    scores = jsonschema.Draft202012Validator({"$defs": schema["$defs"], "$ref": "#/$defs/scores"})

    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        small = ["--seed", "4", "--set", "data.dim=8", "--set", "metrics.gbt_rounds=10"]
        run(tool, "synth", "--out", str(tmp / "data"), *small)
        run(tool, "metrics", "--features", str(tmp / "data/features.dyga"), "--factors",
            str(tmp / "data/factors.csv"), "--out", str(tmp / "full.json"), *small)
        run(tool, "metrics", "--features", str(tmp / "data/features.dyga"), "--factors",
            str(tmp / "data/factors.csv"), "--out", str(tmp / "lean.json"), *small,
            "--set", "metrics.downstream=false", "--set", "metrics.estimator=mi")

        full = json.loads((tmp / "full.json").read_text())
        validator.validate(full)
        assert full["metrics"]["downstream"] is not None
        lean = json.loads((tmp / "lean.json").read_text())
        validator.validate(lean)
        assert lean["metrics"]["downstream"] is None and lean["metrics"]["dci_gbt"] is None

        broken = json.loads(json.dumps(full))
        broken["metrics"]["mig"] = 1.5
        assert not validator.is_valid(broken)
        del broken["config"]
        assert not validator.is_valid(broken)

        run(tool, "pipeline", "--out", str(tmp / "pipe"), "--rounds", "2", *small,
            "--set", "data.train_size=1500", "--set", "data.test_size=500",
            "--set", "metrics.downstream=false")
        rounds = sorted((tmp / "pipe").glob("round_*/metrics.json"))
        assert len(rounds) == 2
        for path in rounds:
            doc = json.loads(path.read_text())
            scores.validate(doc["raw"])
            scores.validate(doc["aligned_metrics"])
    print("reports valid")


if __name__ == "__main__":
    main()
