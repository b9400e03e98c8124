"""Minimal out-of-process classifier speaking the dataset-directory contract.

Used by the tests to drive the engine's self-training loop through the same
file interface an external network classifier would use: reads the request
manifest, trains the in-package reference model on the named windows, and
writes one probability CSV per requested split.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from dspr.dataset import load_dataset
from dspr.learning import ReferenceClassifier, TrainConfig, write_probability_file


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--dataset", required=True)
    parser.add_argument("--request", required=True)
    args = parser.parse_args()

    request = json.loads(Path(args.request).read_text())
    dataset = load_dataset(request.get("dataset", args.dataset))
    out_dir = Path(request["output_dir"])

    clf = ReferenceClassifier(TrainConfig(seed=request.get("seed", 0)))
    train = request["train"]
    model = clf.train(dataset, np.array(train["indices"], dtype=int),
                      np.array(train["labels"], dtype=int),
                      request.get("seed", 0))
    for split, indices in request["predict"].items():
        probs = clf.predict_proba(model, dataset, np.array(indices, dtype=int))
        write_probability_file(out_dir / f"probs_{split}.csv", indices, probs)


if __name__ == "__main__":
    main()
