#!/usr/bin/env python3
"""Freeze outputs of the neurofinder reference scorer on random region sets.

Usage:
    pip install --no-deps neurofinder regional
    python3 tools/make_reference_golden.py tests/data/reference_scorer_golden.json

The C++ metrics tests replay every case and compare against the frozen values.
"""
import json
import random
import sys

import numpy

if not hasattr(numpy, "NaN"):  # neurofinder 1.1.1 predates numpy 2
    numpy.NaN = numpy.nan

import neurofinder  # noqa: E402


def random_region(rng, size):
    r0, c0 = rng.randrange(size), rng.randrange(size)
    radius = rng.randint(0, 3)
    pixels = []
    for r in range(r0 - radius, r0 + radius + 1):
        for c in range(c0 - radius, c0 + radius + 1):
            if 0 <= r < size and 0 <= c < size and rng.random() < 0.8:
                pixels.append([r, c])
    if not pixels:
        pixels.append([r0, c0])
    return {"coordinates": pixels}


def main(out_path, cases=200, seed=20170714):
    rng = random.Random(seed)
    records = []
    for i in range(cases):
        size = rng.choice([10, 14, 20])
        gt = [random_region(rng, size) for _ in range(rng.randint(1, 6))]
        pred = [random_region(rng, size) for _ in range(rng.randint(1, 6))]
        threshold = rng.choice([3.0, 5.0, 8.0])
        a = neurofinder.load(json.dumps(gt))
        b = neurofinder.load(json.dumps(pred))
        recall, precision = neurofinder.centers(a, b, threshold=threshold)
        inclusion, exclusion = neurofinder.shapes(a, b, threshold=threshold)
        combined = 0.0 if recall == 0 and precision == 0 else \
            2 * recall * precision / (recall + precision)
        records.append({
            "case": i,
            "shape": [size, size],
            "threshold": threshold,
            "gt": gt,
            "pred": pred,
            "reference": {
                "recall": float(recall),
                "precision": float(precision),
                "combined": float(combined),
                "inclusion": float(inclusion),
                "exclusion": float(exclusion),
            },
        })
    with open(out_path, "w") as f:
        json.dump({"scorer": "neurofinder 1.1.1 (centers, shapes)",
                   "seed": seed, "cases": records}, f, separators=(",", ":"))


if __name__ == "__main__":
    main(sys.argv[1])
