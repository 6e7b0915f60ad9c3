#!/usr/bin/env python3
"""Per-call timing of the three distances on a fixed 2-state, 2-d pair."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from awhmm import Gaussian, GmmHmm, TransitionMatrix
from awhmm.bench import ExperimentConfig, time_methods


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--iaw-n", type=int, default=500)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    eye = np.eye(2)
    trans = TransitionMatrix([[0.8, 0.2], [0.2, 0.8]])
    h1 = GmmHmm(trans, (Gaussian([2, 2], eye), Gaussian([5, 5], eye)))
    h2 = GmmHmm(trans, (Gaussian([2.4, 2.4], eye), Gaussian([5.4, 5.4], eye)))
    cfg = ExperimentConfig(family="mu-perturb", alpha=0.5,
                           iaw_n=args.iaw_n, master_seed=args.seed)
    timings = time_methods(h1, h2, cfg, repeats=args.repeats)
    for method, ms in timings.items():
        print(f"{method}: {ms:.2f} ms per call (median of {args.repeats})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
