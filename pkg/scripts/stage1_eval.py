#!/usr/bin/env python3
"""Reproduce the stage-1 classifier comparison on a synthetic session corpus.

Generates a labeled corpus, runs min-max scaling + chi-square k-best
selection, then reports held-out metrics and k-fold cross-validation for both
classifiers.

Usage:
    python3 scripts/stage1_eval.py --n-benign 500 --n-malicious 500 --seed 0
"""
import argparse
import time

import numpy as np

from botgate.classifiers import (
    cross_validate, forest_fit, forest_predict, gnb_fit, gnb_predict,
)
from botgate.features import FEATURE_NAMES, MALICIOUS, extract_features
from botgate.preprocess import (
    Dataset, chi2_scores, scaler_fit, scaler_transform, select_k_best,
    shuffle_split,
)
from botgate.sessions import TrafficSession
from botgate.synth import SynthConfig, gen_dataset


def metrics(pred, y):
    tp = int(((pred == 1) & (y == 1)).sum())
    fp = int(((pred == 1) & (y == 0)).sum())
    fn = int(((pred == 0) & (y == 1)).sum())
    acc = float((pred == y).mean())
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return acc, prec, rec, f1


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-benign", type=int, default=500)
    ap.add_argument("--n-malicious", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--session-secs", type=float, default=900.0)
    ap.add_argument("--k-best", type=int, default=6)
    ap.add_argument("--cv-folds", type=int, default=10)
    args = ap.parse_args()

    t0 = time.monotonic()
    rows, labels = [], []
    config = SynthConfig(seed=args.seed, duration_s=args.session_secs)
    for rec in gen_dataset(config, args.n_benign, args.n_malicious):
        sess = TrafficSession(0, 0.0, args.session_secs, rec.trace.packets)
        rows.append(extract_features(sess).values())
        labels.append(1 if rec.label == MALICIOUS else 0)
    print(f"corpus: {len(rows)} sessions in {time.monotonic() - t0:.1f}s")

    data = Dataset(np.array(rows), np.array(labels), list(FEATURE_NAMES))
    train, test = shuffle_split(data, 0.8, seed=args.seed)
    scaler = scaler_fit(train.X)
    Xtr = scaler_transform(scaler, train.X)
    Xte = scaler_transform(scaler, test.X)
    scores = chi2_scores(Xtr, train.y)
    selected = select_k_best(scores, args.k_best)
    print("chi2 scores:")
    for name, s in zip(FEATURE_NAMES, scores):
        mark = " *" if FEATURE_NAMES.index(name) in selected else ""
        print(f"  {name:<16} {s:10.4f}{mark}")

    Xtr, Xte = Xtr[:, selected], Xte[:, selected]
    sel_data = Dataset(Xtr, train.y)

    print(f"\n{'model':<8} {'accuracy':>9} {'precision':>10} {'recall':>8} {'f1':>8} "
          f"{'cv mean':>8} {'cv std':>8}")
    for kind in ("gnb", "forest"):
        if kind == "gnb":
            model = gnb_fit(sel_data)
            pred = gnb_predict(model, Xte)
        else:
            model = forest_fit(sel_data, seed=args.seed)
            pred = forest_predict(model, Xte)
        acc, prec, rec, f1 = metrics(pred, test.y)
        cv_mean, cv_std = cross_validate(sel_data, args.cv_folds, kind, seed=args.seed)
        print(f"{kind:<8} {acc:9.4f} {prec:10.4f} {rec:8.4f} {f1:8.4f} "
              f"{cv_mean:8.4f} {cv_std:8.4f}")


if __name__ == "__main__":
    main()
