"""Reference values for the classifier tests, computed with scikit-learn.

Usage: python3 ml_oracle.py > ../fixtures/ml_oracle.json
"""
import json

import numpy as np
from sklearn.feature_selection import f_classif
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import precision_recall_fscore_support

rng = np.random.RandomState(7)
X = np.round(rng.normal(size=(40, 3)), 6)
y = (X[:, 0] - 0.5 * X[:, 1] + 0.3 * rng.normal(size=40) > 0).astype(int)

lrc = []
for C in [0.01, 0.1, 1.0, 10.0]:
    m = LogisticRegression(solver="liblinear", C=C, tol=1e-12, max_iter=100000)
    m.fit(X, y)
    lrc.append({"C": C, "coef": m.coef_[0].tolist(), "intercept": float(m.intercept_[0])})

F, _ = f_classif(X, y)

metrics = []
cases = [
    ([1, 1, 1, 1, 1, 1, 1, 1, 1, 1], [1, 0, 1, 0, 1, 1, 0, 0, 1, 0]),
    ([1, 0, 0, 1, 1, 0, 1, 0, 0, 1], [1, 0, 1, 0, 1, 1, 0, 0, 1, 0]),
    ([0, 0, 0, 0, 1, 0, 0, 0, 0, 0], [1, 1, 1, 0, 1, 1, 0, 1, 1, 0]),
]
for pred, truth in cases:
    p, r, f, _ = precision_recall_fscore_support(truth, pred, average="weighted", zero_division=0)
    acc = float(np.mean(np.array(pred) == np.array(truth)))
    metrics.append({"pred": pred, "truth": truth, "accuracy": acc,
                    "precision": float(p), "recall": float(r), "f1": float(f)})

print(json.dumps({"x": X.tolist(), "y": y.tolist(), "lrc": lrc,
                  "f_scores": F.tolist(), "metrics": metrics}, indent=1))
