"""Regenerates the committed fixture models, sensitive specs and query sets.

German-like data is a synthetic surrogate: six standardized features, the
first one a binary sensitive attribute. Run from any directory:

    python3 tests/fixtures/generate.py
"""
import json
import pathlib

import numpy as np

HERE = pathlib.Path(__file__).resolve().parent

MANIFEST = [
    {"name": "german_4_2", "hidden": [4, 2], "seed": 11, "weight_decay": 0.0},
    {"name": "german_2_4", "hidden": [2, 4], "seed": 12, "weight_decay": 0.0},
    {"name": "german_8_2", "hidden": [8, 2], "seed": 13, "weight_decay": 0.0},
]
N_QUERIES = 100
DIGITS = 6


def german_like(rng, n):
    sex = rng.integers(0, 2, size=n).astype(float)
    rest = rng.normal(size=(n, 5))
    score = 1.2 * rest[:, 0] - 0.8 * rest[:, 1] + 0.6 * rest[:, 2] * rest[:, 3] + 0.5 * sex - 0.3
    y = (score + 0.5 * rng.normal(size=n) > 0).astype(int)
    x = np.column_stack([sex, rest])
    mu, sd = x.mean(axis=0), x.std(axis=0)
    return (x - mu) / sd, y, mu, sd


def init(rng, sizes):
    return [(rng.normal(size=(o, i)) * np.sqrt(2.0 / i), np.zeros(o)) for i, o in zip(sizes[:-1], sizes[1:])]


def forward(params, x):
    acts = [x]
    for k, (w, b) in enumerate(params):
        z = acts[-1] @ w.T + b
        acts.append(np.maximum(z, 0.0) if k + 1 < len(params) else z)
    return acts


def train(rng, x, y, hidden, wd, epochs=200, lr=0.05, batch=32):
    params = init(rng, [x.shape[1], *hidden, 2])
    for _ in range(epochs):
        order = rng.permutation(len(x))
        for start in range(0, len(x), batch):
            idx = order[start:start + batch]
            acts = forward(params, x[idx])
            logits = acts[-1]
            p = np.exp(logits - logits.max(axis=1, keepdims=True))
            p /= p.sum(axis=1, keepdims=True)
            grad = p
            grad[np.arange(len(idx)), y[idx]] -= 1.0
            grad /= len(idx)
            for k in reversed(range(len(params))):
                w, b = params[k]
                gw = grad.T @ acts[k] + wd * w
                gb = grad.sum(axis=0)
                grad = (grad @ w) * (acts[k] > 0)
                params[k] = (w - lr * gw, b - lr * gb)
    return params


def rounded(a):
    return [round(float(v), DIGITS) for v in np.ravel(a)]


def model_json(params, n_inputs):
    layers = []
    for w, b in params:
        layers.append({"weights": [rounded(r) for r in w], "bias": rounded(b)})
    return {"n_inputs": n_inputs, "n_classes": 2, "layers": layers}


def dump(path, doc):
    path.write_text(json.dumps(doc, indent=1) + "\n")


def toy():
    rng = np.random.default_rng(7)
    params = [(rng.normal(size=(2, 2)), rng.normal(size=2) * 0.3),
              (rng.normal(size=(2, 2)), rng.normal(size=2) * 0.3),
              (rng.normal(size=(2, 2)), rng.normal(size=2) * 0.3)]
    dump(HERE / "toy_2_2_2.json", model_json(params, 2))
    dump(HERE / "toy_2_2_2.sensitive.json", {"features": [{"index": 1, "domain": [-0.7, 0.7]}]})
    qs = [[round(float(rng.uniform(-1, 1)), DIGITS), float(rng.choice([-0.7, 0.7]))] for _ in range(50)]
    qs[0] = [0.3, -0.7]
    dump(HERE / "toy_2_2_2.queries.json", {"queries": qs})


def german(entry):
    rng = np.random.default_rng(entry["seed"])
    x, y, mu, sd = german_like(rng, 1200)
    train_x, train_y, held = x[:1000], y[:1000], x[1000:]
    params = train(rng, train_x, train_y, entry["hidden"], entry["weight_decay"])
    name = entry["name"]
    dump(HERE / f"{name}.json", model_json(params, x.shape[1]))
    domain = sorted({round(float(v), DIGITS) for v in ((0.0 - mu[0]) / sd[0], (1.0 - mu[0]) / sd[0])})
    dump(HERE / f"{name}.sensitive.json", {"features": [{"index": 0, "domain": domain}]})
    qs = []
    for row in held[:N_QUERIES]:
        q = rounded(row)
        q[0] = domain[0] if abs(q[0] - domain[0]) < abs(q[0] - domain[1]) else domain[1]
        qs.append(q)
    dump(HERE / f"{name}.queries.json", {"queries": qs})
    acc = float((forward(params, held)[-1].argmax(axis=1) == y[1000:]).mean())
    print(f"{name}: held-out accuracy {acc:.3f}")


def main():
    dump(HERE / "manifest.json", {"entries": MANIFEST, "n_queries": N_QUERIES,
                                  "training": {"epochs": 200, "lr": 0.05, "batch": 32}})
    toy()
    for entry in MANIFEST:
        german(entry)


if __name__ == "__main__":
    main()
