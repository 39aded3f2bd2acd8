#!/usr/bin/env python3
"""Writes the mini-study fixture and its expected outputs.

Labels are chosen by hand below. The expected values are computed here with
plain Python (naive counting, direct summation, Decimal rounding), independently
of the C++ implementation. Re-run after editing labels:

    python3 make_oracle.py
"""

import json
import math
import os
from decimal import Decimal, ROUND_HALF_EVEN

HERE = os.path.dirname(os.path.abspath(__file__))

STANCE = ["negative", "neutral", "positive"]
EMOTION = ["anticipation", "joy", "love", "trust", "optimism", "anger", "disgust",
           "fear", "sadness", "pessimism", "surprise"]
MF = ["care", "harm", "fairness", "cheating", "loyalty", "betrayal", "authority",
      "subversion", "purity", "degradation"]
FEATURES = [("stance", STANCE), ("emotion", EMOTION), ("moral_foundation", MF)]
METHODS = ["pretrained", "finetuned"]
EPSILON = 1e-6
ANNOTATORS = {"stance": "gpt-3.5-turbo", "emotion": "emotion-stub", "moral_foundation": "mf-stub"}
STANCE_CODE = {"n": "negative", "0": "neutral", "p": "positive"}

DATASETS = [("covid", ["origins", "masking"]), ("abortion", ["religion"])]

# One entry per instance: (stance code, emotions, moral foundations).
# Emotions and foundations are "+"-joined; "" means no label.
CELLS = {
    ("covid", "origins"): {
        "real": {
            "liberal": [("n", "anger+disgust", "harm"), ("0", "fear", "care"),
                        ("p", "trust", "care+fairness"), ("n", "anger", "harm+cheating"),
                        ("0", "", "")],
            "conservative": [("n", "anger", "betrayal"), ("n", "anger+disgust", "subversion"),
                             ("p", "pessimism", "loyalty"), ("n", "fear", "betrayal+harm")],
        },
        "pretrained": {
            "liberal": [("0", "optimism", "care"), ("0", "joy", "care"),
                        ("p", "trust", "fairness"), ("n", "", "")],
            "conservative": [("0", "anger", "harm"), ("p", "optimism", "care"),
                             ("n", "anger", ""), ("0", "trust", "authority")],
        },
        "finetuned": {
            "liberal": [("n", "anger", "harm"), ("0", "fear", "care"),
                        ("p", "trust", "care"), ("n", "disgust+anger", "cheating")],
            "conservative": [("n", "anger", "betrayal"), ("n", "disgust", "subversion"),
                             ("p", "anger+pessimism", "loyalty"), ("n", "fear", "harm")],
        },
    },
    # Stance tendency: both methods score 2/3, so the table shows a tie.
    ("covid", "masking"): {
        "real": {
            "liberal": [("n", "trust", "care"), ("0", "optimism", "care"),
                        ("p", "trust+optimism", "care+authority"), ("p", "fear", "harm"),
                        ("p", "joy", "")],
            "conservative": [("n", "anger", "subversion"), ("n", "anger", "authority"),
                             ("n", "disgust", "degradation"), ("0", "", "fairness"),
                             ("p", "fear", "care")],
        },
        "pretrained": {
            "liberal": [("0", "trust", "care"), ("p", "optimism", "care"),
                        ("p", "joy", "fairness"), ("p", "trust", "")],
            "conservative": [("n", "anger", "subversion"), ("n", "", "authority"),
                             ("p", "anger", "cheating"), ("p", "fear", "care")],
        },
        "finetuned": {
            "liberal": [("0", "trust+fear", "care"), ("0", "optimism", "care+harm"),
                        ("p", "trust", "authority"), ("p", "fear", "harm")],
            "conservative": [("n", "anger", "subversion"), ("n", "disgust+anger", "degradation"),
                             ("0", "anger", "authority"), ("p", "", "fairness")],
        },
    },
    # Both methods produce the same labels here, so every KLD cell ties.
    ("abortion", "religion"): {
        "real": {
            "liberal": [("n", "anger", "fairness"), ("n", "disgust", "cheating"),
                        ("0", "sadness", "care"), ("p", "love", "care")],
            "conservative": [("p", "love", "purity"), ("p", "trust", "purity+authority"),
                             ("p", "joy", "loyalty"), ("n", "sadness", "degradation"),
                             ("0", "", "")],
        },
        "pretrained": {
            "liberal": [("n", "anger", "fairness"), ("0", "sadness", "care"),
                        ("p", "love", "care"), ("p", "optimism", "")],
            "conservative": [("p", "love", "purity"), ("p", "trust", "authority"),
                             ("0", "joy", "loyalty"), ("n", "sadness", "degradation")],
        },
        "finetuned": {
            "liberal": [("n", "anger", "fairness"), ("0", "sadness", "care"),
                        ("p", "love", "care"), ("p", "optimism", "")],
            "conservative": [("p", "love", "purity"), ("p", "trust", "authority"),
                             ("0", "joy", "loyalty"), ("n", "sadness", "degradation")],
        },
    },
}


def split(labels):
    return [l for l in labels.split("+") if l]


def instance_labels(entry):
    stance, emotions, foundations = entry
    return {"stance": [STANCE_CODE[stance]], "emotion": split(emotions),
            "moral_foundation": split(foundations)}


# ---- fixture files ----------------------------------------------------------

def corpus_rows(dataset, source_key):
    rows = []
    for (ds, topic), by_source in CELLS.items():
        if ds != dataset:
            continue
        for ideology in ("liberal", "conservative"):
            for i, entry in enumerate(by_source[source_key][ideology]):
                iid = f"{dataset}-{source_key}-{topic}-{ideology[:3]}-{i}"
                rows.append(({"id": iid,
                              "text": f"{topic} post {i} from the {ideology} side",
                              "ideology": ideology,
                              "source": "real" if source_key == "real" else "generated",
                              "topic": topic}, entry))
    return rows


def write_jsonl(path, objs):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for o in objs:
            f.write(json.dumps(o, ensure_ascii=False) + "\n")


def write_fixture():
    os.makedirs(os.path.join(HERE, "data"), exist_ok=True)
    annotations = []
    study_datasets = []
    for dataset, topics in DATASETS:
        entry = {"name": dataset, "topics": topics, "generated": {}}
        for source_key in ["real"] + METHODS:
            rows = corpus_rows(dataset, source_key)
            rel = f"data/{dataset}_{source_key}.jsonl"
            write_jsonl(os.path.join(HERE, rel), [r for r, _ in rows])
            if source_key == "real":
                entry["real"] = rel
            else:
                entry["generated"][source_key] = rel
            for row, labels in rows:
                for feature, values in instance_labels(labels).items():
                    annotations.append({"instance_id": row["id"], "feature": feature,
                                        "labels": values, "annotator": ANNOTATORS[feature]})
        study_datasets.append(entry)
    write_jsonl(os.path.join(HERE, "data/annotations.jsonl"), annotations)

    config = {
        "output_dir": "out",
        "metrics": {"epsilon": EPSILON, "tie_tolerance": 0.0, "kld_direction": "gen-vs-real",
                    "log_base": "e"},
        "study": {
            "methods": METHODS,
            "features": [f for f, _ in FEATURES],
            "annotations": ["data/annotations.jsonl"],
            "datasets": study_datasets,
        },
        "report": {"formats": ["markdown", "csv", "json"],
                   "generated_at": "2024-01-01T00:00:00Z"},
    }
    with open(os.path.join(HERE, "config.json"), "w", encoding="utf-8", newline="\n") as f:
        json.dump(config, f, indent=2)
        f.write("\n")


# ---- oracle -----------------------------------------------------------------

def counts(entries, feature, classes):
    c = [0] * len(classes)
    for e in entries:
        labels = instance_labels(e)[feature]
        for i, name in enumerate(classes):
            if name in labels:
                c[i] += 1
    return c


def kld(p, q, eps):
    m = len(p)
    total = 0.0
    for i in range(m):
        ps = (p[i] + eps) / (1.0 + m * eps)
        qs = (q[i] + eps) / (1.0 + m * eps)
        if ps == 0.0:
            continue
        total += ps * math.log(ps / qs)
    return max(total, 0.0)


def sign(x):
    return 0 if x == 0 else (1 if x > 0 else -1)


def oracle_rows():
    rows = []
    for dataset, topics in DATASETS:
        for topic in topics:
            cell = CELLS[(dataset, topic)]
            for feature, classes in FEATURES:
                dist = {}
                for key in ["real"] + METHODS:
                    for ideology in ("liberal", "conservative"):
                        entries = cell[key][ideology]
                        c = counts(entries, feature, classes)
                        n = len(entries)
                        total = sum(c)
                        assert total > 0, (dataset, topic, feature, key, ideology)
                        dist[(key, ideology)] = {"raw": [x / n for x in c],
                                                 "norm": [x / total for x in c], "n": n}
                for method in METHODS:
                    for ideology in ("liberal", "conservative"):
                        real = dist[("real", ideology)]
                        gen = dist[(method, ideology)]
                        rows.append({"dataset": dataset, "method": method, "feature": feature,
                                     "topic": topic, "ideology": ideology, "metric": "kld",
                                     "value": kld(gen["norm"], real["norm"], EPSILON),
                                     "epsilon": EPSILON, "n_real": real["n"], "n_gen": gen["n"]})
                    rl, rc = dist[("real", "liberal")], dist[("real", "conservative")]
                    gl, gc = dist[(method, "liberal")], dist[(method, "conservative")]
                    per_class = {}
                    for i, name in enumerate(classes):
                        real_sign = sign(rl["raw"][i] - rc["raw"][i])
                        gen_sign = sign(gl["raw"][i] - gc["raw"][i])
                        per_class[name] = 1 if real_sign == gen_sign else 0
                    rows.append({"dataset": dataset, "method": method, "feature": feature,
                                 "topic": topic, "metric": "tendency",
                                 "value": sum(per_class.values()) / len(classes),
                                 "per_class": per_class, "epsilon": EPSILON,
                                 "n_real": rl["n"] + rc["n"], "n_gen": gl["n"] + gc["n"]})
    return rows


def two_dp(v):
    return str(Decimal(v).quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN))


def feature_title(feature):
    return feature.replace("_", " ")


def render_markdown(rows):
    out = ""
    for feature, _ in FEATURES:
        for metric in ("kld", "tendency"):
            sel = [r for r in rows if r["feature"] == feature and r["metric"] == metric]
            if metric == "kld":
                title = f"KL divergence, {feature_title(feature)} (lower is better)"
                cols = ["Dataset", "Topic"] + [f"{m} {s}" for m in METHODS for s in ("Lib", "Con")]
            else:
                title = f"Class tendency accuracy, {feature_title(feature)} (higher is better)"
                cols = ["Dataset", "Topic"] + METHODS
            text = f"### {title}\n\n|" + "".join(f" {c} |" for c in cols) + "\n|"
            text += "".join(" --- |" if i < 2 else " ---: |" for i in range(len(cols))) + "\n"
            for dataset, topics in DATASETS:
                for ti, topic in enumerate(topics):
                    line = f"| {dataset if ti == 0 else ''} | {topic} |"
                    if metric == "kld":
                        for m in METHODS:
                            for ideology in ("liberal", "conservative"):
                                vals = {r["method"]: r["value"] for r in sel
                                        if r["dataset"] == dataset and r["topic"] == topic
                                        and r["ideology"] == ideology}
                                cell = two_dp(vals[m])
                                line += f" {'**' + cell + '**' if vals[m] == min(vals.values()) else cell} |"
                    else:
                        vals = {r["method"]: r["value"] for r in sel
                                if r["dataset"] == dataset and r["topic"] == topic}
                        for m in METHODS:
                            cell = two_dp(vals[m])
                            line += f" {'**' + cell + '**' if vals[m] == max(vals.values()) else cell} |"
                    text += line + "\n"
            out += text + "\n"
    return out


def main():
    write_fixture()
    rows = oracle_rows()
    write_jsonl(os.path.join(HERE, "expected_results.jsonl"), rows)
    with open(os.path.join(HERE, "expected_report.md"), "w", encoding="utf-8", newline="\n") as f:
        f.write(render_markdown(rows))

    tendency = {(r["topic"], r["method"]): r["value"] for r in rows
                if r["metric"] == "tendency" and r["feature"] == "stance"}
    assert tendency[("masking", "pretrained")] == tendency[("masking", "finetuned")] == 2 / 3
    kld_religion = [r["value"] for r in rows if r["topic"] == "religion" and r["metric"] == "kld"]
    assert len(kld_religion) == 12


if __name__ == "__main__":
    main()
