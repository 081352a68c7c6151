"""Self-contained trained model: schema, quantile table, fuzzy sets, rules,
and the configuration echo. Prediction never needs the training data."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import chc as chc_mod
from .config import RunConfig, config_from_dict
from .dataset import Attribute, Dataset, Schema, partition
from .engine import Engine
from .fuzzy import FuzzyRule, RuleBase, classify_batch, render_rule
from .induction import induce
from .metrics import ConfusionMatrix
from .transform import (FuzzyPartition, QuantileTable, compute_quantiles,
                        materialize_original_space, transform_dataset)

FORMAT_VERSION = 1


@dataclass
class Model:
    schema: Schema
    quantile_table: QuantileTable
    rule_base: RuleBase
    config: RunConfig
    format_version: int = FORMAT_VERSION

    @property
    def fuzzy_partition(self) -> FuzzyPartition:
        return self.rule_base.fuzzy_partition

    def summary(self) -> dict:
        rb = self.rule_base
        n_rules = rb.n_rules
        mean_len = rb.mean_rule_length()
        fs = float(rb.fuzzy_partition.n_sets)
        return {
            "rules": n_rules,
            "mean_rule_length": mean_len,
            "fuzzy_sets_per_variable": fs,
            "trl": n_rules * mean_len * fs,
        }


def fit_model(train: Dataset, config: RunConfig, n_partitions: int = 1,
              engine: Engine | None = None, debug_itemsets=None, progress=None) -> Model:
    """Quantile transform, rule induction, then evolutionary selection unless
    the lightweight mode is on."""
    engine = engine or Engine()
    q = min(train.n, config.quantiles)
    qt = compute_quantiles(train, q)
    transformed = transform_dataset(train, qt)
    with engine.timed("induction"):
        rb = induce(transformed, config.induction_config(), n_partitions, engine,
                    debug_itemsets=debug_itemsets)
    if not config.lightweight:
        pds = partition(transformed, n_partitions)
        with engine.timed("selection"):
            result = chc_mod.run(rb, pds, config.chc_config(), config.cost_sensitive,
                                 engine, progress=progress)
        rb = result.rule_base
    return Model(train.schema, qt, rb, config)


def transform_for(model: Model, data: Dataset) -> Dataset:
    if tuple(a.name for a in data.schema.attributes) != tuple(a.name for a in model.schema.attributes):
        raise ValueError("dataset schema does not match the model schema")
    return transform_dataset(data, model.quantile_table)


def predict_model(model: Model, data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Predicted class indices (NO_COVER marker when nothing fires) and the
    winning association degrees."""
    if data.n == 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    transformed = transform_for(model, data)
    return classify_batch(model.rule_base, transformed.values)


def evaluate_model(model: Model, data: Dataset) -> ConfusionMatrix:
    preds, _ = predict_model(model, data)
    return ConfusionMatrix.from_predictions(data.labels, preds, model.schema.n_classes)


def _schema_to_json(schema: Schema) -> dict:
    attrs = []
    for a in schema.attributes:
        if a.is_numeric:
            attrs.append({"name": a.name, "kind": "numeric"})
        else:
            attrs.append({"name": a.name, "kind": "nominal", "values": list(a.values)})
    return {"attributes": attrs, "class_name": schema.class_name,
            "class_labels": list(schema.class_labels)}


def _schema_from_json(data: dict) -> Schema:
    attrs = []
    for a in data["attributes"]:
        values = tuple(a["values"]) if a["kind"] == "nominal" else None
        attrs.append(Attribute(a["name"], values))
    return Schema(tuple(attrs), data["class_name"], tuple(data["class_labels"]))


def model_to_json(model: Model) -> str:
    qt = model.quantile_table
    payload = {
        "format_version": model.format_version,
        "schema": _schema_to_json(model.schema),
        "quantiles": {
            "q": qt.q,
            "variables": {str(var): [float(x) for x in qt.quantiles[var]]
                          for var in sorted(qt.quantiles)},
        },
        "fuzzy_sets_per_variable": model.fuzzy_partition.n_sets,
        "rules": [
            {
                "antecedents": [[int(v), int(c)] for v, c in r.antecedents],
                "class_index": r.class_index,
                "weight": float(r.weight),
                "support": float(r.support),
                "confidence": float(r.confidence),
            }
            for r in model.rule_base.rules
        ],
        "config": model.config.to_dict(),
    }
    return json.dumps(payload, indent=2) + "\n"


def model_from_json(text: str) -> Model:
    data = json.loads(text)
    version = data["format_version"]
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version}")
    schema = _schema_from_json(data["schema"])
    qt = QuantileTable(
        data["quantiles"]["q"],
        {int(var): np.array(vals, dtype=np.float64)
         for var, vals in data["quantiles"]["variables"].items()},
    )
    fp = FuzzyPartition(data["fuzzy_sets_per_variable"])
    rules = tuple(
        FuzzyRule(tuple((int(v), int(c)) for v, c in r["antecedents"]),
                  r["class_index"], r["weight"], r["support"], r["confidence"])
        for r in data["rules"]
    )
    config = config_from_dict(data["config"])
    return Model(schema, qt, RuleBase(rules, fp, schema), config, version)


def save_model(model: Model, path: str | Path) -> None:
    Path(path).write_text(model_to_json(model))


def load_model(path: str | Path) -> Model:
    return model_from_json(Path(path).read_text())


def rules_text(model: Model) -> str:
    """Rule listing plus the fuzzy-set triangles recovered in original units."""
    lines = [render_rule(r, model.schema) for r in model.rule_base.rules]
    lines.append("")
    lines.append("Fuzzy set vertices in original units (left, center, right):")
    vertices = materialize_original_space(model.fuzzy_partition, model.quantile_table)
    for var in sorted(vertices):
        name = model.schema.attributes[var].name
        for l, (left, center, right) in enumerate(vertices[var]):
            lines.append(f"  {name} L{l + 1}: ({left:.6g}, {center:.6g}, {right:.6g})")
    return "\n".join(lines) + "\n"
