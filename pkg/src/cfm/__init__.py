"""Compact fuzzy rule-based classification.

Pipeline: per-variable empirical-quantile CDF transform to the unit
interval, uniform triangular fuzzy partitions, itemset-based rule
induction with cost-weighted statistics, and binary-coded evolutionary
rule selection. Everything executes over a deterministic in-process
partitioned engine, so a fixed seed and input produce the same model for
any partition or thread count.
"""
from .config import RunConfig, load_config, parse_config
from .dataset import (Attribute, DataError, Dataset, PartitionedDataset, Schema,
                      load_csv, partition, stratified_kfold, write_csv)
from .engine import Broadcast, Engine, EngineTaskError, exact_sum
from .fuzzy import (NO_COVER, FuzzyRule, RuleBase, class_costs, classify,
                    classify_batch, matching_degree, rule_weight)
from .induction import InductionConfig, TrainingError, induce
from .chc import ChcConfig, hux
from .metrics import ConfusionMatrix, TimingGrid, acc_class, accuracy, gm, scaleup, sizeup, speedup
from .model import (Model, evaluate_model, fit_model, load_model, predict_model,
                    save_model)
from .transform import (FuzzyPartition, QuantileTable, build_partition, cdf,
                        compute_quantiles, inverse_cdf, materialize_original_space,
                        transform_dataset)

__version__ = "0.1.0"

__all__ = [
    "Attribute", "Broadcast", "ChcConfig", "ConfusionMatrix", "DataError",
    "Dataset", "Engine", "EngineTaskError", "FuzzyPartition", "FuzzyRule",
    "InductionConfig", "Model", "NO_COVER", "PartitionedDataset", "QuantileTable",
    "RuleBase", "RunConfig", "Schema", "TimingGrid", "TrainingError",
    "acc_class", "accuracy", "build_partition", "cdf", "class_costs", "classify",
    "classify_batch", "compute_quantiles", "evaluate_model", "exact_sum",
    "fit_model", "gm", "hux", "induce", "inverse_cdf", "load_config", "load_csv",
    "load_model", "matching_degree", "materialize_original_space", "parse_config",
    "partition", "predict_model", "rule_weight", "save_model", "scaleup",
    "sizeup", "speedup", "stratified_kfold", "transform_dataset", "write_csv",
]
