# Copyright 2026 The OrdCon Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Ordinal contrastive representation learning on synthetic data."""

import json

from . import _impl
from ._impl import (
    CompatError,
    ConfigError,
    Checkpoint,
    Dataset,
    DomainError,
    Error,
    IoError,
    NumericError,
    ShapeError,
    age_probe_accuracy,
    gradcheck,
    grl_lambda,
    load_checkpoint,
    load_csv,
    loss,
    loss_config,
    mae,
    order_consistency,
    pca_project,
    rank1_accuracy,
    spearman,
    split_by_identity,
)

__all__ = [
    "CompatError", "ConfigError", "Checkpoint", "Dataset", "DomainError", "Error", "IoError",
    "NumericError", "ShapeError", "age_probe_accuracy", "config", "evaluate", "finetune_age",
    "generate", "gradcheck", "grl_lambda", "load_checkpoint", "load_csv", "loss", "loss_config",
    "mae", "order_consistency", "pca_project", "pretrain_age", "rank1_accuracy", "spearman",
    "split", "split_by_identity", "train_aifr", "train_l1_baseline",
]


def config(mode=None, file=None, **overrides):
    """Resolved run configuration as a dict.

    Overrides use double underscores for dots: ``train__lr=0.01``.
    """
    pairs = [(k.replace("__", "."), json.dumps(v) if not isinstance(v, str) else v)
             for k, v in overrides.items()]
    return json.loads(_impl.resolve_config(json.dumps(file or {}), pairs, mode))


def generate(cfg):
    """Dataset described by the ``data`` section of a resolved config."""
    return _impl.generate(json.dumps(cfg["data"]))


def split(dataset, cfg):
    """Held-out split by identity, seeded the same way as the CLI."""
    seed = _impl.split_seed(int(cfg["train"]["seed"]))
    return _impl.split_by_identity(dataset, cfg["train"]["holdout_fraction"], seed)


def pretrain_age(train, cfg):
    return _impl.pretrain_age(train, json.dumps(cfg))


def finetune_age(checkpoint, train, cfg):
    return _impl.finetune_age(checkpoint, train, json.dumps(cfg))


def train_l1_baseline(train, cfg):
    return _impl.train_l1_baseline(train, json.dumps(cfg))


def train_aifr(train, cfg):
    return _impl.train_aifr(train, json.dumps(cfg))


def evaluate(checkpoint, test, cfg):
    """Metrics dict: mae, order_consistency, rank1, age_probe_acc, n_eval."""
    return json.loads(_impl.evaluate(checkpoint, test, json.dumps(cfg)))
