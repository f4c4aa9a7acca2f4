"""Fine-tune the byte-level encoder on a labelled payload CSV.

The CSV follows the detector's corpus format: a header naming the text and
label columns, RFC-4180 quoting, labels mapped through positive/negative
tokens.  Training is seed-deterministic: the tokenized example order is a
pure function of the seed.
"""

from __future__ import annotations

import csv
import json
import logging
import random
from pathlib import Path
from typing import Sequence

import torch
from torch import nn

from .encoder import ByteTransformerClassifier, EncoderConfig, encode_batch, save_checkpoint

log = logging.getLogger(__name__)


def load_corpus_csv(path: str | Path, text_column: str = "payload",
                    label_column: str = "label", positive_token: str = "1",
                    negative_token: str = "0") -> tuple[list[str], list[int]]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")
    payloads: list[str] = []
    labels: list[int] = []
    with path.open("r", encoding="utf-8", errors="replace", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (text_column, label_column):
            if col not in header:
                raise ValueError(f"column {col!r} missing from header {header!r}")
        for rownum, row in enumerate(reader, start=1):
            text, raw = row.get(text_column), row.get(label_column)
            if text is None or raw is None:
                raise ValueError(f"row {rownum}: too few fields")
            raw = raw.strip()
            if raw == positive_token:
                labels.append(1)
            elif raw == negative_token:
                labels.append(0)
            else:
                raise ValueError(f"row {rownum}: unmappable label {raw!r}")
            payloads.append(text)
    return payloads, labels


def split_order(n: int, seed: int) -> list[int]:
    """The deterministic example order used for splitting and batching."""
    order = list(range(n))
    random.Random(seed).shuffle(order)
    return order


def _heldout_metrics(model: ByteTransformerClassifier, payloads: Sequence[str],
                     labels: Sequence[int], threshold: float = 0.5) -> dict:
    probs = []
    for start in range(0, len(payloads), 64):
        probs.extend(model.attack_probabilities(payloads[start:start + 64]))
    tp = tn = fp = fn = 0
    for p, y in zip(probs, labels):
        pred = 1 if p >= threshold else 0
        if y == 1:
            tp, fn = tp + (pred == 1), fn + (pred == 0)
        else:
            fp, tn = fp + (pred == 1), tn + (pred == 0)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
    total = tp + tn + fp + fn
    return {"accuracy": (tp + tn) / total if total else 0.0,
            "precision": precision, "recall": recall, "f1": f1,
            "tp": tp, "tn": tn, "fp": fp, "fn": fn}


def finetune(dataset: str | Path, output: str | Path, epochs: int = 1, seed: int = 0,
             batch_size: int = 32, learning_rate: float = 1e-3,
             test_fraction: float = 0.2, config: EncoderConfig | None = None,
             text_column: str = "payload", label_column: str = "label",
             positive_token: str = "1", negative_token: str = "0") -> dict:
    """Train, evaluate on a held-out slice, save the checkpoint, return metrics."""
    payloads, labels = load_corpus_csv(dataset, text_column, label_column,
                                       positive_token, negative_token)
    if len(payloads) < 10:
        raise ValueError("need at least 10 rows to fine-tune")

    order = split_order(len(payloads), seed)
    n_test = max(1, int(round(test_fraction * len(order))))
    test_idx, train_idx = order[:n_test], order[n_test:]

    torch.manual_seed(seed)
    model = ByteTransformerClassifier(config or EncoderConfig())
    optimizer = torch.optim.Adam(model.parameters(), lr=learning_rate)
    loss_fn = nn.CrossEntropyLoss()

    rng = random.Random(seed + 1)
    model.train()
    for epoch in range(epochs):
        epoch_order = train_idx[:]
        rng.shuffle(epoch_order)
        total_loss = 0.0
        for start in range(0, len(epoch_order), batch_size):
            batch_idx = epoch_order[start:start + batch_size]
            ids, pad_mask = encode_batch([payloads[i] for i in batch_idx],
                                         model.config.max_len)
            target = torch.tensor([labels[i] for i in batch_idx], dtype=torch.long)
            optimizer.zero_grad()
            loss = loss_fn(model(ids, pad_mask), target)
            loss.backward()
            optimizer.step()
            total_loss += float(loss)
        log.info("epoch %d/%d loss %.4f", epoch + 1, epochs, total_loss)

    out_dir = save_checkpoint(model, output)
    heldout = _heldout_metrics(model, [payloads[i] for i in test_idx],
                               [labels[i] for i in test_idx])
    result = {"checkpoint": str(out_dir), "epochs": epochs, "seed": seed,
              "train_size": len(train_idx), "test_size": len(test_idx),
              "heldout": heldout}
    (out_dir / "metrics.json").write_text(json.dumps(result, indent=2), encoding="utf-8")
    return result
