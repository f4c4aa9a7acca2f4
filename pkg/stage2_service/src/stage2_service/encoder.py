"""Byte-level transformer encoder for payload classification.

Small enough to fine-tune on a desktop CPU in seconds.  Payloads are encoded
as UTF-8 bytes (vocabulary 256 + PAD + CLS), run through a few self-attention
layers, and classified from the CLS position.  Checkpoints are a directory
holding config.json plus weights.pt.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import torch
from torch import nn

PAD_ID = 256
CLS_ID = 257
VOCAB_SIZE = 258

CONFIG_FILE = "config.json"
WEIGHTS_FILE = "weights.pt"


@dataclass(frozen=True)
class EncoderConfig:
    max_len: int = 128
    dim: int = 64
    layers: int = 2
    heads: int = 4
    ff_dim: int = 128
    dropout: float = 0.1
    model_id: str = "byte-encoder-v1"


def encode_payload(payload: str, max_len: int) -> list[int]:
    """CLS + UTF-8 bytes, truncated/padded to max_len."""
    ids = [CLS_ID] + list(payload.encode("utf-8"))[: max_len - 1]
    ids += [PAD_ID] * (max_len - len(ids))
    return ids


def encode_batch(payloads: Sequence[str], max_len: int) -> tuple[torch.Tensor, torch.Tensor]:
    ids = torch.tensor([encode_payload(p, max_len) for p in payloads], dtype=torch.long)
    pad_mask = ids == PAD_ID
    return ids, pad_mask


class ByteTransformerClassifier(nn.Module):
    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.config = config
        self.embed = nn.Embedding(VOCAB_SIZE, config.dim, padding_idx=PAD_ID)
        self.pos = nn.Embedding(config.max_len, config.dim)
        layer = nn.TransformerEncoderLayer(
            d_model=config.dim, nhead=config.heads, dim_feedforward=config.ff_dim,
            dropout=config.dropout, batch_first=True)
        self.encoder = nn.TransformerEncoder(layer, num_layers=config.layers)
        self.head = nn.Linear(config.dim, 2)

    def forward(self, ids: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(ids.shape[1], device=ids.device).unsqueeze(0)
        h = self.embed(ids) + self.pos(positions)
        h = self.encoder(h, src_key_padding_mask=pad_mask)
        return self.head(h[:, 0, :])  # logits from the CLS position

    @torch.no_grad()
    def attack_probabilities(self, payloads: Sequence[str]) -> list[float]:
        self.eval()
        ids, pad_mask = encode_batch(payloads, self.config.max_len)
        logits = self(ids, pad_mask)
        return torch.softmax(logits, dim=1)[:, 1].tolist()


def save_checkpoint(model: ByteTransformerClassifier, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_FILE).write_text(json.dumps(asdict(model.config), indent=2),
                                   encoding="utf-8")
    torch.save(model.state_dict(), out / WEIGHTS_FILE)
    return out


def load_checkpoint(path: str | Path) -> ByteTransformerClassifier:
    path = Path(path)
    config_file = path / CONFIG_FILE
    weights_file = path / WEIGHTS_FILE
    if not config_file.is_file() or not weights_file.is_file():
        raise FileNotFoundError(f"{path} is not a checkpoint directory "
                                f"(needs {CONFIG_FILE} and {WEIGHTS_FILE})")
    config = EncoderConfig(**json.loads(config_file.read_text(encoding="utf-8")))
    model = ByteTransformerClassifier(config)
    model.load_state_dict(torch.load(weights_file, map_location="cpu"))
    model.eval()
    return model


class CheckpointScorer:
    """Scores payloads with a fine-tuned checkpoint; probabilities in [0,1]."""

    def __init__(self, path: str | Path, max_batch: int = 256):
        self.model = load_checkpoint(path)
        self.model_id = self.model.config.model_id
        self.max_batch = max_batch

    def score_batch(self, payloads: Sequence[str]) -> list[float]:
        out: list[float] = []
        for start in range(0, len(payloads), self.max_batch):
            out.extend(self.model.attack_probabilities(payloads[start:start + self.max_batch]))
        return out
