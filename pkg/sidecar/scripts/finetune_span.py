#!/usr/bin/env python3
"""Fine-tune an extractive-QA checkpoint for the sidecar.

Input: JSON Lines with {"question", "context", "answer", "byte_start",
"byte_end"} (the shape the engine's factoid training filter emits).
Samples whose gold span does not survive tokenization are skipped, the
data is split 4:1, and training runs 3 epochs by default.

Optional utility: not part of the serving contract.
"""

from __future__ import annotations

import argparse
import json
import random

import torch
from torch.utils.data import DataLoader
from transformers import AutoModelForQuestionAnswering, AutoTokenizer


def byte_to_char(context: str, byte_offset: int) -> int:
    return len(context.encode("utf-8")[:byte_offset].decode("utf-8", errors="ignore"))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--data", required=True, help="JSONL of factoid samples")
    parser.add_argument("--base-model", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--epochs", type=int, default=3)
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--lr", type=float, default=3e-5)
    parser.add_argument("--max-length", type=int, default=512)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--device", default="cuda" if torch.cuda.is_available() else "cpu")
    args = parser.parse_args()

    random.seed(args.seed)
    torch.manual_seed(args.seed)

    tokenizer = AutoTokenizer.from_pretrained(args.base_model, use_fast=True)

    def tokenize(record):
        """Map gold byte offsets to token positions; None if unmappable."""
        context = record["context"]
        char_start = byte_to_char(context, record["byte_start"])
        char_end = byte_to_char(context, record["byte_end"])
        encoded = tokenizer(
            record["question"],
            context,
            truncation="only_second",
            max_length=args.max_length,
            return_offsets_mapping=True,
        )
        start_token = end_token = None
        for i, seq_id in enumerate(encoded.sequence_ids(0)):
            if seq_id != 1:
                continue
            lo, hi = encoded["offset_mapping"][i]
            if lo <= char_start < hi:
                start_token = i
            if lo < char_end <= hi:
                end_token = i
        if start_token is None or end_token is None or end_token < start_token:
            return None
        encoded.pop("offset_mapping")
        encoded["start_positions"] = start_token
        encoded["end_positions"] = end_token
        return dict(encoded)

    samples = []
    skipped = 0
    with open(args.data, "r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            features = tokenize(json.loads(line))
            if features is None:
                skipped += 1
            else:
                samples.append(features)
    print(f"{len(samples)} usable samples ({skipped} skipped: span lost in tokenization)")

    random.shuffle(samples)
    split = len(samples) * 4 // 5  # 4:1 train/test
    train, test = samples[:split], samples[split:]

    model = AutoModelForQuestionAnswering.from_pretrained(args.base_model)
    device = torch.device(args.device)
    model.to(device)

    def collate(batch):
        padded = tokenizer.pad(
            [{k: v for k, v in b.items() if k not in ("start_positions", "end_positions")} for b in batch],
            return_tensors="pt",
        )
        padded["start_positions"] = torch.tensor([b["start_positions"] for b in batch])
        padded["end_positions"] = torch.tensor([b["end_positions"] for b in batch])
        return padded

    loader = DataLoader(train, batch_size=args.batch_size, shuffle=True, collate_fn=collate)
    optimizer = torch.optim.AdamW(model.parameters(), lr=args.lr)

    model.train()
    for epoch in range(args.epochs):
        total = 0.0
        for batch in loader:
            batch = {k: v.to(device) for k, v in batch.items()}
            loss = model(**batch).loss
            loss.backward()
            optimizer.step()
            optimizer.zero_grad()
            total += float(loss)
        print(f"epoch {epoch + 1}: mean loss {total / max(1, len(loader)):.4f}")

    # Exact-match on the held-out fifth.
    model.eval()
    exact = 0
    with torch.no_grad():
        for features in test:
            inputs = {
                k: torch.tensor([v]).to(device)
                for k, v in features.items()
                if k not in ("start_positions", "end_positions")
            }
            output = model(**inputs)
            pred = (int(output.start_logits.argmax()), int(output.end_logits.argmax()))
            exact += pred == (features["start_positions"], features["end_positions"])
    if test:
        print(f"held-out exact span match: {exact / len(test):.4f}")

    model.save_pretrained(args.out)
    tokenizer.save_pretrained(args.out)
    print(f"saved to {args.out}")


if __name__ == "__main__":
    main()
