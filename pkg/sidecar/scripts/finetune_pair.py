#!/usr/bin/env python3
"""Fine-tune a text-pair classifier checkpoint for the sidecar.

Input: JSON Lines with {"text_a", "text_b", "label"} where label is 0/1
(or "no"/"yes"). The data is split 4:1 into train/test; training runs 3
epochs by default. The resulting directory can be passed straight to
`statuteqa-sidecar --pair-model`.

Optional utility: not part of the serving contract.
"""

from __future__ import annotations

import argparse
import json
import random

import torch
from torch.utils.data import DataLoader
from transformers import AutoModelForSequenceClassification, AutoTokenizer


def read_samples(path):
    samples = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            r = json.loads(line)
            label = r["label"]
            if isinstance(label, str):
                label = 1 if label.lower() in ("yes", "1", "true") else 0
            samples.append((r["text_a"], r["text_b"], int(label)))
    return samples


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--data", required=True, help="JSONL of labeled pairs")
    parser.add_argument("--base-model", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--epochs", type=int, default=3)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--lr", type=float, default=2e-5)
    parser.add_argument("--max-length", type=int, default=512)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--device", default="cuda" if torch.cuda.is_available() else "cpu")
    args = parser.parse_args()

    random.seed(args.seed)
    torch.manual_seed(args.seed)

    samples = read_samples(args.data)
    random.shuffle(samples)
    split = len(samples) * 4 // 5  # 4:1 train/test
    train, test = samples[:split], samples[split:]
    print(f"{len(train)} train / {len(test)} test samples")

    tokenizer = AutoTokenizer.from_pretrained(args.base_model, use_fast=True)
    model = AutoModelForSequenceClassification.from_pretrained(args.base_model, num_labels=2)
    device = torch.device(args.device)
    model.to(device)

    def collate(batch):
        encoded = tokenizer(
            [a for a, _, _ in batch],
            [b for _, b, _ in batch],
            truncation="only_second",
            max_length=args.max_length,
            padding=True,
            return_tensors="pt",
        )
        encoded["labels"] = torch.tensor([y for _, _, y in batch])
        return encoded

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

    model.eval()
    correct = 0
    with torch.no_grad():
        for a, b, y in test:
            encoded = tokenizer(
                a, b, truncation="only_second", max_length=args.max_length, return_tensors="pt"
            ).to(device)
            pred = int(model(**encoded).logits.argmax(dim=-1))
            correct += pred == y
    if test:
        print(f"held-out accuracy: {correct / len(test):.4f}")

    model.save_pretrained(args.out)
    tokenizer.save_pretrained(args.out)
    print(f"saved to {args.out}")


if __name__ == "__main__":
    main()
