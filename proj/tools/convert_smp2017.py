#!/usr/bin/env python3
"""Convert the SMP2017-ECDT intent release into train/dev/test JSONL.

The release ships JSON files whose top level is either an object mapping
ids to {"query": ..., "label": ...} or a list of such objects. Pass one file
per split:

    convert_smp2017.py --train train.json --dev develop.json --test test.json --out data/
"""

import argparse
import json
import pathlib
import sys

LABELS = {
    "app", "bus", "calc", "chat", "cinemas", "contacts", "cookbook", "datetime", "email", "epg", "flight",
    "health", "lottery", "map", "match", "message", "music", "news", "novel", "poetry", "radio", "riddle",
    "schedule", "stock", "telephone", "train", "translation", "tvchannel", "video", "weather", "website",
}


def records(path):
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    items = data.items() if isinstance(data, dict) else enumerate(data)
    for key, item in items:
        text = (item.get("query") or item.get("text") or "").strip()
        label = item.get("label", "").strip().lower()
        try:
            ident = int(item.get("id", key))
        except (TypeError, ValueError):
            sys.exit(f"{path}: record {key!r} has no integer id")
        if not text:
            sys.exit(f"{path}: record {key!r} has empty text")
        if label not in LABELS:
            sys.exit(f"{path}: record {key!r} has unknown label {label!r}")
        yield {"id": ident, "text": text, "label": label}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--train", required=True)
    ap.add_argument("--dev", required=True)
    ap.add_argument("--test", required=True)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for split in ("train", "dev", "test"):
        rows = list(records(getattr(args, split)))
        with open(out / f"{split}.jsonl", "w", encoding="utf-8") as f:
            for row in rows:
                f.write(json.dumps(row, ensure_ascii=False) + "\n")
        print(f"{split}: {len(rows)} records")


if __name__ == "__main__":
    main()
