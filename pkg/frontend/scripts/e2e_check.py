"""Compare the service's CSV export against the directly logged records.

Reads the items and append-only log written by e2e_server.py plus an export
CSV saved by the UI test, scores both record sets, and prints a JSON verdict.
"""

import argparse
import json
import os
import sys
from dataclasses import asdict

from topicbench.survey import (
    AnnotationRecord,
    read_items_jsonl,
    records_from_csv,
    score_responses,
)


def records_from_log(path):
    records = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            obj = json.loads(line)
            if obj.get("kind") == "response":
                records.append(AnnotationRecord(**obj["record"]))
    return records


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--workdir", required=True)
    parser.add_argument("--export", required=True)
    args = parser.parse_args()

    items = read_items_jsonl(os.path.join(args.workdir, "items.jsonl"))
    with open(args.export, encoding="utf-8") as f:
        exported = records_from_csv(f.read())
    injected = records_from_log(os.path.join(args.workdir, "log.jsonl"))

    export_scores = score_responses(exported, items)
    direct_scores = score_responses(injected, items)
    print(json.dumps({
        "equal": export_scores == direct_scores,
        "n_exported": len(exported),
        "n_injected": len(injected),
        "n_topics_scored": len(export_scores.topic_scores),
        "orphans": len(export_scores.orphan_records),
        "sample": [asdict(s) for s in export_scores.topic_scores[:2]],
    }, default=list))
    return 0


if __name__ == "__main__":
    sys.exit(main())
