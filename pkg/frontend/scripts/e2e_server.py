"""Start a real survey service for the UI end-to-end test.

Generates 80 topics (one intrusion + one rating item each = 160 items) and
serves them with an assignment fraction of 0.25, so every session is assigned
exactly 40 items. Prints READY once listening.
"""

import argparse
import os
import sys
import threading

import uvicorn

from topicbench.cooc import Topic
from topicbench.service import SurveyStore, create_app
from topicbench.survey import make_intrusion_item, make_rating_item, write_items_jsonl


def build_items(n_topics=80):
    topics = [
        Topic(words=[f"topic{k:02d}word{j:02d}" for j in range(60)],
              source_tag=f"t{k}")
        for k in range(n_topics)
    ]
    items = []
    for k, t in enumerate(topics):
        items.append(make_intrusion_item(t, topics, seed=k, item_id=f"int-{k}"))
        items.append(make_rating_item(t, item_id=f"rat-{k}"))
    return items


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--port", type=int, required=True)
    parser.add_argument("--workdir", required=True)
    args = parser.parse_args()

    os.makedirs(args.workdir, exist_ok=True)
    items = build_items()
    write_items_jsonl(items, os.path.join(args.workdir, "items.jsonl"))
    store = SurveyStore(
        items, os.path.join(args.workdir, "log.jsonl"), fraction=0.25, seed=0
    )
    app = create_app(store)

    config = uvicorn.Config(app, host="127.0.0.1", port=args.port, log_level="warning")
    server = uvicorn.Server(config)

    def announce():
        while not server.started:
            pass
        print("READY", flush=True)

    threading.Thread(target=announce, daemon=True).start()
    server.run()


if __name__ == "__main__":
    sys.exit(main())
