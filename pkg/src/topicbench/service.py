"""HTTP survey service: serves items to the annotation UI, collects responses.

Storage is an append-only newline-delimited JSON log; every write is flushed
and fsynced before the HTTP acknowledgement, and restart replays the log.
Option order for intrusion items is shuffled server-side per session so the
client never learns the intruder position.
"""

from __future__ import annotations

import datetime as dt
import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel

from .survey import (
    DEFAULT_ITEM_FRACTION,
    AnnotationRecord,
    IntrusionItem,
    Item,
    records_to_csv,
)


@dataclass
class SurveySession:
    session_id: str
    annotator_id: str
    assigned_item_ids: list[str]
    started_at: str
    completed: bool = False
    answered: set[str] = field(default_factory=set)


class SessionCreate(BaseModel):
    annotator_id: str


class ResponseSubmit(BaseModel):
    item_id: str
    response: int
    familiar: bool
    duration: float


class SurveyStore:
    """Append-only log of sessions and responses with record-level atomicity."""

    def __init__(self, items: Sequence[Item], log_path, fraction: float = DEFAULT_ITEM_FRACTION, seed: int = 0):
        self.items = {it.item_id: it for it in items}
        self.item_ids = [it.item_id for it in items]
        self.fraction = fraction
        self.seed = seed
        self.log_path = log_path
        self.sessions: dict[str, SurveySession] = {}
        self.records: list[AnnotationRecord] = []
        self._lock = threading.Lock()
        self._replay()
        self._log = open(log_path, "a", encoding="utf-8")

    def _replay(self) -> None:
        if not os.path.exists(self.log_path):
            return
        with open(self.log_path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                if obj["kind"] == "session":
                    sess = SurveySession(
                        session_id=obj["session_id"],
                        annotator_id=obj["annotator_id"],
                        assigned_item_ids=obj["assigned_item_ids"],
                        started_at=obj["started_at"],
                    )
                    self.sessions[sess.session_id] = sess
                else:
                    rec = AnnotationRecord(**obj["record"])
                    self.records.append(rec)
                    sess = self.sessions.get(obj["session_id"])
                    if sess is not None:
                        sess.answered.add(rec.item_id)
                        sess.completed = sess.answered >= set(sess.assigned_item_ids)

    def _append(self, obj: dict) -> None:
        self._log.write(json.dumps(obj) + "\n")
        self._log.flush()
        os.fsync(self._log.fileno())

    def create_session(self, annotator_id: str) -> SurveySession:
        with self._lock:
            session_id = uuid.uuid4().hex
            rng = np.random.default_rng((self.seed, len(self.sessions)))
            k = max(1, round(self.fraction * len(self.item_ids)))
            idx = sorted(rng.choice(len(self.item_ids), size=k, replace=False))
            sess = SurveySession(
                session_id=session_id,
                annotator_id=annotator_id,
                assigned_item_ids=[self.item_ids[i] for i in idx],
                started_at=dt.datetime.now(dt.timezone.utc).isoformat(),
            )
            self._append(
                {
                    "kind": "session",
                    "session_id": sess.session_id,
                    "annotator_id": sess.annotator_id,
                    "assigned_item_ids": sess.assigned_item_ids,
                    "started_at": sess.started_at,
                }
            )
            self.sessions[session_id] = sess
            return sess

    def _display_order(self, sess: SurveySession, item: Item) -> list[int]:
        """Session-seeded display permutation (intrusion only)."""
        if not isinstance(item, IntrusionItem):
            return list(range(len(item.displayed_words)))
        rng = np.random.default_rng(
            (self.seed, int(sess.session_id[:8], 16), hash(item.item_id) & 0x7FFFFFFF)
        )
        return rng.permutation(len(item.displayed_words)).tolist()

    def next_item(self, session_id: str) -> Optional[dict]:
        with self._lock:
            sess = self.sessions.get(session_id)
            if sess is None:
                raise KeyError(session_id)
            for item_id in sess.assigned_item_ids:
                if item_id not in sess.answered:
                    item = self.items[item_id]
                    order = self._display_order(sess, item)
                    payload = {
                        "item_id": item.item_id,
                        "task": item.task,
                        "words": [item.displayed_words[i] for i in order],
                        "n_remaining": len(
                            [i for i in sess.assigned_item_ids if i not in sess.answered]
                        ),
                        "n_total": len(sess.assigned_item_ids),
                    }
                    return payload
            return None

    def submit(self, session_id: str, sub: ResponseSubmit) -> AnnotationRecord:
        with self._lock:
            sess = self.sessions.get(session_id)
            if sess is None:
                raise KeyError(session_id)
            if sub.item_id not in sess.assigned_item_ids:
                raise KeyError(sub.item_id)
            if sub.item_id in sess.answered:
                raise FileExistsError(sub.item_id)
            item = self.items[sub.item_id]
            response = sub.response
            if item.task == "intrusion":
                order = self._display_order(sess, item)
                if not 0 <= response < len(order):
                    raise ValueError(f"intrusion response {response} out of range")
                # translate display position back to the canonical item order
                response = order[response]
            elif not 1 <= response <= 3:
                raise ValueError(f"rating response {response} out of range")
            rec = AnnotationRecord(
                annotator_id=sess.annotator_id,
                item_id=sub.item_id,
                task=item.task,
                response=response,
                familiar=sub.familiar,
                duration=sub.duration,
                submitted_at=dt.datetime.now(dt.timezone.utc).isoformat(),
            )
            self._append(
                {
                    "kind": "response",
                    "session_id": session_id,
                    "record": {
                        "annotator_id": rec.annotator_id,
                        "item_id": rec.item_id,
                        "task": rec.task,
                        "response": rec.response,
                        "familiar": rec.familiar,
                        "duration": rec.duration,
                        "submitted_at": rec.submitted_at,
                    },
                }
            )
            self.records.append(rec)
            sess.answered.add(sub.item_id)
            sess.completed = sess.answered >= set(sess.assigned_item_ids)
            return rec

    def export_csv(self) -> str:
        with self._lock:
            return records_to_csv(self.records)

    def close(self) -> None:
        self._log.close()


def create_app(store: SurveyStore) -> FastAPI:
    app = FastAPI(title="topicbench survey service")
    app.state.store = store

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionCreate):
        sess = store.create_session(body.annotator_id)
        return {
            "session_id": sess.session_id,
            "annotator_id": sess.annotator_id,
            "item_ids": sess.assigned_item_ids,
            "started_at": sess.started_at,
        }

    @app.get("/sessions/{session_id}/next")
    def next_item(session_id: str):
        try:
            payload = store.next_item(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")
        if payload is None:
            return {"done": True}
        return payload

    @app.post("/sessions/{session_id}/responses", status_code=201)
    def submit(session_id: str, body: ResponseSubmit):
        try:
            rec = store.submit(session_id, body)
        except FileExistsError:
            raise HTTPException(status_code=409, detail=f"item {body.item_id} already answered")
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=f"unknown session or item: {exc}")
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"ok": True, "item_id": rec.item_id}

    @app.get("/export")
    def export():
        return Response(content=store.export_csv(), media_type="text/csv")

    return app
