"""Human-evaluation session engine.

Raters are served batches of exactly 10 cards: 9 real items they have not
rated before plus 1 attention check, shuffled.  A submission is accepted
only when every card is answered and the attention check matches its known
answer; a rejected batch records nothing and returns its items to the pool.
Every real item collects 5 accepted yes/no verdicts from distinct raters;
an item is correct when at least 3 of its 5 verdicts are yes, and the HE
score is the percentage of correct items.

State is event-sourced: commands validate, emit an event, and apply it.
Replaying the event list rebuilds the identical state, so a single
append-only log file makes sessions crash-safe and auditable.
"""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

BATCH_SIZE = 10
REAL_PER_BATCH = 9
VERDICTS_PER_ITEM = 5


class RatingError(ValueError):
    pass


@dataclass(frozen=True)
class AbstractiveDisplay:
    text: str


@dataclass(frozen=True)
class ExtractiveDisplay:
    """One extracted span shown highlighted inside its surrounding context."""

    context: str
    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start < self.end <= len(self.context):
            raise RatingError(
                f"display span [{self.start}, {self.end}) outside context"
            )


@dataclass(frozen=True)
class RatingItem:
    id: str
    input_text: str
    label: str
    explanation: AbstractiveDisplay | ExtractiveDisplay
    expected: bool | None = None  # attention checks only

    @property
    def is_attention_check(self) -> bool:
        return self.expected is not None


def item_from_record(record: dict) -> RatingItem:
    exp = record["explanation"]
    if exp.get("kind") == "extractive":
        display: AbstractiveDisplay | ExtractiveDisplay = ExtractiveDisplay(
            exp["context"], exp["start"], exp["end"]
        )
    else:
        display = AbstractiveDisplay(exp["text"])
    return RatingItem(
        id=record["id"],
        input_text=record["input"],
        label=record["label"],
        explanation=display,
        expected=record.get("expected"),
    )


def item_to_record(item: RatingItem) -> dict:
    if isinstance(item.explanation, ExtractiveDisplay):
        exp = {
            "kind": "extractive",
            "context": item.explanation.context,
            "start": item.explanation.start,
            "end": item.explanation.end,
        }
    else:
        exp = {"kind": "abstractive", "text": item.explanation.text}
    record = {
        "id": item.id,
        "input": item.input_text,
        "label": item.label,
        "explanation": exp,
    }
    if item.expected is not None:
        record["expected"] = item.expected
    return record


@dataclass
class Batch:
    id: str
    rater: str
    card_ids: tuple[str, ...]  # 10 item ids in served order, check included
    check_id: str
    status: str = "open"  # open | accepted | rejected


@dataclass
class SessionState:
    session_id: str
    seed: int
    items: dict[str, RatingItem] = field(default_factory=dict)
    checks: dict[str, RatingItem] = field(default_factory=dict)
    verdicts: dict[str, list[bool]] = field(default_factory=dict)
    seen_by: dict[str, set[str]] = field(default_factory=dict)  # item -> raters
    checks_used: dict[str, set[str]] = field(default_factory=dict)  # rater -> checks
    batches: dict[str, Batch] = field(default_factory=dict)
    batch_counter: int = 0
    events: list[dict] = field(default_factory=list)

    # -- queries --

    def accepted_count(self, item_id: str) -> int:
        return len(self.verdicts[item_id])

    def inflight_count(self, item_id: str) -> int:
        return sum(
            1
            for b in self.batches.values()
            if b.status == "open" and item_id in b.card_ids and item_id in self.items
        )

    def is_final(self, item_id: str) -> bool:
        return self.accepted_count(item_id) == VERDICTS_PER_ITEM

    def complete(self) -> bool:
        return all(self.is_final(i) for i in self.items)

    def open_batch_items(self, rater: str) -> set[str]:
        held = set()
        for b in self.batches.values():
            if b.status == "open" and b.rater == rater:
                held.update(b.card_ids)
        return held

    # -- commands --

    @classmethod
    def create(
        cls,
        session_id: str,
        items: Iterable[RatingItem],
        checks: Iterable[RatingItem],
        seed: int,
    ) -> "SessionState":
        items = list(items)
        checks = list(checks)
        if not items:
            raise RatingError("a session needs at least one real item")
        for item in items:
            if item.is_attention_check:
                raise RatingError(f"real item {item.id!r} must not carry an expected answer")
        for check in checks:
            if not check.is_attention_check:
                raise RatingError(f"attention check {check.id!r} needs an expected answer")
        ids = [i.id for i in items] + [c.id for c in checks]
        if len(set(ids)) != len(ids):
            raise RatingError("item and check ids must be unique")
        needed = -(-len(items) // REAL_PER_BATCH)  # one check per batch of a full pass
        if len(checks) < needed:
            raise RatingError(
                f"{len(items)} items need at least {needed} attention checks, got {len(checks)}"
            )
        event = {
            "type": "created",
            "session_id": session_id,
            "seed": seed,
            "items": [item_to_record(i) for i in items],
            "checks": [item_to_record(c) for c in checks],
        }
        state = cls(session_id=session_id, seed=seed)
        state._apply(event)
        return state

    def next_batch(self, rater: str) -> Batch | None:
        """Issue a 10-card batch for this rater; None when drained.

        Real-item slots are filled most-needed-first with items the rater has
        not seen; once fewer than 9 items still owe verdicts, already-served
        items pad the batch and their extra answers are dropped at accept
        time so no item exceeds 5 verdicts.
        """
        if not rater:
            raise RatingError("rater id must be non-empty")
        held = self.open_batch_items(rater)
        eligible = [
            i
            for i in self.items
            if rater not in self.seen_by[i] and i not in held
        ]
        needy = [
            i
            for i in eligible
            if self.accepted_count(i) + self.inflight_count(i) < VERDICTS_PER_ITEM
        ]
        if not needy:
            return None
        order = lambda i: (self.accepted_count(i) + self.inflight_count(i), i)
        chosen = sorted(needy, key=order)[:REAL_PER_BATCH]
        if len(chosen) < REAL_PER_BATCH:
            filler = sorted((i for i in eligible if i not in chosen), key=order)
            chosen.extend(filler[: REAL_PER_BATCH - len(chosen)])
        if len(chosen) < REAL_PER_BATCH:
            return None

        unused = sorted(set(self.checks) - self.checks_used.get(rater, set()))
        if not unused:
            return None
        rng = random.Random(f"{self.seed}:batch:{self.batch_counter}")
        check_id = rng.choice(unused)
        cards = chosen + [check_id]
        rng.shuffle(cards)
        event = {
            "type": "issued",
            "batch_id": f"b{self.batch_counter:05d}",
            "rater": rater,
            "card_ids": cards,
            "check_id": check_id,
        }
        self._apply(event)
        return self.batches[event["batch_id"]]

    def submit_batch(
        self, batch_id: str, rater: str, answers: Sequence[bool | None]
    ) -> str:
        """Record a submission; returns "accepted" or "rejected"."""
        if batch_id not in self.batches:
            raise RatingError(f"unknown batch {batch_id!r}")
        batch = self.batches[batch_id]
        if batch.status != "open":
            raise RatingError(f"batch {batch_id!r} already {batch.status}")
        if batch.rater != rater:
            raise RatingError(f"batch {batch_id!r} belongs to another rater")
        if len(answers) != BATCH_SIZE:
            raise RatingError(f"need {BATCH_SIZE} answers, got {len(answers)}")
        check_pos = batch.card_ids.index(batch.check_id)
        complete = all(a is not None for a in answers)
        passed = complete and answers[check_pos] == self.checks[batch.check_id].expected
        event = {
            "type": "submitted",
            "batch_id": batch_id,
            "answers": list(answers),
            "outcome": "accepted" if passed else "rejected",
        }
        self._apply(event)
        return event["outcome"]

    def aggregate(self) -> tuple[list[dict], float]:
        """Per-item majority verdicts and the HE percentage; all items must be final."""
        pending = sorted(i for i in self.items if not self.is_final(i))
        if pending:
            raise RatingError(f"items not finalized yet: {', '.join(pending)}")
        rows = []
        correct = 0
        for item_id in self.items:
            votes = self.verdicts[item_id]
            is_correct = sum(votes) >= 3
            correct += is_correct
            rows.append({"id": item_id, "verdicts": list(votes), "correct": is_correct})
        he = 100.0 * correct / len(self.items)
        return rows, he

    # -- event application --

    def _apply(self, event: dict) -> None:
        kind = event["type"]
        if kind == "created":
            for record in event["items"]:
                item = item_from_record(record)
                self.items[item.id] = item
                self.verdicts[item.id] = []
                self.seen_by[item.id] = set()
            for record in event["checks"]:
                self.checks[record["id"]] = item_from_record(record)
        elif kind == "issued":
            batch = Batch(
                id=event["batch_id"],
                rater=event["rater"],
                card_ids=tuple(event["card_ids"]),
                check_id=event["check_id"],
            )
            self.batches[batch.id] = batch
            self.checks_used.setdefault(batch.rater, set()).add(batch.check_id)
            self.batch_counter += 1
        elif kind == "submitted":
            batch = self.batches[event["batch_id"]]
            batch.status = event["outcome"]
            if event["outcome"] == "accepted":
                for card_id, answer in zip(batch.card_ids, event["answers"]):
                    if card_id not in self.items:
                        continue
                    self.seen_by[card_id].add(batch.rater)
                    if len(self.verdicts[card_id]) < VERDICTS_PER_ITEM:
                        self.verdicts[card_id].append(bool(answer))
            else:
                # Rejected: state stays as if the batch were never issued,
                # apart from the retained check usage and the ledger entry.
                pass
        else:
            raise RatingError(f"unknown event type {event['type']!r}")
        self.events.append(event)

    @classmethod
    def replay(cls, events: Iterable[dict]) -> "SessionState":
        events = list(events)
        if not events or events[0]["type"] != "created":
            raise RatingError("event log must start with a created event")
        state = cls(
            session_id=events[0]["session_id"], seed=events[0]["seed"]
        )
        for event in events:
            state._apply(event)
        return state

    def digest(self) -> str:
        """Stable hash of the observable state, for replay verification."""
        snapshot = {
            "session_id": self.session_id,
            "seed": self.seed,
            "verdicts": {k: v for k, v in sorted(self.verdicts.items())},
            "seen_by": {k: sorted(v) for k, v in sorted(self.seen_by.items())},
            "checks_used": {k: sorted(v) for k, v in sorted(self.checks_used.items())},
            "batches": {
                b.id: [b.rater, list(b.card_ids), b.check_id, b.status]
                for b in self.batches.values()
            },
            "batch_counter": self.batch_counter,
        }
        blob = json.dumps(snapshot, sort_keys=True, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()
