import json
import threading
import urllib.request
from urllib.error import HTTPError

import pytest

from explainkit.server import make_server


def items_payload(n_items=18, n_checks=4, seed=0, session_id="t1"):
    return {
        "session_id": session_id,
        "seed": seed,
        "items": [
            {
                "id": f"item-{i:03d}",
                "input": f"input {i}",
                "label": "positive",
                "explanation": {"kind": "abstractive", "text": f"why {i}"},
            }
            for i in range(n_items)
        ],
        "checks": [
            {
                "id": f"check-{i:03d}",
                "input": f"check {i}",
                "label": "negative",
                "explanation": {
                    "kind": "extractive",
                    "context": "clearly supporting words",
                    "start": 0,
                    "end": 7,
                },
                "expected": True,
            }
            for i in range(n_checks)
        ],
    }


@pytest.fixture
def live(tmp_path):
    httpd, service = make_server(port=0, log_dir=tmp_path / "logs")
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{httpd.server_address[1]}"
    yield base, service, tmp_path / "logs"
    httpd.shutdown()
    httpd.server_close()


def request(method, url, payload=None):
    data = json.dumps(payload).encode() if payload is not None else None
    req = urllib.request.Request(url, data=data, method=method)
    if data:
        req.add_header("Content-Type", "application/json")
    with urllib.request.urlopen(req) as resp:
        return resp.status, json.loads(resp.read().decode())


def test_full_http_cycle(live):
    base, _, _ = live
    status, body = request("POST", f"{base}/sessions", items_payload())
    assert status == 201 and body["session_id"] == "t1"

    status, batch = request("GET", f"{base}/sessions/t1/batch?rater=r1")
    assert status == 200
    assert len(batch["cards"]) == 10
    # Served cards must not reveal the check.
    for card in batch["cards"]:
        assert set(card) == {"input", "label", "explanation"}

    answers = [True] * 10
    status, out = request(
        "POST",
        f"{base}/sessions/t1/batch/{batch['batch_id']}",
        {"rater": "r1", "answers": answers},
    )
    assert status == 200 and out["status"] == "accepted"


def test_report_before_completion_names_pending(live):
    base, _, _ = live
    request("POST", f"{base}/sessions", items_payload())
    with pytest.raises(HTTPError) as err:
        request("GET", f"{base}/sessions/t1/report")
    assert err.value.code == 409
    body = json.loads(err.value.read().decode())
    assert "item-000" in body["error"]


def test_drained_and_unknown_session(live):
    base, _, _ = live
    request("POST", f"{base}/sessions", items_payload(n_items=9, n_checks=2))
    _, batch = request("GET", f"{base}/sessions/t1/batch?rater=solo")
    request(
        "POST",
        f"{base}/sessions/t1/batch/{batch['batch_id']}",
        {"rater": "solo", "answers": [True] * 10},
    )
    _, again = request("GET", f"{base}/sessions/t1/batch?rater=solo")
    assert again == {"drained": True}
    with pytest.raises(HTTPError) as err:
        request("GET", f"{base}/sessions/zzz/batch?rater=solo")
    assert err.value.code == 404


def test_rejected_submission_flow(live):
    base, service, _ = live
    request("POST", f"{base}/sessions", items_payload())
    _, batch = request("GET", f"{base}/sessions/t1/batch?rater=r1")
    # Fail the attention check: answer False everywhere (checks expect True).
    status, out = request(
        "POST",
        f"{base}/sessions/t1/batch/{batch['batch_id']}",
        {"rater": "r1", "answers": [False] * 10},
    )
    assert out["status"] == "rejected"
    state = service.sessions["t1"]
    assert all(v == [] for v in state.verdicts.values())


def test_restart_replays_event_log_to_identical_state(tmp_path):
    log_dir = tmp_path / "logs"
    httpd, service = make_server(port=0, log_dir=log_dir)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{httpd.server_address[1]}"
    request("POST", f"{base}/sessions", items_payload())
    for rater in ("r1", "r2", "r3"):
        _, batch = request("GET", f"{base}/sessions/t1/batch?rater={rater}")
        answers = [True] * 10 if rater != "r2" else [True] * 9 + [None]
        request(
            "POST",
            f"{base}/sessions/t1/batch/{batch['batch_id']}",
            {"rater": rater, "answers": answers},
        )
    digest_before = service.sessions["t1"].digest()
    httpd.shutdown()
    httpd.server_close()

    # Simulated crash: a fresh process replays the same log directory.
    httpd2, service2 = make_server(port=0, log_dir=log_dir)
    try:
        assert service2.sessions["t1"].digest() == digest_before
    finally:
        httpd2.server_close()


def test_static_assets_served_at_root(tmp_path):
    static = tmp_path / "dist"
    static.mkdir()
    (static / "index.html").write_text("<html><body>rating ui</body></html>")
    (static / "app.js").write_text("console.log('ok');")
    httpd, _ = make_server(port=0, static_dir=static)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{httpd.server_address[1]}"
    try:
        with urllib.request.urlopen(f"{base}/") as resp:
            assert b"rating ui" in resp.read()
        with urllib.request.urlopen(f"{base}/app.js") as resp:
            assert resp.headers["Content-Type"].startswith("text/javascript") or \
                resp.headers["Content-Type"].startswith("application/javascript")
        with pytest.raises(HTTPError) as err:
            urllib.request.urlopen(f"{base}/missing.css")
        assert err.value.code == 404
    finally:
        httpd.shutdown()
        httpd.server_close()
