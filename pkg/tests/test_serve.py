"""The serve-review command end to end, in a subprocess."""
import json
import socket
import subprocess
import sys
import time
import urllib.request
from pathlib import Path

import pytest

DATA = Path(__file__).resolve().parents[1] / "src" / "toolguard" / "data"


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def get_json(url, timeout=1.0):
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        return json.loads(resp.read())


@pytest.fixture()
def server(tmp_path):
    port = free_port()
    proc = subprocess.Popen(
        [
            sys.executable, "-m", "toolguard.cli", "serve-review",
            "--maps-dir", str(tmp_path / "maps"),
            "--map", str(DATA / "airline_gt_map.json"),
            "--map-id", "airline",
            "--host", "127.0.0.1", "--port", str(port),
        ],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    base = f"http://127.0.0.1:{port}"
    try:
        deadline = time.monotonic() + 15
        while time.monotonic() < deadline:
            try:
                get_json(base + "/maps")
                break
            except Exception:
                if proc.poll() is not None:
                    raise RuntimeError("server exited early")
                time.sleep(0.15)
        else:
            raise RuntimeError("server never came up")
        yield base
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def test_serve_review_seeds_and_serves(server):
    assert get_json(server + "/maps") == {"maps": ["airline"]}
    coverage = get_json(server + "/maps/airline/coverage")
    assert len(coverage["sentences"]) == 32
    assert coverage["uncovered"]
    assert set(coverage["per_tool"]) == {
        "book_reservation", "cancel_reservation", "send_certificate",
        "update_reservation_baggages", "update_reservation_flights",
        "update_reservation_passengers",
    }
