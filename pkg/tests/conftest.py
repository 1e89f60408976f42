import json
import socket

import pytest

from pgce.corpus import TextSample, word_tokens


def make_sample(sample_id: str, text: str, **kwargs) -> TextSample:
    return TextSample(
        id=sample_id, text=text, word_count=len(word_tokens(text)), **kwargs
    )


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")


@pytest.fixture
def no_network(monkeypatch):
    """Fail and record on any socket connection attempt."""
    attempts = []

    def guard(self, address, *args, **kwargs):
        attempts.append(address)
        raise AssertionError(f"network access attempted: {address}")

    monkeypatch.setattr(socket.socket, "connect", guard)
    monkeypatch.setattr(
        socket,
        "create_connection",
        lambda *a, **k: (_ for _ in ()).throw(AssertionError("network access attempted")),
    )
    return attempts
