import math

import pytest
from fastapi.testclient import TestClient

from embed_service import MAX_BATCH, create_app
from embed_service.encoder import HashedBowEncoder

CHECKPOINT = "hashed-bow-64"

# fixed 4-sentence fixture: one paraphrase pair, one unrelated pair
PARAPHRASE_A = "The cat sat quietly on the warm mat."
PARAPHRASE_B = "A cat was sitting quietly on a warm mat."
UNRELATED_A = "Quarterly revenue grew by seven percent last year."
UNRELATED_B = "The telescope recorded light from a distant galaxy."


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(CHECKPOINT))


def embed(client, texts):
    resp = client.post("/embed", json={"texts": texts})
    assert resp.status_code == 200
    return resp.json()


def cosine(u, v):
    dot = sum(a * b for a, b in zip(u, v))
    return dot / (math.sqrt(sum(a * a for a in u)) * math.sqrt(sum(b * b for b in v)))


class TestEmbed:
    def test_identical_text_identical_vector(self, client):
        body = embed(client, ["same text", "same text"])
        assert body["vectors"][0] == body["vectors"][1]
        again = embed(client, ["same text"])
        assert again["vectors"][0] == body["vectors"][0]

    def test_order_preserved_with_sentinels(self, client):
        sentinels = [f"sentinel number {i} marker" for i in (3, 0, 7, 2)]
        batch = embed(client, sentinels)["vectors"]
        singles = [embed(client, [t])["vectors"][0] for t in sentinels]
        assert batch == singles

    def test_response_shape_invariants(self, client):
        body = embed(client, ["one", "two", "three"])
        assert len(body["vectors"]) == 3
        assert all(len(v) == body["dim"] for v in body["vectors"])
        assert body["model"] == CHECKPOINT

    def test_dim_constant_across_calls(self, client):
        a = embed(client, ["alpha"])
        b = embed(client, ["a much longer text " * 40])
        assert a["dim"] == b["dim"]

    def test_empty_list_is_400(self, client):
        assert client.post("/embed", json={"texts": []}).status_code == 400

    def test_oversize_batch_is_400(self, client):
        texts = ["x"] * (MAX_BATCH + 1)
        assert client.post("/embed", json={"texts": texts}).status_code == 400

    def test_max_batch_accepted(self, client):
        texts = [f"t{i}" for i in range(MAX_BATCH)]
        assert len(embed(client, texts)["vectors"]) == MAX_BATCH

    def test_paraphrases_more_similar_than_unrelated(self, client):
        vs = embed(client, [PARAPHRASE_A, PARAPHRASE_B,
                            UNRELATED_A, UNRELATED_B])["vectors"]
        assert cosine(vs[0], vs[1]) > cosine(vs[2], vs[3])

    def test_long_text_truncates_at_token_boundary(self):
        enc = HashedBowEncoder(dim=64, max_tokens=10)
        words = [f"word{i}" for i in range(30)]
        assert enc.encode_one(" ".join(words)) == enc.encode_one(
            " ".join(words[:10]))

    def test_empty_text_gets_a_unit_vector(self, client):
        vec = embed(client, [""])["vectors"][0]
        assert sum(x * x for x in vec) == pytest.approx(1.0, abs=1e-9)


class TestHealthLifecycle:
    def test_503_before_load_then_200(self):
        app = create_app(CHECKPOINT, preload=False)
        client = TestClient(app)
        first = client.get("/health")
        assert first.status_code == 503
        assert first.json()["status"] == "loading"
        assert client.post("/embed", json={"texts": ["x"]}).status_code == 503
        app.state.load()
        ready = client.get("/health")
        assert ready.status_code == 200
        body = ready.json()
        assert body == {"status": "ok", "model": CHECKPOINT,
                        "dim": body["dim"]}
        assert body["dim"] == 64
