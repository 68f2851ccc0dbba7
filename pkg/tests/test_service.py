import json

import pytest

jsonschema = pytest.importorskip("jsonschema")
from fastapi.testclient import TestClient

from triagekit.service import AssignmentLog, create_app

SUGGEST_RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["groups", "resolvers", "similar", "timings_ms"],
    "additionalProperties": False,
    "properties": {
        "groups": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "score"],
                "additionalProperties": False,
                "properties": {"name": {"type": "string"},
                               "score": {"type": "number"}},
            },
        },
        "resolvers": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "score"],
                "additionalProperties": False,
                "properties": {"name": {"type": "string"},
                               "score": {"type": "number"}},
            },
        },
        "similar": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "snippet", "resolver", "distance"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string"},
                    "snippet": {"type": "string"},
                    "resolver": {"type": "string"},
                    "distance": {"type": "number"},
                },
            },
        },
        "timings_ms": {
            "type": "object",
            "required": ["encode", "group", "ann", "resolver", "total"],
            "properties": {k: {"type": "number"}
                           for k in ("encode", "group", "ann", "resolver",
                                     "total")},
        },
    },
}

ASSIGNMENT = {
    "description": "printer on floor 3 jams",
    "suggested_groups": ["group-00"],
    "suggested_resolvers": ["res-00-1"],
    "chosen_group": "group-00",
    "chosen_resolver": "res-00-1",
    "chooser": "router-7",
}


@pytest.fixture
def client(tiny_bundle, tmp_path):
    app = create_app(bundle=tiny_bundle, assignment_log=tmp_path / "a.log")
    with TestClient(app) as c:
        yield c


@pytest.mark.slow
class TestHealth:
    def test_503_before_load_then_200(self, tiny_bundle_dir, tmp_path):
        app = create_app(bundle_dir=tiny_bundle_dir,
                         assignment_log=tmp_path / "a.log")
        bare = TestClient(app)
        assert bare.get("/v1/health").status_code == 503
        with TestClient(app) as ready:
            response = ready.get("/v1/health")
            assert response.status_code == 200
            body = response.json()
            assert body["status"] == "ok"
            assert body["bundle_version"]


@pytest.mark.slow
class TestSuggestEndpoint:
    def test_valid_body_schema_conformant(self, client):
        response = client.post("/v1/suggest",
                               json={"description": "t000w01 t000w02 t000w03"})
        assert response.status_code == 200
        jsonschema.validate(response.json(), SUGGEST_RESPONSE_SCHEMA)

    def test_defaults_applied(self, client):
        body = client.post(
            "/v1/suggest", json={"description": "t001w01 t001w02 t001w03"}
        ).json()
        assert len(body["groups"]) == 3
        assert len(body["resolvers"]) == 5
        assert len(body["similar"]) == 10

    def test_resolver_list_clamps_to_vocabulary(self, client, tiny_bundle):
        body = client.post(
            "/v1/suggest",
            json={"description": "t001w01 t001w02", "k_resolver": 100000},
        ).json()
        assert len(body["resolvers"]) == len(tiny_bundle.resolvers)

    def test_empty_description_422_with_reason(self, client):
        response = client.post("/v1/suggest", json={"description": "  ... "})
        assert response.status_code == 422
        assert response.json()["error"] == "empty_after_cleaning"

    def test_malformed_body_400(self, client):
        response = client.post("/v1/suggest", json={"desc": "missing key"})
        assert response.status_code == 400
        assert response.json()["error"] == "malformed_request"

    def test_oversized_description_413(self, client):
        response = client.post(
            "/v1/suggest", json={"description": "word " * 10000})
        assert response.status_code == 413

    def test_replay_is_identical(self, client):
        # timings are measurements and legitimately vary; everything the
        # model produces must replay exactly
        payload = {"description": "t002w01 t002w02 t002w03", "k_group": 4}
        first = client.post("/v1/suggest", json=payload).json()
        second = client.post("/v1/suggest", json=payload).json()
        first.pop("timings_ms")
        second.pop("timings_ms")
        assert first == second


@pytest.mark.slow
class TestAssignments:
    def test_sequential_posts_increment_seq(self, client):
        a = client.post("/v1/assignments", json=ASSIGNMENT)
        b = client.post("/v1/assignments", json=ASSIGNMENT)
        assert a.status_code == 200 and b.status_code == 200
        assert b.json()["seq"] == a.json()["seq"] + 1

    def test_missing_chosen_resolver_400_names_field(self, client):
        record = {k: v for k, v in ASSIGNMENT.items() if k != "chosen_resolver"}
        response = client.post("/v1/assignments", json=record)
        assert response.status_code == 400
        assert "chosen_resolver" in json.dumps(response.json())

    def test_restart_resumes_sequence_and_preserves_prefix(
            self, tiny_bundle, tmp_path):
        log_path = tmp_path / "assignments.log"
        app1 = create_app(bundle=tiny_bundle, assignment_log=log_path)
        with TestClient(app1) as c1:
            for _ in range(3):
                seq = c1.post("/v1/assignments", json=ASSIGNMENT).json()["seq"]
        assert seq == 2
        prefix = log_path.read_bytes()

        app2 = create_app(bundle=tiny_bundle, assignment_log=log_path)
        with TestClient(app2) as c2:
            seq = c2.post("/v1/assignments", json=ASSIGNMENT).json()["seq"]
        assert seq == 3
        after = log_path.read_bytes()
        assert after.startswith(prefix)  # earlier bytes never rewritten
        lines = [json.loads(l) for l in after.decode().splitlines()]
        assert [l["seq"] for l in lines] == [0, 1, 2, 3]
        stamps = [l["timestamp"] for l in lines]
        assert stamps == sorted(stamps)

    def test_out_of_order_timestamp_rejected(self, client):
        first = dict(ASSIGNMENT, timestamp="2024-06-01T10:00:00+00:00")
        second = dict(ASSIGNMENT, timestamp="2024-06-01T09:59:59+00:00")
        assert client.post("/v1/assignments", json=first).status_code == 200
        response = client.post("/v1/assignments", json=second)
        assert response.status_code == 400


@pytest.mark.slow
class TestMetricsEndpoint:
    def test_latency_summaries(self, client):
        for _ in range(5):
            client.post("/v1/suggest",
                        json={"description": "t003w01 t003w02 t003w03"})
        body = client.get("/v1/metrics").json()
        stats = body["/v1/suggest"]
        assert stats["count"] == 5
        assert stats["p50_ms"] <= stats["p95_ms"]


class TestAssignmentLog:
    def test_append_only_and_fsync(self, tmp_path):
        log = AssignmentLog(tmp_path / "log.jsonl")
        assert log.append({"chosen_group": "g", "chosen_resolver": "r"}) == 0
        assert log.append({"chosen_group": "g", "chosen_resolver": "r"}) == 1
        reopened = AssignmentLog(tmp_path / "log.jsonl")
        assert reopened.append({"chosen_group": "g",
                                "chosen_resolver": "r"}) == 2
