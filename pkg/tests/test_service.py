import pytest
from fastapi.testclient import TestClient

from prepline.corpus import make_synth_dataset
from prepline.dataset import to_csv_text
from prepline.service import create_app


@pytest.fixture
def client(tmp_path):
    app = create_app(
        {
            "session_root": str(tmp_path / "sessions"),
            "backend": "template",
            "models_dir": str(tmp_path / "no_models"),
        }
    )
    with TestClient(app) as client:
        yield client


@pytest.fixture
def csv_text():
    return to_csv_text(make_synth_dataset(77, name="task"))


def make_session(client, csv_text, label="label"):
    response = client.post(
        "/v1/sessions", json={"csv_text": csv_text, "label": label, "name": "task"}
    )
    assert response.status_code == 201, response.text
    return response.json()


class TestSessions:
    def test_create_returns_root_with_metric(self, client, csv_text):
        body = make_session(client, csv_text)
        assert len(body["session_id"]) == 32
        root = body["version"]
        assert root["id"] == 1
        assert root["parent_id"] is None
        assert root["metric"] is not None
        assert 'load_csv("task.csv")' in root["program"]

    def test_missing_label_400(self, client, csv_text):
        response = client.post("/v1/sessions", json={"csv_text": csv_text})
        assert response.status_code == 400

    def test_unknown_label_400(self, client, csv_text):
        response = client.post(
            "/v1/sessions", json={"csv_text": csv_text, "label": "nope"}
        )
        assert response.status_code == 400

    def test_non_binary_label_422(self, client, csv_text):
        response = client.post(
            "/v1/sessions", json={"csv_text": csv_text, "label": "big_mag"}
        )
        assert response.status_code == 422

    def test_create_from_path(self, client, csv_text, tmp_path):
        path = tmp_path / "upload.csv"
        path.write_text(csv_text)
        response = client.post(
            "/v1/sessions", json={"path": str(path), "label": "label"}
        )
        assert response.status_code == 201
        assert 'load_csv("upload.csv")' in response.json()["version"]["program"]

    def test_unknown_session_404(self, client):
        assert client.post("/v1/sessions/deadbeef/recommend").status_code == 404


class TestRecommend:
    def test_fresh_session_non_empty_sorted(self, client, csv_text):
        token = make_session(client, csv_text)["session_id"]
        response = client.post(f"/v1/sessions/{token}/recommend")
        assert response.status_code == 200
        recs = response.json()["recommendations"]
        assert recs
        for rec in recs:
            assert rec["prompt"]
            assert rec["kind"] in ("logical", "physical")

    def test_deterministic_across_calls(self, client, csv_text):
        token = make_session(client, csv_text)["session_id"]
        a = client.post(f"/v1/sessions/{token}/recommend").json()
        b = client.post(f"/v1/sessions/{token}/recommend").json()
        assert a == b

    def test_409_after_all_families(self, client, csv_text):
        token = make_session(client, csv_text)["session_id"]
        coarse_prompts = [
            "Impute the missing values",
            "Handle the outlier values",
            "Scale the features",
            "Discretize the features",
            "Generate interaction features",
            "Select the informative features",
        ]
        for prompt in coarse_prompts:
            response = client.post(
                f"/v1/sessions/{token}/apply", json={"prompt": prompt}
            )
            assert response.status_code == 200, response.text
        response = client.post(f"/v1/sessions/{token}/recommend")
        assert response.status_code == 409


class TestApply:
    def test_apply_creates_child_version(self, client, csv_text):
        token = make_session(client, csv_text)["session_id"]
        response = client.post(
            f"/v1/sessions/{token}/apply",
            json={"prompt": "Standardize features by removing the mean and scaling to unit variance"},
        )
        assert response.status_code == 200
        body = response.json()
        assert body["version"]["parent_id"] == 1
        assert "X = standard_scale(X)" in body["version"]["program"]
        assert body["exec"]["attempts"] == 1
        assert body["exec"]["metric"] is not None

    def test_unknown_prompt_422(self, client, csv_text):
        token = make_session(client, csv_text)["session_id"]
        response = client.post(
            f"/v1/sessions/{token}/apply", json={"prompt": "do something magic"}
        )
        assert response.status_code == 422

    def test_branching_from_root(self, client, csv_text):
        token = make_session(client, csv_text)["session_id"]
        client.post(
            f"/v1/sessions/{token}/apply", json={"prompt": "Scale the features"}
        )
        client.post(
            f"/v1/sessions/{token}/apply", json={"prompt": "Impute the missing values"}
        )
        response = client.post(
            f"/v1/sessions/{token}/apply",
            json={"prompt": "Generate interaction features", "parent_version": 1},
        )
        assert response.json()["version"]["parent_id"] == 1

    def test_error_does_not_mutate_state(self, client, csv_text):
        token = make_session(client, csv_text)["session_id"]
        before = client.get(f"/v1/sessions/{token}/versions").json()
        response = client.post(
            f"/v1/sessions/{token}/apply", json={"prompt": "garbled nonsense"}
        )
        assert response.status_code == 422
        after = client.get(f"/v1/sessions/{token}/versions").json()
        assert before == after


class TestVersionsDiffRollback:
    def test_tree_shape(self, client, csv_text):
        token = make_session(client, csv_text)["session_id"]
        client.post(f"/v1/sessions/{token}/apply", json={"prompt": "Scale the features"})
        client.post(f"/v1/sessions/{token}/apply", json={"prompt": "Impute the missing values"})
        body = client.get(f"/v1/sessions/{token}/versions").json()
        assert [v["id"] for v in body["versions"]] == [1, 2, 3]
        assert [v["parent_id"] for v in body["versions"]] == [None, 1, 2]
        assert body["current"] == 3

    def test_diff_identity_empty(self, client, csv_text):
        token = make_session(client, csv_text)["session_id"]
        response = client.get(f"/v1/sessions/{token}/diff", params={"a": 1, "b": 1})
        assert response.json() == {"changes": []}

    def test_diff_one_insert(self, client, csv_text):
        token = make_session(client, csv_text)["session_id"]
        client.post(f"/v1/sessions/{token}/apply", json={"prompt": "Scale the features"})
        changes = client.get(
            f"/v1/sessions/{token}/diff", params={"a": 1, "b": 2}
        ).json()["changes"]
        assert len(changes) == 1
        assert changes[0]["kind"] == "insert"
        assert changes[0]["text"] == "X = standard_scale(X)"

    def test_rollback_moves_current(self, client, csv_text):
        token = make_session(client, csv_text)["session_id"]
        client.post(f"/v1/sessions/{token}/apply", json={"prompt": "Scale the features"})
        response = client.post(
            f"/v1/sessions/{token}/rollback", json={"version": 1}
        )
        assert response.json()["current"] == 1
        assert client.get(f"/v1/sessions/{token}/versions").json()["current"] == 1

    def test_rollback_unknown_404(self, client, csv_text):
        token = make_session(client, csv_text)["session_id"]
        assert (
            client.post(f"/v1/sessions/{token}/rollback", json={"version": 99}).status_code
            == 404
        )


class TestCatalogEndpoint:
    def test_catalog_shape(self, client):
        body = client.get("/v1/catalog").json()
        assert len(body["families"]) == 6
        names = [op["name"] for fam in body["families"] for op in fam["operations"]]
        assert len(names) == 18
        assert "min_max_scale" in names

    def test_unversioned_alias(self, client):
        assert client.get("/catalog").json() == client.get("/v1/catalog").json()


class TestPersistence:
    def test_sessions_survive_restart(self, tmp_path, csv_text):
        root = str(tmp_path / "sessions")
        app1 = create_app({"session_root": root, "backend": "template"})
        with TestClient(app1) as c1:
            token = make_session(c1, csv_text)["session_id"]
            c1.post(f"/v1/sessions/{token}/apply", json={"prompt": "Scale the features"})
        app2 = create_app({"session_root": root, "backend": "template"})
        with TestClient(app2) as c2:
            body = c2.get(f"/v1/sessions/{token}/versions").json()
            assert len(body["versions"]) == 2
            assert body["current"] == 2

    def test_cache_metrics_invisible(self, tmp_path, csv_text):
        # re-executing the same program with a warm cache gives the same metric
        root = str(tmp_path / "sessions")
        app = create_app({"session_root": root, "backend": "template"})
        with TestClient(app) as client:
            token = make_session(client, csv_text)["session_id"]
            m1 = client.post(
                f"/v1/sessions/{token}/apply", json={"prompt": "Scale the features"}
            ).json()["exec"]["metric"]
            client.post(f"/v1/sessions/{token}/rollback", json={"version": 1})
            m2 = client.post(
                f"/v1/sessions/{token}/apply", json={"prompt": "Scale the features"}
            ).json()["exec"]["metric"]
        assert m1 == m2
