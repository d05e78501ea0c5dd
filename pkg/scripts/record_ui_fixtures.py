"""Record real API responses into frontend test fixtures.

Seeds both demo tasks into a scratch store, runs the HTTP API in-process, and
captures the exact JSON the review UI consumes. Re-run after changing any API
shape:

    python3 scripts/record_ui_fixtures.py
"""

from __future__ import annotations

import base64
import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from evalsynth import service
from evalsynth.api import ApiConfig, create_app
from evalsynth.demos import FIXED_TIMESTAMP, seed_demo_task
from evalsynth.fm import FMClient
from evalsynth.store import Datastore

OUT = Path(__file__).resolve().parent.parent / "frontend" / "test" / "fixtures" / "recorded.json"


def main() -> None:
    root = Path(tempfile.mkdtemp()) / "store"
    store = Datastore(root, clock=lambda: FIXED_TIMESTAMP)
    chart_id = seed_demo_task(store, which="chart", n=3, failing=1)
    qa_id = seed_demo_task(store, which="qa", n=3, failing=1)
    service.evaluate_task(store, chart_id, fm=FMClient())
    service.evaluate_task(store, qa_id, fm=FMClient())

    fixtures: dict[str, object] = {}
    with TestClient(create_app(ApiConfig(store_root=root))) as client:
        def get(path: str) -> dict:
            response = client.get(path)
            assert response.status_code == 200, (path, response.status_code)
            return response.json()

        for task_id in (chart_id, qa_id):
            fixtures[f"GET /tasks/{task_id}"] = get(f"/tasks/{task_id}")
            fixtures[f"GET /tasks/{task_id}/plan"] = get(f"/tasks/{task_id}/plan")
            fixtures[f"GET /tasks/{task_id}/ui-spec"] = get(f"/tasks/{task_id}/ui-spec")
            fixtures[f"GET /tasks/{task_id}/protocol/messages"] = get(
                f"/tasks/{task_id}/protocol/messages"
            )
            fixtures[f"GET /tasks/{task_id}/results"] = get(f"/tasks/{task_id}/results")
            examples = get(f"/tasks/{task_id}/examples")
            fixtures[f"GET /tasks/{task_id}/examples"] = examples
            for example in examples["examples"]:
                example_id = example["example_id"]
                fixtures[f"GET /examples/{example_id}"] = get(f"/examples/{example_id}")
                for input_ref in example["inputs"]:
                    if input_ref["blob_ref"]:
                        blob = client.get(f"/blobs/{input_ref['blob_ref']}")
                        fixtures[f"GET /blobs/{input_ref['blob_ref']}"] = {
                            "b64": base64.b64encode(blob.content).decode()
                        }

        # a fresh Elicit-stage task for protocol-review fixtures
        created = client.post(
            "/tasks",
            json={
                "description": "Extract the data from this chart into a table",
                "sample_input": {"modality": "image", "media_type": "image/svg+xml"},
            },
        ).json()
        draft_id = created["task_id"]
        fixtures["draft_task_id"] = draft_id
        fixtures[f"GET /tasks/{draft_id}"] = created
        fixtures[f"GET /tasks/{draft_id}/protocol/messages"] = get(
            f"/tasks/{draft_id}/protocol/messages"
        )

        # example label POST response shape
        chart_example = fixtures[f"GET /tasks/{chart_id}/examples"]["examples"][0]
        label = client.post(
            f"/examples/{chart_example['example_id']}/labels",
            json={
                "channel_id": "cell_edits",
                "kind": "cell_edit",
                "payload": {"row": 0, "column": "y", "old_value": 0, "new_value": 1},
                "labeler": "fixture",
            },
        )
        assert label.status_code == 201
        fixtures["POST /examples/{id}/labels -> 201"] = label.json()

        # conflict shape for stale submissions
        stale = client.post(
            f"/tasks/{draft_id}/protocol/messages",
            json={
                "message": {"kind": "ValidateErrors", "session_id": "", "seq": 99, "payload": []},
                "response": {"verdict": "approve"},
            },
        )
        assert stale.status_code == 409
        fixtures["POST stale -> 409"] = stale.json()

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(fixtures, indent=1, sort_keys=True), encoding="utf-8")
    print(f"wrote {OUT} ({OUT.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
