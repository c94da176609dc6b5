"""Boot the control plane with a demo session and steer it over HTTP.

Starts the API server in-process, creates a session from inline CSV,
runs a first budget, narrows the weight box through the REST interface
and continues, mirroring what the browser console does. Leave the server
running at the end to explore the UI (built bundle in frontend/dist):
    python demos/04_serve_and_steer.py --keep
"""

import json
import sys
import tempfile
import threading
import time

import httpx
import uvicorn

from axmc.service import create_app
from axmc.synthetic import income_like, write_csv

PORT = 8123
BASE = f"http://127.0.0.1:{PORT}"

data = income_like(n=800, bias=0.15, seed=0)
with tempfile.NamedTemporaryFile("w", suffix=".csv", delete=False) as fh:
    csv_path = fh.name
write_csv(data, csv_path)

sessions_dir = tempfile.mkdtemp(prefix="axmc-demo-")
app = create_app(sessions_dir=sessions_dir, ui_dir="frontend/dist")
server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=PORT, log_level="warning"))
thread = threading.Thread(target=server.run, daemon=True)
thread.start()
while not server.started:
    time.sleep(0.05)
print(f"serving on {BASE} (sessions in {sessions_dir})")

client = httpx.Client(base_url=BASE, timeout=30.0)
body = {
    "dataset_path": csv_path,
    "schema": json.loads(data.schema.to_json()),
    "measures": ["mmce", "f1_gap"],
    "seed": 7,
    "m": 6,
}
session_id = client.post("/sessions", json=body).json()["id"]
print(f"created session {session_id}")

client.post(f"/sessions/{session_id}/run", json={"iterations": 8})
while client.get(f"/sessions/{session_id}").json()["status"] == "running":
    status = client.get(f"/sessions/{session_id}").json()
    print(f"  running... iteration {status['iterations_done']}/{status['iterations_allowed']}")
    time.sleep(1.0)

front = client.get(f"/sessions/{session_id}/front", params={"split": "valid"}).json()
print(f"front after first stage: {len(front['rows'])} points")

print("narrowing weights to [0.1, 0.9] and continuing with +8")
client.patch(f"/sessions/{session_id}/weights", json={"bounds": [[0.1, 0.9], [0.0, 1.0]]})
client.post(f"/sessions/{session_id}/run", json={"iterations": 8})
while client.get(f"/sessions/{session_id}").json()["status"] == "running":
    time.sleep(1.0)

front = client.get(f"/sessions/{session_id}/front", params={"split": "valid"}).json()
print(f"front after second stage: {len(front['rows'])} points")
for row in front["rows"][:5]:
    print(f"  mmce={row['mmce']:.4f} f1_gap={row['f1_gap']:.4f} "
          f"nrounds={row['nrounds']} thr={row['thr']:.2f}")

if "--keep" in sys.argv:
    print(f"\nopen {BASE}/ in a browser to steer interactively; Ctrl-C to stop")
    thread.join()
else:
    server.should_exit = True
    thread.join(timeout=5)
    print("done (pass --keep to leave the server up)")
