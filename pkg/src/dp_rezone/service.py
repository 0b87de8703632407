"""HTTP job service: upload or synthesize districts, launch runs, fetch results.

Endpoints (JSON unless noted):
  POST /api/districts            multipart CSV upload or {"synthetic": {...}}
  GET  /api/districts            list district handles
  POST /api/runs                 {"district_id": ..., "config": {...}} -> run record
  GET  /api/runs                 list run records
  GET  /api/runs/{id}            run record, plus summary metrics when done
  GET  /api/runs/{id}/assignment.geojson?scenario=current|nonprivate|private_mean
  GET  /api/runs/{id}/metrics.csv

Persistence is flat files under the data directory: districts/{id}/*.csv and
runs/{id}/ holding the experiment artifact set plus record.json, so a
completed run is fully reconstructable after a restart. Jobs run on a small
thread pool; status moves queued -> running -> done|failed.
"""
from __future__ import annotations

import json
import queue
import re
import threading
import uuid
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from email.parser import BytesParser
from email.policy import HTTP as HTTP_POLICY
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .dataio import load_district_dir, write_district_dir
from .district import District, DistrictError
from .harness import ExperimentConfig, emit_report, run_experiment
from .synth import generate_synthetic, synthetic_ses_vars
from .ses import write_ses_csv

_DISTRICT_FILES = ("blocks", "adjacency", "schools", "assignment")
_OPTIONAL_FILES = ("travel", "ses")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class RunRecord:
    run_id: str
    district_id: str
    status: str  # queued | running | done | failed
    config: dict
    created_at: str
    finished_at: str | None = None
    error: str | None = None
    artifacts: list[str] | None = None

    def to_json_dict(self) -> dict:
        return asdict(self)


class DataStore:
    """Flat-file persistence for districts and runs."""

    def __init__(self, root: Path):
        self.root = Path(root)
        (self.root / "districts").mkdir(parents=True, exist_ok=True)
        (self.root / "runs").mkdir(parents=True, exist_ok=True)
        (self.root / "records").mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._district_cache: dict[str, District] = {}

    # -- districts ---------------------------------------------------------

    def district_dir(self, district_id: str) -> Path:
        return self.root / "districts" / district_id

    def run_dir(self, run_id: str) -> Path:
        return self.root / "runs" / run_id

    def new_district_id(self) -> str:
        return uuid.uuid4().hex[:12]

    def save_district_meta(self, district_id: str, meta: dict) -> None:
        _atomic_json(self.district_dir(district_id) / "meta.json", meta)

    def list_districts(self) -> list[dict]:
        out = []
        for d in sorted((self.root / "districts").iterdir()):
            meta = d / "meta.json"
            if meta.exists():
                out.append(json.loads(meta.read_text(encoding="utf-8")))
        return out

    def district_meta(self, district_id: str) -> dict:
        meta = self.district_dir(district_id) / "meta.json"
        if not meta.exists():
            raise ApiError(404, "not_found", f"unknown district {district_id}")
        return json.loads(meta.read_text(encoding="utf-8"))

    def load_district(self, district_id: str) -> District:
        with self._lock:
            cached = self._district_cache.get(district_id)
        if cached is not None:
            return cached
        d = self.district_dir(district_id)
        if not d.exists():
            raise ApiError(404, "not_found", f"unknown district {district_id}")
        try:
            district = load_district_dir(d, name=self.district_meta(district_id).get("name", district_id))
        except DistrictError as exc:
            raise ApiError(500, "district_corrupt", str(exc)) from exc
        with self._lock:
            self._district_cache[district_id] = district
        return district

    # -- runs ----------------------------------------------------------------

    def write_run_record(self, record: RunRecord) -> None:
        # record lives outside runs/{id}/ so that directory is exactly the
        # experiment's artifact file set
        _atomic_json(self.root / "records" / f"{record.run_id}.json", record.to_json_dict())

    def read_run_record(self, run_id: str) -> RunRecord:
        path = self.root / "records" / f"{run_id}.json"
        if not path.exists():
            raise ApiError(404, "not_found", f"unknown run {run_id}")
        return RunRecord(**json.loads(path.read_text(encoding="utf-8")))

    def list_runs(self) -> list[dict]:
        out = []
        for rec in sorted((self.root / "records").glob("*.json")):
            out.append(json.loads(rec.read_text(encoding="utf-8")))
        return out


def _atomic_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    tmp.replace(path)


class JobRunner:
    """Synchronized FIFO of runs executed by a bounded worker-thread pool."""

    def __init__(self, store: DataStore, workers: int = 2):
        self.store = store
        self.queue: queue.Queue = queue.Queue()
        self._lock = threading.Lock()
        self._threads = [
            threading.Thread(target=self._worker, daemon=True, name=f"job-worker-{i}")
            for i in range(max(1, workers))
        ]
        for t in self._threads:
            t.start()

    def submit(self, district_id: str, config: ExperimentConfig, config_raw: dict) -> RunRecord:
        self.store.district_meta(district_id)  # 404 if unknown
        record = RunRecord(
            run_id=uuid.uuid4().hex[:12],
            district_id=district_id,
            status="queued",
            config=config_raw,
            created_at=_now(),
        )
        self.store.write_run_record(record)
        self.queue.put((record.run_id, district_id, config))
        return record

    def _set_status(self, run_id: str, **changes) -> RunRecord:
        with self._lock:
            record = self.store.read_run_record(run_id)
            for k, v in changes.items():
                setattr(record, k, v)
            self.store.write_run_record(record)
            return record

    def _worker(self) -> None:
        while True:
            item = self.queue.get()
            if item is None:
                return
            run_id, district_id, config = item
            try:
                self._set_status(run_id, status="running")
                district = self.store.load_district(district_id)
                result = run_experiment(district, config)
                written = emit_report(result, self.store.run_dir(run_id))
                self._set_status(
                    run_id,
                    status="done",
                    finished_at=_now(),
                    artifacts=[p.name for p in written],
                )
            except Exception as exc:  # noqa: BLE001 - job boundary
                self._set_status(
                    run_id, status="failed", finished_at=_now(), error=str(exc)
                )
            finally:
                self.queue.task_done()

    def stop(self) -> None:
        for _ in self._threads:
            self.queue.put(None)
        for t in self._threads:
            t.join(timeout=5)


def _parse_multipart(content_type: str, body: bytes) -> dict[str, bytes]:
    header = f"Content-Type: {content_type}\r\nMIME-Version: 1.0\r\n\r\n".encode()
    msg = BytesParser(policy=HTTP_POLICY).parsebytes(header + body)
    if not msg.is_multipart():
        raise ApiError(400, "bad_request", "expected multipart/form-data")
    parts: dict[str, bytes] = {}
    for part in msg.iter_parts():
        name = part.get_param("name", header="content-disposition")
        if name:
            parts[name] = part.get_payload(decode=True) or b""
    return parts


def _district_summary(store: DataStore, district_id: str, district: District, name: str) -> dict:
    return {
        "district_id": district_id,
        "name": name,
        "n_blocks": district.n_blocks,
        "n_schools": district.n_schools,
        "group_totals": {g: int(district.counts.group_row(g).sum()) for g in district.groups},
        "total_students": int(district.counts.totals.sum()),
        "created_at": _now(),
    }


class Api:
    """Transport-independent request handling (easier to test than the socket layer)."""

    def __init__(self, store: DataStore, runner: JobRunner):
        self.store = store
        self.runner = runner

    def create_district(self, content_type: str, body: bytes) -> dict:
        if content_type.startswith("application/json"):
            try:
                payload = json.loads(body.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise ApiError(400, "bad_request", f"malformed JSON body: {exc}") from exc
            synth = payload.get("synthetic")
            if not isinstance(synth, dict):
                raise ApiError(400, "bad_request", 'JSON body must contain a "synthetic" object')
            try:
                district = generate_synthetic(
                    rows=int(synth.get("rows", 12)),
                    cols=int(synth.get("cols", 12)),
                    n_schools=int(synth.get("schools", 4)),
                    segregation_strength=float(synth.get("strength", 0.8)),
                    mean_block_pop=float(synth.get("mean_pop", 8)),
                    seed=int(synth.get("seed", 0)),
                )
            except ValueError as exc:
                raise ApiError(400, "bad_request", str(exc)) from exc
            district_id = self.store.new_district_id()
            ddir = self.store.district_dir(district_id)
            write_district_dir(district, ddir)
            write_ses_csv(
                ddir / "ses.csv",
                synthetic_ses_vars(district, float(synth.get("strength", 0.8)),
                                   int(synth.get("seed", 0))),
            )
            name = payload.get("name") or district.name
        elif content_type.startswith("multipart/form-data"):
            parts = _parse_multipart(content_type, body)
            missing = [f for f in _DISTRICT_FILES if f not in parts]
            if missing:
                raise ApiError(400, "bad_request", f"missing file fields: {missing}")
            district_id = self.store.new_district_id()
            ddir = self.store.district_dir(district_id)
            ddir.mkdir(parents=True, exist_ok=True)
            for field in _DISTRICT_FILES + _OPTIONAL_FILES:
                if field in parts:
                    (ddir / f"{field}.csv").write_bytes(parts[field])
            name = parts.get("name", b"").decode("utf-8").strip() or district_id
            try:
                district = load_district_dir(ddir, name=name)
            except DistrictError as exc:
                # reject and clean up so bad uploads do not linger
                for f in ddir.iterdir():
                    f.unlink()
                ddir.rmdir()
                raise ApiError(400, "bad_request", f"invalid district upload: {exc}") from exc
        else:
            raise ApiError(400, "bad_request", f"unsupported content type {content_type!r}")

        meta = _district_summary(self.store, district_id, district, name)
        self.store.save_district_meta(district_id, meta)
        return meta

    def create_run(self, body: bytes) -> dict:
        try:
            payload = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ApiError(400, "bad_request", f"malformed JSON body: {exc}") from exc
        district_id = payload.get("district_id")
        if not district_id:
            raise ApiError(400, "bad_request", "district_id is required")
        config_raw = payload.get("config") or {}
        try:
            config = ExperimentConfig.from_json_dict(config_raw)
        except (TypeError, ValueError) as exc:
            raise ApiError(400, "bad_request", f"invalid config: {exc}") from exc
        record = self.runner.submit(district_id, config, config_raw)
        return record.to_json_dict()

    def get_run(self, run_id: str) -> dict:
        record = self.store.read_run_record(run_id)
        out = record.to_json_dict()
        if record.status == "done":
            results = self.store.run_dir(run_id) / "results.json"
            if results.exists():
                blob = json.loads(results.read_text(encoding="utf-8"))
                out["summary"] = {
                    "current_dissimilarity": blob["current"]["dissimilarity"],
                    "nonprivate_dissimilarity": blob["nonprivate"]["dissimilarity"],
                    "private": [
                        {
                            "epsilon": p["epsilon"],
                            "mean_dissimilarity": p["mean_dissimilarity"],
                            "dissimilarity_ci": p["dissimilarity_ci"],
                            "mean_blocks_rezoned": p["mean_blocks_rezoned"],
                            "mean_travel_by_group": p["mean_travel_by_group"],
                            "mean_pct_rezoned_by_group": p["mean_pct_rezoned_by_group"],
                        }
                        for p in blob["private"]
                    ],
                    "travel_by_group": {
                        "current": blob["current"]["travel_by_group"],
                        "nonprivate": blob["nonprivate"]["travel_by_group"],
                    },
                    "pct_rezoned_by_group": {
                        "nonprivate": blob["nonprivate"]["pct_rezoned_by_group"],
                    },
                }
        return out

    def run_geojson(self, run_id: str, scenario: str, epsilon: float | None) -> dict:
        record = self.store.read_run_record(run_id)
        if record.status != "done":
            raise ApiError(409, "not_ready", f"run {run_id} status is {record.status}")
        path = self.store.run_dir(run_id) / "district.geojson"
        if not path.exists():
            raise ApiError(404, "not_found", "run has no geometry (blocks lack centroids)")
        blob = json.loads(path.read_text(encoding="utf-8"))
        if scenario not in ("current", "nonprivate", "private_mean"):
            raise ApiError(400, "bad_request", f"unknown scenario {scenario!r}")
        eps_tags = sorted(
            {
                k.removeprefix("private_mean_eps")
                for f in blob["features"]
                for k in f["properties"]
                if k.startswith("private_mean_eps")
            }
        )
        tag = None
        if scenario == "private_mean":
            if not eps_tags:
                raise ApiError(404, "not_found", "run has no private scenarios")
            tag = f"{epsilon:g}" if epsilon is not None else eps_tags[0]
            if tag not in eps_tags:
                raise ApiError(400, "bad_request", f"epsilon {tag} not in run (has {eps_tags})")
        for f in blob["features"]:
            props = f["properties"]
            if scenario == "current":
                props["school"] = props["current"]
            elif scenario == "nonprivate":
                props["school"] = props["nonprivate"]
            else:
                props["school"] = props[f"private_mean_eps{tag}"]
                props["rezone_probability"] = props[f"rezone_prob_eps{tag}"]
        blob["scenario"] = scenario
        if tag is not None:
            blob["epsilon"] = float(tag)
        return blob

    def run_metrics_csv(self, run_id: str) -> str:
        record = self.store.read_run_record(run_id)
        if record.status != "done":
            raise ApiError(409, "not_ready", f"run {run_id} status is {record.status}")
        path = self.store.run_dir(run_id) / "metrics.csv"
        if not path.exists():
            raise ApiError(404, "not_found", "metrics.csv missing")
        return path.read_text(encoding="utf-8")


class _Handler(BaseHTTPRequestHandler):
    api: Api = None  # set by make_server
    protocol_version = "HTTP/1.1"

    # -- plumbing ------------------------------------------------------------

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, payload, content_type="application/json") -> None:
        if isinstance(payload, (dict, list)):
            body = json.dumps(payload).encode("utf-8")
        elif isinstance(payload, str):
            body = payload.encode("utf-8")
        else:
            body = payload
        self.send_response(status)
        self.send_header("Content-Type", content_type + "; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, exc: ApiError) -> None:
        self._send(exc.status, {"code": exc.code, "message": exc.message})

    def _body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length else b""

    def _query(self) -> dict[str, str]:
        if "?" not in self.path:
            return {}
        out = {}
        for chunk in self.path.split("?", 1)[1].split("&"):
            if "=" in chunk:
                k, v = chunk.split("=", 1)
                out[k] = v
        return out

    @property
    def _route(self) -> str:
        return self.path.split("?", 1)[0].rstrip("/")

    # -- methods ---------------------------------------------------------------

    def do_OPTIONS(self):  # CORS preflight
        self._send(204, b"", content_type="text/plain")

    def do_GET(self):
        try:
            route = self._route
            if route == "/api/districts":
                self._send(200, self.api.store.list_districts())
            elif route == "/api/runs":
                self._send(200, self.api.store.list_runs())
            elif m := re.fullmatch(r"/api/runs/([0-9a-f]+)", route):
                self._send(200, self.api.get_run(m.group(1)))
            elif m := re.fullmatch(r"/api/runs/([0-9a-f]+)/assignment\.geojson", route):
                q = self._query()
                eps = float(q["epsilon"]) if "epsilon" in q else None
                blob = self.api.run_geojson(m.group(1), q.get("scenario", "current"), eps)
                self._send(200, blob, content_type="application/geo+json")
            elif m := re.fullmatch(r"/api/runs/([0-9a-f]+)/metrics\.csv", route):
                self._send(200, self.api.run_metrics_csv(m.group(1)), content_type="text/csv")
            else:
                self._error(ApiError(404, "not_found", f"no route {route}"))
        except ApiError as exc:
            self._error(exc)
        except Exception as exc:  # noqa: BLE001 - transport boundary
            self._error(ApiError(500, "internal", str(exc)))

    def do_POST(self):
        try:
            route = self._route
            if route == "/api/districts":
                meta = self.api.create_district(
                    self.headers.get("Content-Type", ""), self._body()
                )
                self._send(201, meta)
            elif route == "/api/runs":
                self._send(201, self.api.create_run(self._body()))
            else:
                self._error(ApiError(404, "not_found", f"no route {route}"))
        except ApiError as exc:
            self._error(exc)
        except Exception as exc:  # noqa: BLE001 - transport boundary
            self._error(ApiError(500, "internal", str(exc)))


def make_server(
    host: str, port: int, data_dir: Path, workers: int = 2
) -> tuple[ThreadingHTTPServer, JobRunner]:
    """Build the HTTP server and its job runner; caller owns both lifecycles."""
    store = DataStore(Path(data_dir))
    runner = JobRunner(store, workers=workers)
    api = Api(store, runner)
    handler = type("Handler", (_Handler,), {"api": api})
    server = ThreadingHTTPServer((host, port), handler)
    return server, runner


def serve_forever(host: str, port: int, data_dir: Path, workers: int = 2) -> None:
    server, runner = make_server(host, port, data_dir, workers)
    print(f"dp-rezone service on http://{host}:{server.server_address[1]} "
          f"(data dir {data_dir})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        runner.stop()
        server.server_close()
