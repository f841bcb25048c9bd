"""Trial-conduct HTTP service.

Persistent JSON trial documents (one file per trial, atomic rename on
write, optimistic concurrency via a version counter) and live interim
recommendations over the same decision code path the CLI uses.
"""

from __future__ import annotations

import json
import math
import os
import re
import threading
import uuid

from fastapi import FastAPI, HTTPException, Query

from .boindc import BoinDcConfig, decide_boindc, decision_table
from .core import (
    Decision,
    DoseGrid,
    EndpointSpec,
    PatientRecord,
    TrialState,
    patient_from_json,
    patient_to_json,
    state_from_json,
    state_to_json,
)
from .titedc import McmcConfig, TiteDcConfig, decide_titedc, fit_posterior

DOC_SCHEMA_VERSION = 1
CONDUCT_DESIGNS = ("tite-boin-dc", "tite-dc")

_locks: dict[str, threading.Lock] = {}
_locks_guard = threading.Lock()


def _lock_for(trial_id: str) -> threading.Lock:
    with _locks_guard:
        return _locks.setdefault(trial_id, threading.Lock())


def design_config_from_json(doc: dict):
    design = doc.get("design", "tite-boin-dc")
    if design not in CONDUCT_DESIGNS:
        raise ValueError(f"design must be one of {CONDUCT_DESIGNS}")
    dlt = EndpointSpec(float(doc.get("phi_t", 0.25)),
                       float(doc.get("window_t", 21.0)))
    intol = EndpointSpec(float(doc.get("phi_r", 0.50)),
                         float(doc.get("window_r", 63.0)))
    if design == "tite-dc":
        return design, TiteDcConfig(dlt=dlt, intolerance=intol)
    return design, BoinDcConfig(dlt=dlt, intolerance=intol)


def decision_to_json(decision: Decision) -> dict:
    return {
        "action": decision.action.value,
        "next_level": decision.next_level,
        "rationale": decision.rationale,
    }


def recommend(document: dict, mcmc: McmcConfig | None = None) -> dict:
    """Interim recommendation for a trial document (pure function).

    This is the single decision code path shared by the CLI ``decide``
    command and the HTTP recommendation endpoint.
    """
    design, config = design_config_from_json(document.get("config", document))
    state = state_from_json(document["state"])
    if not state.patients:
        return {
            "action": "start",
            "next_level": state.current_level,
            "rationale": {"rule": "first cohort at the starting dose"},
        }
    if design == "tite-dc":
        mcmc = mcmc or McmcConfig(seed=0)
        draws = fit_posterior(state.patients, state.grid, config, mcmc,
                              state.clock)
        decision, post_state = decide_titedc(state, draws, config)
        out = decision_to_json(decision)
        se = 1.0 / math.sqrt(draws.n_draws)
        out["rationale"]["mc_standard_error_scale"] = se
    else:
        decision, post_state = decide_boindc(state, config)
        out = decision_to_json(decision)
    out["eliminated"] = list(post_state.eliminated)
    out["status"] = post_state.status.value
    return out


class DocumentStore:
    """Directory of versioned trial documents with atomic writes."""

    def __init__(self, data_dir: str):
        self.data_dir = data_dir
        os.makedirs(data_dir, exist_ok=True)

    def _path(self, trial_id: str) -> str:
        if not re.fullmatch(r"[A-Za-z0-9_-]+", trial_id):
            raise HTTPException(404, detail="unknown trial")
        return os.path.join(self.data_dir, f"{trial_id}.json")

    def load(self, trial_id: str) -> dict:
        path = self._path(trial_id)
        if not os.path.exists(path):
            raise HTTPException(404, detail="unknown trial")
        with open(path) as fh:
            return json.load(fh)

    def save(self, document: dict):
        path = self._path(document["id"])
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(document, fh, indent=2, sort_keys=True)
        os.replace(tmp, path)


def _check_version(document: dict, expected) -> None:
    if expected is None:
        raise HTTPException(409, detail={
            "error": "version required for writes",
            "current_version": document["version"],
        })
    if int(expected) != document["version"]:
        raise HTTPException(409, detail={
            "error": "version conflict",
            "current_version": document["version"],
        })


def _validated_patient(payload: dict, state: TrialState,
                       config_doc: dict) -> PatientRecord:
    errors = {}
    level = payload.get("dose_level")
    if not isinstance(level, int) or not 1 <= level <= state.grid.n_levels:
        errors["dose_level"] = f"must be an integer in [1, {state.grid.n_levels}]"
    enroll = payload.get("enroll_time", state.clock)
    if not isinstance(enroll, (int, float)) or enroll < 0:
        errors["enroll_time"] = "must be a nonnegative day offset"
    if errors:
        raise HTTPException(422, detail={"fields": errors})
    try:
        record = patient_from_json({
            "id": payload.get("id") or f"p{len(state.patients) + 1}",
            "dose_level": level,
            "enroll_time": enroll,
            "dlt": payload.get("dlt", {"status": "pending"}),
            "intolerance": payload.get("intolerance", {"status": "pending"}),
        })
        now = max(state.clock, float(enroll))
        record.validate(float(config_doc.get("window_t", 21.0)),
                        float(config_doc.get("window_r", 63.0)), now)
    except (ValueError, KeyError) as exc:
        raise HTTPException(422, detail={"fields": {"patient": str(exc)}})
    if state.eliminated[record.dose_level - 1]:
        raise HTTPException(422, detail={
            "fields": {"dose_level": "dose has been eliminated"}})
    return record


def replay_state(document: dict) -> TrialState:
    """Rebuild the current state from patient entries and the decision log."""
    state = state_from_json(document["state"])
    level = int(document["config"].get("start_level", 1))
    eliminated = [False] * state.grid.n_levels
    status = "enrolling"
    for entry in document["decision_log"]:
        if entry.get("next_level") is not None:
            level = entry["next_level"]
        eliminated = [a or b for a, b in
                      zip(eliminated, entry.get("eliminated", eliminated))]
        if entry["action"] == "terminate":
            status = "terminated"
    rebuilt = state_to_json(state)
    rebuilt["current_level"] = level
    rebuilt["eliminated"] = eliminated
    if status == "terminated":
        rebuilt["status"] = status
    return state_from_json(rebuilt)


def create_app(data_dir: str | None = None) -> FastAPI:
    data_dir = data_dir or os.environ.get("DUALDOSE_DATA_DIR", "./dualdose-data")
    store = DocumentStore(data_dir)
    app = FastAPI(title="dualdose trial conduct", version="0.1.0")

    @app.post("/trials", status_code=201)
    def create_trial(payload: dict):
        try:
            design, _ = design_config_from_json(payload)
            doses = payload.get("doses", [1, 2, 3, 4, 5])
            grid = DoseGrid(tuple(doses))
        except ValueError as exc:
            raise HTTPException(422, detail={"fields": {"config": str(exc)}})
        start_level = int(payload.get("start_level", 1))
        state = TrialState(grid=grid, current_level=start_level)
        document = {
            "schema_version": DOC_SCHEMA_VERSION,
            "id": payload.get("id") or uuid.uuid4().hex[:12],
            "version": 1,
            "config": {
                "design": design,
                "phi_t": payload.get("phi_t", 0.25),
                "phi_r": payload.get("phi_r", 0.50),
                "window_t": payload.get("window_t", 21.0),
                "window_r": payload.get("window_r", 63.0),
                "start_level": start_level,
            },
            "state": state_to_json(state),
            "decision_log": [],
        }
        with _lock_for(document["id"]):
            store.save(document)
        return document

    @app.get("/trials/{trial_id}")
    def get_trial(trial_id: str):
        return store.load(trial_id)

    @app.post("/trials/{trial_id}/patients")
    def add_patient(trial_id: str, payload: dict):
        with _lock_for(trial_id):
            document = store.load(trial_id)
            _check_version(document, payload.get("version"))
            state = state_from_json(document["state"])
            record = _validated_patient(payload, state, document["config"])
            document["state"]["patients"].append(patient_to_json(record))
            document["state"]["clock"] = max(document["state"]["clock"],
                                             record.enroll_time)
            document["version"] += 1
            store.save(document)
        return document

    @app.patch("/trials/{trial_id}/patients/{patient_id}")
    def update_patient(trial_id: str, patient_id: str, payload: dict):
        with _lock_for(trial_id):
            document = store.load(trial_id)
            _check_version(document, payload.get("version"))
            if "clock" in payload:
                if payload["clock"] < document["state"]["clock"]:
                    raise HTTPException(422, detail={
                        "fields": {"clock": "clock cannot run backwards"}})
                document["state"]["clock"] = float(payload["clock"])
            found = None
            for entry in document["state"]["patients"]:
                if entry["id"] == patient_id:
                    found = entry
                    break
            if found is None:
                raise HTTPException(404, detail="unknown patient")
            updated = dict(found)
            for key in ("dlt", "intolerance", "dose_level", "enroll_time"):
                if key in payload:
                    updated[key] = payload[key]
            try:
                record = patient_from_json(updated)
                record.validate(document["config"]["window_t"],
                                document["config"]["window_r"],
                                document["state"]["clock"])
            except (ValueError, KeyError) as exc:
                raise HTTPException(422, detail={"fields": {"patient": str(exc)}})
            found.update(patient_to_json(record))
            document["version"] += 1
            store.save(document)
        return document

    @app.get("/trials/{trial_id}/recommendation")
    def recommendation(trial_id: str,
                       draws: int = Query(1000, gt=0),
                       burn_in: int = Query(500, gt=0),
                       seed: int = 0):
        document = store.load(trial_id)
        mcmc = McmcConfig(burn_in=burn_in, retained=draws, seed=seed)
        try:
            out = recommend(document, mcmc)
        except ValueError as exc:
            raise HTTPException(422, detail={"fields": {"state": str(exc)}})
        out["trial_id"] = trial_id
        out["version"] = document["version"]
        return out

    @app.post("/trials/{trial_id}/decisions")
    def apply_decision(trial_id: str, payload: dict):
        """Accept the current recommendation: append it to the log and
        move the trial's current level / elimination flags."""
        with _lock_for(trial_id):
            document = store.load(trial_id)
            _check_version(document, payload.get("version"))
            try:
                out = recommend(document)
            except ValueError as exc:
                raise HTTPException(422, detail={"fields": {"state": str(exc)}})
            entry = {
                "clock": document["state"]["clock"],
                "action": out["action"],
                "next_level": out.get("next_level"),
                "eliminated": out.get("eliminated",
                                      document["state"]["eliminated"]),
            }
            document["decision_log"].append(entry)
            if entry["next_level"] is not None:
                document["state"]["current_level"] = entry["next_level"]
            document["state"]["eliminated"] = [
                a or b for a, b in zip(document["state"]["eliminated"],
                                       entry["eliminated"])]
            if out["action"] == "terminate":
                document["state"]["status"] = "terminated"
            document["version"] += 1
            store.save(document)
        return document

    @app.post("/trials/{trial_id}/whatif")
    def whatif(trial_id: str, payload: dict):
        """Recommendation with hypothetical extra outcomes; never persists."""
        document = store.load(trial_id)
        state = state_from_json(document["state"])
        hypo = dict(document)
        hypo_state = json.loads(json.dumps(document["state"]))
        for patient in payload.get("patients", []):
            record = _validated_patient(patient, state, document["config"])
            hypo_state["patients"].append(patient_to_json(record))
        if "clock" in payload:
            hypo_state["clock"] = max(hypo_state["clock"],
                                      float(payload["clock"]))
        hypo["state"] = hypo_state
        out = recommend(hypo)
        out["hypothetical"] = True
        return out

    @app.get("/designs/boin-dc/table")
    def boundary_table(phiT: float = 0.25, phiR: float = 0.50,
                       max_n: int = Query(12, gt=0, le=60)):
        try:
            config = BoinDcConfig(dlt=EndpointSpec(phiT, 21.0),
                                  intolerance=EndpointSpec(phiR, 63.0))
            bt, br = config.boundaries_t, config.boundaries_r
        except ValueError as exc:
            raise HTTPException(422, detail={"fields": {"target": str(exc)}})
        return {
            "boundaries": {
                "DLT": {"lambda_e": bt.lambda_e, "lambda_d": bt.lambda_d},
                "intolerance": {"lambda_e": br.lambda_e, "lambda_d": br.lambda_d},
            },
            "rows": decision_table(config, max_n),
        }

    _mount_dashboard(app)
    return app


def _mount_dashboard(app: FastAPI) -> None:
    """Serve the single-page dashboard, when built, at /ui."""
    root = os.environ.get("DUALDOSE_UI_DIR")
    if root is None:
        candidate = os.path.join(os.path.dirname(__file__),
                                 "..", "..", "frontend")
        root = candidate if os.path.isdir(candidate) else None
    if root and os.path.isfile(os.path.join(root, "index.html")):
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=root, html=True), name="ui")


def serve(data_dir: str | None = None, host: str = "127.0.0.1",
          port: int = 8000):
    import uvicorn

    uvicorn.run(create_app(data_dir), host=host, port=port)
