"""HTTP session service for conducting a live TPC run step by step.

A session is created with two team labels and returns one capability token
per captain; every later call authenticates with a token in the
X-Captain-Token header.  The phase machine only moves forward
(created -> tossed -> proposed -> complete), the proposal endpoint accepts
only the unlucky captain's token, and the choice endpoint only the lucky
captain's.  Sessions persist in an embedded SQLite key-value file so a live
toss survives a service restart (a real toss ceremony cannot be re-run).

Endpoints:
    POST /sessions                      create, returns session + tokens
    POST /sessions/{id}/toss            body {seed?}
    POST /sessions/{id}/proposal        body {b, advantageous_turn}
    POST /sessions/{id}/choice          body {option}
    GET  /sessions/{id}                 session snapshot incl. transcript
    GET  /sessions/{id}/whatif          ?b=&a_hat=&kind=&sigma=

Errors use a flat body {code, message, field?} with statuses 401 (bad
token), 403 (wrong role), 404 (unknown session), 409 (wrong phase), and
422 (validation).
"""

from __future__ import annotations

import datetime as _dt
import json
import math
import secrets
import sqlite3
import threading
from collections import defaultdict
from typing import Any, Mapping

from pydantic import BaseModel

from .errors import FairTossError, InvalidModelError
from .mechanism import Phase, ProtocolRun, Turn, build_proposal
from .streams import substream
from .valuation import (
    DEFAULT_MODEL,
    ModelKind,
    ValuationModel,
    ValuationView,
    advantageous_turn_for,
    indifference_bonus,
    utility,
)

__all__ = ["ServiceError", "SessionStore", "SessionManager", "create_app"]


class ServiceError(FairTossError):
    """Domain error with an HTTP mapping."""

    def __init__(self, status: int, code: str, message: str, field: str | None = None):
        self.status = status
        self.code = code
        self.field = field
        super().__init__(message)

    def body(self) -> dict[str, Any]:
        out: dict[str, Any] = {"code": self.code, "message": str(self)}
        if self.field is not None:
            out["field"] = self.field
        return out


def _not_found(session_id: str) -> ServiceError:
    return ServiceError(404, "not_found", f"no session {session_id!r}")


def _validation(message: str, field: str | None = None) -> ServiceError:
    return ServiceError(422, "validation", message, field)


def _conflict(message: str) -> ServiceError:
    return ServiceError(409, "conflict", message)


def _role(message: str) -> ServiceError:
    return ServiceError(403, "role", message)


def _auth(message: str = "missing or unknown capability token") -> ServiceError:
    return ServiceError(401, "auth", message)


class SessionStore:
    """Embedded key-value store: one SQLite row per session, JSON payload."""

    def __init__(self, path: str = ":memory:"):
        self.path = path
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._lock = threading.Lock()
        with self._lock:
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS sessions (id TEXT PRIMARY KEY, data TEXT NOT NULL)"
            )
            self._conn.commit()

    def get(self, session_id: str) -> dict[str, Any] | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT data FROM sessions WHERE id = ?", (session_id,)
            ).fetchone()
        return json.loads(row[0]) if row else None

    def put(self, session_id: str, record: Mapping[str, Any]) -> None:
        payload = json.dumps(record, sort_keys=True, separators=(",", ":"))
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO sessions (id, data) VALUES (?, ?)", (session_id, payload)
            )
            self._conn.commit()

    def close(self) -> None:
        with self._lock:
            self._conn.close()


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _fold_run(record: Mapping[str, Any]) -> ProtocolRun:
    """Rebuild the protocol state machine from the session's event list."""
    run = ProtocolRun(team_a=record["teams"][0], team_b=record["teams"][1])
    for event in record["events"]:
        kind = event["type"]
        if kind == "tossed":
            run.apply_toss(event["coin_draw"], event["seed_trace"])
        elif kind == "proposed":
            run.propose(event["b_raw"], Turn(event["advantageous_turn"]))
        elif kind == "chosen":
            run.choose(event["option"])
    return run


def _parse_model(kind: str | None, sigma: float | None, defaults: Mapping[str, Any] | None) -> ValuationModel:
    if kind is None and defaults:
        kind = defaults.get("kind")
        if sigma is None:
            sigma = defaults.get("sigma")
    if kind is None:
        model_kind = DEFAULT_MODEL.kind
        if sigma is None:
            return DEFAULT_MODEL
    else:
        try:
            model_kind = ModelKind(kind)
        except ValueError:
            raise _validation(f"unknown model kind {kind!r}", "kind") from None
    try:
        return ValuationModel(model_kind, sigma)
    except InvalidModelError as exc:
        raise _validation(str(exc), "sigma") from exc


class SessionManager:
    """All session logic; the HTTP layer is a thin adapter over this class.

    Mutations on one session are serialized by a per-session lock."""

    def __init__(self, store: SessionStore):
        self.store = store
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks[session_id]

    # -- helpers -----------------------------------------------------------

    def _load(self, session_id: str) -> dict[str, Any]:
        record = self.store.get(session_id)
        if record is None:
            raise _not_found(session_id)
        return record

    @staticmethod
    def _team_for_token(record: Mapping[str, Any], token: str | None) -> str:
        if not token:
            raise _auth()
        for team, expected in record["tokens"].items():
            if secrets.compare_digest(expected, token):
                return team
        raise _auth()

    @staticmethod
    def public_view(record: Mapping[str, Any]) -> dict[str, Any]:
        return {key: value for key, value in record.items() if key != "tokens"}

    def _save(self, record: dict[str, Any], run: ProtocolRun) -> dict[str, Any]:
        record["phase"] = run.phase.value
        record["toss"] = run.toss.to_dict() if run.toss else None
        record["proposal"] = run.proposal.to_dict() if run.proposal else None
        record["allocation"] = run.allocation.to_dict() if run.allocation else None
        record["events"] = list(run.events)
        record["updated_at"] = _now()
        self.store.put(record["id"], record)
        return self.public_view(record)

    # -- operations --------------------------------------------------------

    def create(
        self,
        team_a: str,
        team_b: str,
        valuation: Mapping[str, Any] | None = None,
    ) -> tuple[dict[str, Any], dict[str, str]]:
        if not team_a or not team_b:
            raise _validation("team labels must be non-empty", "teams")
        if team_a == team_b:
            raise _validation("team labels must be distinct", "teams")
        if valuation is not None:
            _parse_model(valuation.get("kind"), valuation.get("sigma"), None)
        session_id = secrets.token_urlsafe(12)
        tokens = {team_a: secrets.token_urlsafe(16), team_b: secrets.token_urlsafe(16)}
        now = _now()
        record = {
            "id": session_id,
            "teams": [team_a, team_b],
            "phase": Phase.CREATED.value,
            "tokens": tokens,
            "toss": None,
            "proposal": None,
            "allocation": None,
            "events": [],
            "valuation_defaults": dict(valuation) if valuation else None,
            "created_at": now,
            "updated_at": now,
        }
        self.store.put(session_id, record)
        return self.public_view(record), tokens

    def toss(self, session_id: str, token: str | None, seed: int | None = None) -> dict[str, Any]:
        with self._lock_for(session_id):
            record = self._load(session_id)
            self._team_for_token(record, token)
            if record["phase"] != Phase.CREATED.value:
                raise _conflict(f"cannot toss in phase {record['phase']!r}")
            if seed is None:
                entropy = secrets.randbits(63)
                rng, trace = substream(entropy, "toss"), f"entropy:{entropy}"
            else:
                rng, trace = substream(seed, "toss"), f"seed:{seed}"
            run = _fold_run(record)
            run.run_toss(rng, trace)
            return self._save(record, run)

    def propose(
        self,
        session_id: str,
        token: str | None,
        b: float,
        advantageous_turn: str,
    ) -> dict[str, Any]:
        with self._lock_for(session_id):
            record = self._load(session_id)
            team = self._team_for_token(record, token)
            if record["phase"] != Phase.TOSSED.value:
                raise _conflict(f"cannot propose in phase {record['phase']!r}")
            if team != record["toss"]["unlucky"]:
                raise _role("only the unlucky captain (toss loser) may propose")
            if isinstance(b, bool) or not isinstance(b, (int, float)) or math.isnan(b) or math.isinf(b):
                raise _validation(f"bonus runs must be a finite number, got {b!r}", "b")
            if b < 0:
                raise _validation(f"bonus runs must be >= 0, got {b}", "b")
            try:
                turn = Turn(advantageous_turn)
            except ValueError:
                raise _validation(
                    f"advantageous_turn must be 'bat_first' or 'bowl_first', got {advantageous_turn!r}",
                    "advantageous_turn",
                ) from None
            run = _fold_run(record)
            run.propose(float(b), turn)
            return self._save(record, run)

    def choose(self, session_id: str, token: str | None, option: int) -> dict[str, Any]:
        with self._lock_for(session_id):
            record = self._load(session_id)
            team = self._team_for_token(record, token)
            if record["phase"] != Phase.PROPOSED.value:
                raise _conflict(f"cannot choose in phase {record['phase']!r}")
            if team != record["toss"]["lucky"]:
                raise _role("only the lucky captain (toss winner) may choose")
            if option not in (1, 2):
                raise _validation(f"option must be 1 or 2, got {option!r}", "option")
            run = _fold_run(record)
            run.choose(option)
            return self._save(record, run)

    def get(self, session_id: str, token: str | None) -> dict[str, Any]:
        record = self._load(session_id)
        self._team_for_token(record, token)
        return self.public_view(record)

    def whatif(
        self,
        session_id: str,
        token: str | None,
        candidate_b: float,
        perceived_advantage: float,
        kind: str | None = None,
        sigma: float | None = None,
    ) -> dict[str, Any]:
        """Pure read: utilities of both bundles at candidate_b for the given
        view, plus the view's solved indifference bonus."""
        record = self._load(session_id)
        team = self._team_for_token(record, token)
        if record["phase"] == Phase.CREATED.value:
            raise _conflict("what-if queries require a completed toss")
        if not math.isfinite(candidate_b) or candidate_b < 0:
            raise _validation(f"candidate b must be finite and >= 0, got {candidate_b}", "b")
        if not math.isfinite(perceived_advantage):
            raise _validation("perceived advantage must be finite", "a_hat")
        model = _parse_model(kind, sigma, record.get("valuation_defaults"))
        view = ValuationView(team=team, perceived_advantage=perceived_advantage, model=model)
        proposal = build_proposal(candidate_b, advantageous_turn_for(perceived_advantage))
        return {
            "candidate_b": candidate_b,
            "option1_utility": utility(proposal.option1, view),
            "option2_utility": utility(proposal.option2, view),
            "indifference_bonus": indifference_bonus(view),
            "advantageous_turn": proposal.advantageous_turn.value,
        }


class CreateSessionBody(BaseModel):
    teams: list[str]
    valuation: dict | None = None


class TossBody(BaseModel):
    seed: int | None = None


class ProposalBody(BaseModel):
    b: float
    advantageous_turn: str


class ChoiceBody(BaseModel):
    option: int


def create_app(store_path: str = ":memory:"):
    """FastAPI application over a SessionManager backed by store_path."""
    from fastapi import FastAPI, Header
    from fastapi.exceptions import RequestValidationError
    from fastapi.responses import JSONResponse

    manager = SessionManager(SessionStore(store_path))
    app = FastAPI(title="fairtoss session service", version="0.1.0")
    app.state.manager = manager

    @app.exception_handler(ServiceError)
    async def _service_error(_request, exc: ServiceError):
        return JSONResponse(status_code=exc.status, content=exc.body())

    @app.exception_handler(RequestValidationError)
    async def _request_error(_request, exc: RequestValidationError):
        errors = exc.errors()
        field = ".".join(str(part) for part in errors[0]["loc"][1:]) if errors else None
        return JSONResponse(
            status_code=422,
            content={"code": "validation", "message": errors[0]["msg"] if errors else "invalid request",
                     **({"field": field} if field else {})},
        )

    @app.post("/sessions", status_code=201)
    async def create_session(body: CreateSessionBody):
        if len(body.teams) != 2:
            raise _validation("exactly two team labels required", "teams")
        session, tokens = manager.create(body.teams[0], body.teams[1], body.valuation)
        return {"session": session, "tokens": tokens}

    @app.post("/sessions/{session_id}/toss")
    async def post_toss(
        session_id: str,
        body: TossBody,
        x_captain_token: str | None = Header(default=None),
    ):
        return {"session": manager.toss(session_id, x_captain_token, body.seed)}

    @app.post("/sessions/{session_id}/proposal")
    async def post_proposal(
        session_id: str,
        body: ProposalBody,
        x_captain_token: str | None = Header(default=None),
    ):
        return {"session": manager.propose(session_id, x_captain_token, body.b, body.advantageous_turn)}

    @app.post("/sessions/{session_id}/choice")
    async def post_choice(
        session_id: str,
        body: ChoiceBody,
        x_captain_token: str | None = Header(default=None),
    ):
        return {"session": manager.choose(session_id, x_captain_token, body.option)}

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str, x_captain_token: str | None = Header(default=None)):
        return {"session": manager.get(session_id, x_captain_token)}

    @app.get("/sessions/{session_id}/whatif")
    async def get_whatif(
        session_id: str,
        b: float,
        a_hat: float,
        kind: str | None = None,
        sigma: float | None = None,
        x_captain_token: str | None = Header(default=None),
    ):
        return manager.whatif(session_id, x_captain_token, b, a_hat, kind, sigma)

    return app
