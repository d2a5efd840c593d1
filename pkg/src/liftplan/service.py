"""HTTP/JSON session service for interactive what-if planning.

Sessions live in memory. Planning happens eagerly at session creation so
queries are answered from a finished plan; steps sample the factored
next-state distribution with a per-session seed stream.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from . import counting, planner_approx, planner_exact, transition
from .cli import query_result_json
from .model import ModelError, RfMdpModel, epidemic_model, parse_model
from .rewards import reward

# Exact planning is refused beyond this many LP constraints.
EXACT_CONSTRAINT_GUARD = 20_000


@dataclass
class Session:
    id: str
    model: RfMdpModel
    mode: str
    plan_doc: dict
    state: counting.CountingState
    seed: int
    steps: int = 0
    history: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


def default_initial_state(model: RfMdpModel) -> counting.CountingState:
    """Everything false: all mass in each clique's all-false bucket."""
    sp = counting.space(model)
    entries = []
    for info in sp.cliques:
        if info.propositional:
            entries.append(False)
        else:
            counts = [0] * len(info.buckets)
            counts[0] = info.n
            entries.append(tuple(counts))
    return counting.CountingState(entries=tuple(entries))


def exact_constraint_count(model: RfMdpModel) -> int:
    return sum(
        counting.action_space_size(model, s) for s in counting.state_space(model)
    )


def create_app(default_model: RfMdpModel | None = None) -> FastAPI:
    app = FastAPI(title="liftplan service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, Session] = {}

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.post("/sessions", status_code=200)
    def create_session(body: dict):
        try:
            family = body.get("family")
            if body.get("model") is not None:
                model = parse_model(json.dumps(body["model"]))
            elif family is not None:
                if family != "epidemic":
                    raise ModelError(f"unknown family {family!r}")
                model = epidemic_model(int(body.get("n", 3)))
            elif default_model is not None:
                model = default_model
            else:
                model = epidemic_model(int(body.get("n", 3)))
        except (ModelError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

        mode = body.get("mode", "approx")
        if mode not in ("exact", "approx"):
            raise HTTPException(status_code=400, detail=f"unknown mode {mode!r}")
        if mode == "exact":
            count = exact_constraint_count(model)
            if count > EXACT_CONSTRAINT_GUARD:
                raise HTTPException(
                    status_code=413,
                    detail=f"exact planning needs {count} constraints, "
                    f"guard is {EXACT_CONSTRAINT_GUARD}",
                )
            plan_doc = planner_exact.value_function_to_json(
                model, planner_exact.plan_exact(model)
            )
        else:
            plan_doc = planner_approx.weights_to_json(
                model, planner_approx.plan_approx(model)
            )

        if body.get("initial_state") is not None:
            try:
                state = counting.state_from_json(model, body["initial_state"])
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
        else:
            state = default_initial_state(model)

        session = Session(
            id=uuid.uuid4().hex,
            model=model,
            mode=mode,
            plan_doc=plan_doc,
            state=state,
            seed=int(body.get("seed", 0)),
        )
        sessions[session.id] = session
        return {
            "session_id": session.id,
            "mode": mode,
            "initial_state": counting.state_to_json(model, state),
        }

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str):
        session = get_session(session_id)
        return {
            "state": counting.state_to_json(session.model, session.state),
            "steps": session.steps,
            "reward": reward(session.model, session.state),
        }

    @app.get("/sessions/{session_id}/actions")
    def get_actions(session_id: str):
        session = get_session(session_id)
        actions = [
            counting.action_to_json(session.model, a)
            for a in counting.action_space(session.model, session.state)
        ]
        return {"actions": actions}

    @app.post("/sessions/{session_id}/query")
    def post_query(session_id: str, body: dict):
        session = get_session(session_id)
        min_reward = body.get("min_reward")
        min_reward = float("-inf") if min_reward is None else float(min_reward)
        restriction = body.get("restriction")
        min_prob = float(body.get("min_prob", 0.0))
        try:
            result = query_result_json(
                session.model,
                session.plan_doc,
                counting.state_to_json(session.model, session.state),
                min_reward,
                restriction,
                min_prob,
                session.mode,
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        with session.lock:
            session.history.append(
                {
                    "kind": "query",
                    "state": counting.state_to_json(session.model, session.state),
                    "min_reward": None if min_reward == float("-inf") else min_reward,
                    "restriction": restriction,
                    "min_prob": min_prob,
                    "result_size": len(result["actions"]),
                }
            )
        return result

    @app.post("/sessions/{session_id}/step")
    def post_step(session_id: str, body: dict):
        session = get_session(session_id)
        model = session.model
        try:
            action = counting.action_from_json(model, body.get("action", {}))
        except (ValueError, TypeError) as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        sp = counting.space(model)
        if not sp.is_admissible(session.state, action):
            raise HTTPException(status_code=409, detail="inadmissible action")
        with session.lock:
            step_seed = session.seed * 1_000_003 + session.steps
            next_state = transition.sample_next(model, session.state, action, step_seed)
            step_reward = reward(model, next_state)
            session.history.append(
                {
                    "kind": "step",
                    "state": counting.state_to_json(model, session.state),
                    "action": counting.action_to_json(model, action),
                    "next_state": counting.state_to_json(model, next_state),
                    "reward": step_reward,
                }
            )
            session.state = next_state
            session.steps += 1
        return {
            "next_state": counting.state_to_json(model, next_state),
            "reward": step_reward,
            "steps": session.steps,
        }

    @app.get("/sessions/{session_id}/history")
    def get_history(session_id: str):
        session = get_session(session_id)
        return {"history": list(session.history)}

    return app
