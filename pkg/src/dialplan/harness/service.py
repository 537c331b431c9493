"""HTTP session service backing interactive (dialogue-level) evaluation.

Each session hides its pre-determined target until finished, re-plans from
the updated history every system turn, and enforces the turn cap. Session
state is persisted as an append-only JSON-lines event log per session.
"""

from __future__ import annotations

import json
import random
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import torch
from fastapi import Body, FastAPI, HTTPException
from pydantic import BaseModel

from dialplan.corpus.types import DialogueSample, PlanPath, Turn
from dialplan.decoding.plan import plan
from dialplan.harness.config import ExperimentConfig
from dialplan.harness.pipeline import load_prepared, split_samples
from dialplan.planner.training import load_planner
from dialplan.responder.context import build_context
from dialplan.responder.control import generate_controlled, generate_prompted
from dialplan.responder.training import load_responder
from dialplan.text import tokens_of

VARIANTS = ("prompt", "controlled")


class CreateSessionRequest(BaseModel):
    variant: str = "random"
    target_id: str | None = None


class MessageRequest(BaseModel):
    utterance: str


class ScoresRequest(BaseModel):
    proactivity: int
    coherence: int
    goal_success: int


@dataclass
class ChatSession:
    session_id: str
    source_sample_id: str
    target_action: str
    target_topic: str
    variant: str
    history: list[dict] = field(default_factory=list)  # {speaker, text}
    turn_count: int = 0
    finished: bool = False
    scores: dict | None = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def public_state(self) -> str:
        if self.scores is not None:
            return "scored"
        return "revealed" if self.finished else "chatting"

    def export(self) -> dict:
        payload = {
            "session_id": self.session_id,
            "history": list(self.history),
            "turn_count": self.turn_count,
            "state": self.public_state(),
        }
        if self.finished:
            payload["target"] = {
                "action": self.target_action,
                "topic": self.target_topic,
            }
            payload["variant"] = self.variant
            if self.scores is not None:
                payload["scores"] = self.scores
        return payload


class SessionStore:
    def __init__(self, directory: Path):
        self.directory = directory
        self.directory.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, ChatSession] = {}
        self.lock = threading.Lock()

    def log(self, session: ChatSession, event: dict) -> None:
        path = self.directory / f"{session.session_id}.jsonl"
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def add(self, session: ChatSession) -> None:
        with self.lock:
            self.sessions[session.session_id] = session

    def get(self, session_id: str) -> ChatSession:
        with self.lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    def all_sessions(self) -> list[ChatSession]:
        with self.lock:
            return list(self.sessions.values())


@dataclass
class ModelBundle:
    cfg: ExperimentConfig
    samples_by_id: dict[str, DialogueSample]
    eval_targets: list[dict]
    planner: object
    lm_by_variant: dict[str, tuple[object, object]]
    vocab_words: set[str]


def _build_eval_targets(cfg: ExperimentConfig, samples, spec) -> list[dict]:
    """Distinct targets across the test splits, grouped later per request."""
    test = split_samples(samples, spec, "test_id") + split_samples(
        samples, spec, "test_ood"
    )
    seen: dict[tuple[str, str], str] = {}
    for s in test:
        key = (s.target.action, s.target.topic)
        seen.setdefault(key, s.id)
    return [
        {"target_id": sid, "action": action, "topic": topic}
        for (action, topic), sid in sorted(seen.items(), key=lambda kv: kv[1])
    ]


def load_bundle(cfg: ExperimentConfig) -> ModelBundle:
    samples, spec, vocabs = load_prepared(cfg)
    planner, _ = load_planner(cfg.planner_ckpt_dir(), vocabs)
    lm, plan_model = load_responder(cfg.responder_ckpt_dir(True), vocabs)
    return ModelBundle(
        cfg=cfg,
        samples_by_id={s.id: s for s in samples},
        eval_targets=_build_eval_targets(cfg, samples, spec),
        planner=planner,
        lm_by_variant={
            "prompt": (lm, None),
            "controlled": (lm, plan_model),
        },
        vocab_words=set(vocabs.words.tokens),
    )


def _session_reply(bundle: ModelBundle, session: ChatSession) -> str:
    """Re-plan from the current history, then generate the system reply."""
    cfg = bundle.cfg
    source = bundle.samples_by_id[session.source_sample_id]
    turns = []
    for i, msg in enumerate(session.history):
        # free-form annotator text: keep only in-vocabulary words
        words = tuple(w for w in tokens_of(msg["text"]) if w in bundle.vocab_words)
        turns.append(Turn(msg["speaker"], words, i))
    sample = DialogueSample(
        id=f"session-{session.session_id}",
        knowledge=source.knowledge,
        profile=source.profile,
        history=tuple(turns),
        gold_path=PlanPath((source.target.as_pair(),), "forward"),
        target=source.target,
        gold_utterance=("",),
    )
    with torch.no_grad():
        result = plan(sample, bundle.planner, cfg.effective_decode_config())
    context = build_context(
        sample.knowledge,
        sample.history,
        result.path,
        sample.profile,
        cfg.responder.max_context_len,
    )
    lm, plan_model = bundle.lm_by_variant[session.variant]
    if session.variant == "controlled" and plan_model is not None:
        gen = generate_controlled(
            context, list(context.plan_tokens), lm, plan_model, cfg.responder
        )
    else:
        gen = generate_prompted(context, lm)
    return " ".join(gen.tokens)


def build_app(cfg: ExperimentConfig, bundle: ModelBundle | None = None) -> FastAPI:
    app = FastAPI(title="dialplan evaluation service")
    bundle = bundle or load_bundle(cfg)
    store = SessionStore(cfg.sessions_dir)
    rng = random.Random(cfg.service.targets_seed)
    max_turns = cfg.service.max_turns

    console_dir = Path(__file__).resolve().parents[3] / "frontend"
    if (console_dir / "dist").is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount(
            "/console", StaticFiles(directory=console_dir, html=True), name="console"
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "sessions": len(store.all_sessions())}

    @app.post("/sessions")
    def create_session(req: CreateSessionRequest) -> dict:
        variant = req.variant
        if variant == "random":
            variant = rng.choice(VARIANTS)
        if variant not in VARIANTS:
            raise HTTPException(status_code=400, detail=f"unknown variant {variant!r}")
        if req.target_id is not None:
            source = bundle.samples_by_id.get(req.target_id)
            if source is None:
                raise HTTPException(status_code=404, detail="unknown target_id")
            source_id = req.target_id
        else:
            source_id = rng.choice(bundle.eval_targets)["target_id"]
            source = bundle.samples_by_id[source_id]
        session = ChatSession(
            session_id=uuid.uuid4().hex[:12],
            source_sample_id=source_id,
            target_action=source.target.action,
            target_topic=source.target.topic,
            variant=variant,
        )
        store.add(session)
        store.log(
            session,
            {
                "event": "created",
                "session_id": session.session_id,
                "target": [source.target.action, source.target.topic],
                "variant": variant,
                "source_sample_id": source_id,
            },
        )
        profile = source.profile.as_dict()
        return {"session_id": session.session_id, "profile": profile}

    @app.post("/sessions/{session_id}/message")
    def message(session_id: str, req: MessageRequest) -> dict:
        session = store.get(session_id)
        with session.lock:
            if session.finished:
                raise HTTPException(status_code=409, detail="session is finished")
            session.history.append({"speaker": "user", "text": req.utterance})
            reply = _session_reply(bundle, session)
            session.history.append({"speaker": "system", "text": reply})
            session.turn_count += 1
            auto_finished = session.turn_count >= max_turns
            if auto_finished:
                session.finished = True
            store.log(
                session,
                {
                    "event": "message",
                    "user": req.utterance,
                    "reply": reply,
                    "turn_count": session.turn_count,
                },
            )
            if auto_finished:
                store.log(session, {"event": "finished", "auto": True})
            return {
                "reply": reply,
                "turn_count": session.turn_count,
                "finished": session.finished,
            }

    @app.post("/sessions/{session_id}/finish")
    def finish(session_id: str) -> dict:
        session = store.get(session_id)
        with session.lock:
            if not session.finished:
                session.finished = True
                store.log(session, {"event": "finished", "auto": False})
            return {
                "revealed_target": {
                    "action": session.target_action,
                    "topic": session.target_topic,
                },
                "variant": session.variant,
                "turn_count": session.turn_count,
            }

    @app.post("/sessions/{session_id}/scores")
    def submit_scores(session_id: str, req: ScoresRequest) -> dict:
        session = store.get(session_id)
        values = {
            "proactivity": req.proactivity,
            "coherence": req.coherence,
            "goal_success": req.goal_success,
        }
        for name, value in values.items():
            if value not in (0, 1, 2):
                raise HTTPException(
                    status_code=400, detail=f"{name} must be one of 0, 1, 2"
                )
        with session.lock:
            if not session.finished:
                raise HTTPException(status_code=409, detail="session not finished")
            if session.scores is not None:
                raise HTTPException(status_code=409, detail="scores already submitted")
            session.scores = values
            store.log(session, {"event": "scores", **values})
            return {"status": "recorded", "receipt": f"{session_id}-scores"}

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str) -> dict:
        session = store.get(session_id)
        with session.lock:
            return session.export()

    @app.get("/sessions")
    def list_sessions() -> dict:
        items = [
            {
                "session_id": s.session_id,
                "state": s.public_state(),
                "turn_count": s.turn_count,
            }
            for s in store.all_sessions()
        ]
        return {"sessions": items, "scored": sum(1 for s in items if s["state"] == "scored")}

    @app.get("/targets/sample")
    def targets_sample(n: int = 50) -> dict:
        # campaign setup data: a few distinct actions, several topics each
        by_action: dict[str, list[dict]] = {}
        for t in bundle.eval_targets:
            by_action.setdefault(t["action"], []).append(t)
        sampler = random.Random(cfg.service.targets_seed)
        actions = sorted(by_action)
        sampler.shuffle(actions)
        actions = actions[: max(1, min(5, len(actions)))]
        per_action = max(1, n // len(actions))
        chosen: list[dict] = []
        for action in actions:
            pool = sorted(by_action[action], key=lambda t: t["target_id"])
            sampler.shuffle(pool)
            chosen.extend(pool[:per_action])
        return {"targets": chosen[:n]}

    @app.get("/turnlevel/sample")
    def turnlevel_sample(n: int = 50, split: str = "test_id") -> dict:
        items = _turnlevel_items(cfg, bundle, split, n)
        if not items:
            raise HTTPException(
                status_code=404,
                detail="no generation outputs for this split; run generate first",
            )
        return {"items": items}

    @app.post("/turnlevel/scores")
    def turnlevel_scores(payload: dict = Body(...)) -> dict:
        item_id = payload.get("item_id")
        scores = payload.get("scores")
        if not item_id or not isinstance(scores, dict):
            raise HTTPException(status_code=400, detail="item_id and scores required")
        for model_scores in scores.values():
            for name in ("appropriateness", "informativeness"):
                if model_scores.get(name) not in (0, 1, 2):
                    raise HTTPException(
                        status_code=400, detail=f"{name} must be one of 0, 1, 2"
                    )
        out = cfg.sessions_dir / "turnlevel_scores.jsonl"
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps({"item_id": item_id, "scores": scores}, sort_keys=True) + "\n")
        return {"status": "recorded"}

    return app


def _turnlevel_items(
    cfg: ExperimentConfig, bundle: ModelBundle, split: str, n: int
) -> list[dict]:
    """Fixed contexts with masked, shuffled outputs of the two variants."""
    outputs: dict[str, dict[str, str]] = {}
    for variant in VARIANTS:
        path = cfg.outputs_dir / f"generations-{split}-{variant}.jsonl"
        if not path.exists():
            return []
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                outputs.setdefault(rec["sample_id"], {})[variant] = rec["utterance"]
    rng = random.Random(cfg.service.targets_seed)
    ids = sorted(sid for sid, outs in outputs.items() if len(outs) == len(VARIANTS))
    rng.shuffle(ids)
    items = []
    for sid in ids[:n]:
        sample = bundle.samples_by_id.get(sid)
        if sample is None:
            continue
        variants = list(VARIANTS)
        rng.shuffle(variants)
        items.append(
            {
                "item_id": sid,
                "history": [
                    {"speaker": t.speaker, "text": " ".join(t.utterance)}
                    for t in sample.history
                ],
                "profile": sample.profile.as_dict(),
                "outputs": [
                    {"key": f"m{i + 1}", "text": outputs[sid][v]}
                    for i, v in enumerate(variants)
                ],
            }
        )
    return items


def serve(cfg: ExperimentConfig) -> None:
    import uvicorn

    app = build_app(cfg)
    uvicorn.run(app, host=cfg.service.host, port=cfg.service.port, log_level="warning")
