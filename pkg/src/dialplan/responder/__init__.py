"""Plan-guided utterance generation: prompting and cache-gradient control."""

from dialplan.responder.config import ResponderConfig
from dialplan.responder.context import GenerationContext, build_context
from dialplan.responder.lm import ResponderLM
from dialplan.responder.plan_model import PlanModel, plan_model_loglik
from dialplan.responder.control import (
    generate_controlled,
    generate_prompted,
    perturb_cache,
)
from dialplan.responder.training import (
    load_responder,
    save_responder,
    train_responder,
)

__all__ = [
    "GenerationContext",
    "PlanModel",
    "ResponderConfig",
    "ResponderLM",
    "build_context",
    "generate_controlled",
    "generate_prompted",
    "load_responder",
    "perturb_cache",
    "plan_model_loglik",
    "save_responder",
    "train_responder",
]
