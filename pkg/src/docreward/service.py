"""Stateless reward service over HTTP or a stdin/stdout pipe.

Both transports speak the same JSON schemas: a reward request is
{"items": [{"id", "prediction", "ground_truth"}], "config_profile"?} and
answers with an array of reward breakdowns in request order; an
advantages request is {"groups": [[rewards]]} and answers with an array
of advantage arrays. Reward definitions come from named config profiles
that are immutable once the process starts, so every response is a pure
function of (request, profile).

Malformed document content never produces a 500: segmentation and all
metrics are total. Schema violations are 400s with a machine-readable
reason; an unknown profile is a 404.
"""

# No `from __future__ import annotations` here: FastAPI must see real
# (non-stringized) Request annotations on the endpoint functions, and the
# fastapi import is deliberately local to build_app to keep CLI startup
# light.

import json
import os
import sys
from typing import Any, IO, Mapping

from . import BUILD_ID
from .corpus import breakdown_to_obj
from .reward import RewardConfig, batch_reward
from .rl_math import GrpoConfig, group_advantages

BIND_ENV_VAR = "DOCREWARD_BIND"
DEFAULT_BIND = "127.0.0.1:8000"

_OK = 200
_BAD_REQUEST = 400
_NOT_FOUND = 404


def default_profiles() -> dict[str, RewardConfig]:
    return {"default": RewardConfig()}


def load_profiles(path: str) -> dict[str, RewardConfig]:
    """Read a profiles file: a JSON object mapping profile name to a
    RewardConfig object."""
    with open(path, "r", encoding="utf-8") as f:
        obj = json.load(f)
    if not isinstance(obj, dict) or not obj:
        raise ValueError("profiles file must be a non-empty JSON object")
    profiles = {}
    for name, cfg in obj.items():
        if not isinstance(cfg, dict):
            raise ValueError(f"profile {name!r} must be a JSON object")
        profiles[name] = RewardConfig.from_dict(cfg)
    return profiles


def _validate_items(obj: Any) -> str | None:
    if not isinstance(obj, dict):
        return "request body must be a JSON object"
    items = obj.get("items")
    if not isinstance(items, list) or not items:
        return "items must be a non-empty array"
    seen = set()
    for i, item in enumerate(items):
        if not isinstance(item, dict):
            return f"items[{i}] must be an object"
        for key in ("id", "prediction", "ground_truth"):
            if not isinstance(item.get(key), str):
                return f"items[{i}].{key} must be a string"
        if not item["id"]:
            return f"items[{i}].id must be non-empty"
        if item["id"] in seen:
            return f"duplicate item id {item['id']!r}"
        seen.add(item["id"])
    profile = obj.get("config_profile")
    if profile is not None and not isinstance(profile, str):
        return "config_profile must be a string"
    return None


def score_reward_request(
    obj: Any, profiles: Mapping[str, RewardConfig]
) -> tuple[int, Any]:
    """(status, payload): 200 with the breakdown array, 400 with a reason
    object, or 404 for an unknown profile."""
    reason = _validate_items(obj)
    if reason is not None:
        return _BAD_REQUEST, {"reason": reason}
    name = obj.get("config_profile", "default")
    cfg = profiles.get(name)
    if cfg is None:
        return _NOT_FOUND, {"reason": f"unknown config profile {name!r}"}
    items = obj["items"]
    results = batch_reward(
        [(item["prediction"], item["ground_truth"]) for item in items], cfg
    )
    return _OK, [
        breakdown_to_obj(item["id"], result)
        for item, result in zip(items, results)
    ]


def score_advantages_request(obj: Any) -> tuple[int, Any]:
    if not isinstance(obj, dict):
        return _BAD_REQUEST, {"reason": "request body must be a JSON object"}
    groups = obj.get("groups")
    if not isinstance(groups, list):
        return _BAD_REQUEST, {"reason": "groups must be an array"}
    for i, group in enumerate(groups):
        if not isinstance(group, list) or not group:
            return _BAD_REQUEST, {"reason": f"groups[{i}] must be a non-empty array"}
        for value in group:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                return _BAD_REQUEST, {"reason": f"groups[{i}] contains a non-number"}
    cfg = GrpoConfig()
    return _OK, [group_advantages([float(v) for v in g], cfg) for g in groups]


def build_app(
    profiles: Mapping[str, RewardConfig] | None = None,
    workers: int | None = None,
):
    """Construct the FastAPI application around an immutable profile
    registry. Scoring runs in the sync worker pool; workers bounds its
    size."""
    from contextlib import asynccontextmanager

    from fastapi import FastAPI, Request
    from fastapi.responses import JSONResponse

    registry = dict(profiles) if profiles is not None else default_profiles()
    if not registry:
        raise ValueError("at least one config profile is required")

    @asynccontextmanager
    async def lifespan(app):
        if workers is not None and workers >= 1:
            import anyio

            limiter = anyio.to_thread.current_default_thread_limiter()
            limiter.total_tokens = workers
        yield

    app = FastAPI(title="docreward", version=BUILD_ID, lifespan=lifespan)

    @app.get("/v1/health")
    def health() -> dict:
        return {"version": BUILD_ID, "profiles": sorted(registry)}

    async def _json_body(request: Request) -> tuple[Any, JSONResponse | None]:
        try:
            return await request.json(), None
        except Exception:
            return None, JSONResponse(
                {"reason": "body is not valid JSON"}, status_code=_BAD_REQUEST
            )

    @app.post("/v1/reward")
    async def reward(request: Request):
        body, error = await _json_body(request)
        if error is not None:
            return error
        status, payload = score_reward_request(body, registry)
        return JSONResponse(payload, status_code=status)

    @app.post("/v1/advantages")
    async def advantages(request: Request):
        body, error = await _json_body(request)
        if error is not None:
            return error
        status, payload = score_advantages_request(body)
        return JSONResponse(payload, status_code=status)

    return app


def parse_bind(bind: str) -> tuple[str, int]:
    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"bind address {bind!r} is not HOST:PORT")
    return host, int(port)


def serve_http(
    bind: str = DEFAULT_BIND,
    profiles: Mapping[str, RewardConfig] | None = None,
    workers: int | None = None,
) -> None:
    """Run the HTTP service until interrupted. The DOCREWARD_BIND
    environment variable overrides the bind address."""
    import uvicorn

    bind = os.environ.get(BIND_ENV_VAR, bind)
    host, port = parse_bind(bind)
    app = build_app(profiles, workers)
    uvicorn.run(app, host=host, port=port, log_level="warning")


def serve_pipe(
    profiles: Mapping[str, RewardConfig] | None = None,
    stdin: IO[str] | None = None,
    stdout: IO[str] | None = None,
) -> int:
    """Newline-delimited JSON requests in, responses out, one line per
    request; a malformed line yields an error object on that line and the
    stream continues. Dispatch is on body keys: "items" scores rewards,
    "groups" computes advantages. EOF terminates cleanly."""
    registry = dict(profiles) if profiles is not None else default_profiles()
    if not registry:
        raise ValueError("at least one config profile is required")
    in_stream = stdin if stdin is not None else sys.stdin
    out_stream = stdout if stdout is not None else sys.stdout

    for line in in_stream:
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            payload: Any = {"error": f"invalid JSON: {exc.msg}"}
        else:
            if isinstance(obj, dict) and "items" in obj:
                status, result = score_reward_request(obj, registry)
            elif isinstance(obj, dict) and "groups" in obj:
                status, result = score_advantages_request(obj)
            else:
                status, result = _BAD_REQUEST, {
                    "reason": "request must contain 'items' or 'groups'"
                }
            payload = result if status == _OK else {"error": result["reason"]}
        out_stream.write(json.dumps(payload, ensure_ascii=False, separators=(",", ":")))
        out_stream.write("\n")
        out_stream.flush()
    return 0
