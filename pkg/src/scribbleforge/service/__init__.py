"""FastAPI application wrapping the toolkit.

The review API lives at the root (``/candidates``, ``/export``, ``/palette``)
and batch jobs under ``/jobs``. The review endpoints need a candidate store
directory; job endpoints work without one.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from ..pipeline.review import DEFAULT_LEASE_SECONDS, CandidateStore
from . import jobs_api, review_api


def create_app(
    store_dir: str | Path | None = None,
    lease_seconds: float = DEFAULT_LEASE_SECONDS,
) -> FastAPI:
    app = FastAPI(title="forge", version="0.1.0")
    # the review UI is served from its own dev origin
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = (
        CandidateStore(store_dir, lease_seconds=lease_seconds) if store_dir else None
    )
    app.include_router(review_api.router)
    app.include_router(jobs_api.router)
    return app
