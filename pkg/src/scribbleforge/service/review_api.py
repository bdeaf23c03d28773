"""Review endpoints backing the human-curation UI.

State mutations go through the candidate store's write-ahead log; listing
pending candidates acquires a lease for the requesting reviewer. Verdicts
and scribbles on non-leased or already-decided candidates return 409.
"""

from __future__ import annotations

import base64

from fastapi import APIRouter, HTTPException, Query, Request

from ..pipeline.review import (
    CandidateConflictError,
    CandidateState,
    CandidateStore,
    StrokeValidationError,
    UnknownCandidateError,
)
from ..scribble import PALETTE
from .models import (
    CandidateAssets,
    CandidateView,
    ExportOut,
    PaletteColor,
    PaletteOut,
    ScribbleIn,
    VerdictIn,
)

router = APIRouter()


def _store(request: Request) -> CandidateStore:
    store = getattr(request.app.state, "store", None)
    if store is None:
        raise HTTPException(status_code=503, detail="no candidate store configured")
    return store


def _view(state: CandidateState) -> CandidateView:
    return CandidateView(
        id=state.entry.id,
        instruction=state.instruction,
        status=state.status,
        task=state.entry.task,
        color=tuple(state.color),
        lease_reviewer=state.lease[0] if state.lease else None,
        lease_expiry=state.lease[1] if state.lease else None,
    )


@router.get("/candidates", response_model=list[CandidateView])
def list_candidates(
    request: Request,
    status: str = Query(default="pending"),
    limit: int = Query(default=10, ge=1, le=100),
    reviewer: str = Query(default="anonymous"),
):
    store = _store(request)
    if status == "pending":
        return [_view(s) for s in store.lease_pending(reviewer, limit)]
    return [_view(s) for s in store.list(status)[:limit]]


@router.get("/candidates/{candidate_id}/assets", response_model=CandidateAssets)
def candidate_assets(candidate_id: str, request: Request):
    store = _store(request)
    try:
        state = store.get(candidate_id)
        payload = {}
        for role in ("input", "target", "base"):
            if role in state.entry.assets:
                raw = store.asset_path(candidate_id, role).read_bytes()
                payload[f"{role}_png"] = base64.b64encode(raw).decode("ascii")
    except UnknownCandidateError:
        raise HTTPException(status_code=404, detail=f"unknown candidate {candidate_id}")
    return CandidateAssets(
        id=candidate_id, instruction=state.instruction, status=state.status, **payload
    )


@router.post("/candidates/{candidate_id}/verdict", response_model=CandidateView)
def post_verdict(candidate_id: str, body: VerdictIn, request: Request):
    store = _store(request)
    try:
        state = store.decide(candidate_id, body.reviewer, body.verdict)
    except UnknownCandidateError:
        raise HTTPException(status_code=404, detail=f"unknown candidate {candidate_id}")
    except CandidateConflictError as err:
        raise HTTPException(status_code=409, detail=str(err))
    return _view(state)


@router.post("/candidates/{candidate_id}/scribble", response_model=CandidateAssets)
def post_scribble(candidate_id: str, body: ScribbleIn, request: Request):
    store = _store(request)
    strokes = [
        {"points": [[x, y] for x, y in s.points], "color": list(s.color), "thickness": s.thickness}
        for s in body.strokes
    ]
    try:
        state = store.add_strokes(candidate_id, body.reviewer, strokes)
    except UnknownCandidateError:
        raise HTTPException(status_code=404, detail=f"unknown candidate {candidate_id}")
    except CandidateConflictError as err:
        raise HTTPException(status_code=409, detail=str(err))
    except StrokeValidationError as err:
        raise HTTPException(status_code=422, detail=str(err))
    raw = store.asset_path(candidate_id, "input").read_bytes()
    return CandidateAssets(
        id=candidate_id,
        instruction=state.instruction,
        status=state.status,
        input_png=base64.b64encode(raw).decode("ascii"),
        target_png=base64.b64encode(store.asset_path(candidate_id, "target").read_bytes()).decode(
            "ascii"
        ),
    )


@router.get("/export", response_model=ExportOut)
def export_accepted(request: Request):
    store = _store(request)
    entries = [e.to_json() for e in store.export_accepted()]
    return ExportOut(count=len(entries), entries=entries)


@router.get("/palette", response_model=PaletteOut)
def palette():
    return PaletteOut(colors=[PaletteColor(name=n, rgb=rgb) for n, rgb in PALETTE])
