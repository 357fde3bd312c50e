"""HTTP service exposing the analysis pipeline.

POST /analyze takes an :class:`AnalyzeRequest` (program source plus stage
selection and options) and returns the same report the CLI produces with
``--format json``.  Input errors in the submitted program map to 400.
"""

from __future__ import annotations

import argparse

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..errors import DlctxError
from ..models import AnalyzeRequest, Report
from ..pipeline import run_pipeline

app = FastAPI(
    title="dlctx",
    description="Deadlock-aware initial-context generation for a small actor language",
    version=__version__,
)


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/analyze", response_model=Report, response_model_exclude_none=True)
def analyze(request: AnalyzeRequest) -> Report:
    try:
        return run_pipeline(request)
    except DlctxError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def main(argv: list[str] | None = None) -> int:  # pragma: no cover - thin wrapper
    import uvicorn

    ap = argparse.ArgumentParser(prog="dlctx-serve", description="Run the dlctx HTTP service")
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8000)
    args = ap.parse_args(argv)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":  # pragma: no cover
    main()
