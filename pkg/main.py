#!/usr/bin/env python3
"""
Cavity Machine - FastAPI service
HTTP surface over verification, validation, estimation and background synthesis
"""

import logging
import os
import sys
import time
from pathlib import Path

import psutil
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

sys.path.insert(0, str(Path(__file__).parent))

from machine_config import run_config_store  # noqa: E402

logging.basicConfig(level=run_config_store.get_log_level(), format="%(levelname)s %(name)s: %(message)s")

SERVICE_NAME = "Cavity Machine API"
SERVICE_VERSION = "1.0.0"
START_TIME = time.time()

app = FastAPI(
    title=SERVICE_NAME,
    description="Multimode cavity + qubit machine: sequence verification, synthesis and dynamics validation",
    version=SERVICE_VERSION,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

try:
    from control_routes import router as control_router, run_synthesis_job
    app.include_router(control_router)
    print("✅ Registered control_router")
except Exception as e:
    print(f"⚠️  Failed to register control_router: {e}")
    run_synthesis_job = None

from job_queue import job_queue  # noqa: E402

if run_synthesis_job is not None:
    job_queue.register_handler("synthesize", run_synthesis_job)
    job_queue.start_workers(num_workers=run_config_store.get_job_workers())


def _route_table():
    routes = []
    for route in app.routes:
        path = getattr(route, "path", None)
        methods = getattr(route, "methods", None)
        if path and methods and path not in ["/openapi.json", "/docs", "/redoc", "/docs/oauth2-redirect"]:
            routes.append(f"{sorted(methods)[0]} {path}")
    return sorted(routes)


@app.get("/")
async def root():
    return {
        "status": "healthy",
        "service": SERVICE_NAME,
        "version": SERVICE_VERSION,
    }


@app.get("/health")
async def health_check():
    """Process resources, job queue state and registered routes"""
    process = psutil.Process(os.getpid())
    memory = process.memory_info()
    return {
        "status": "healthy",
        "process": {
            "rss_mb": memory.rss / (1024 * 1024),
            "cpu_percent": process.cpu_percent(interval=None),
            "threads": process.num_threads(),
            "uptime_seconds": time.time() - START_TIME,
        },
        "jobs": {
            "queue_depth": job_queue.get_queue_depth(),
            "running_count": job_queue.get_running_count(),
            "max_queue_size": job_queue.max_queue_size,
        },
        "routes": _route_table(),
    }


if __name__ == "__main__":
    import uvicorn
    port = int(os.getenv("PORT", 8000))
    uvicorn.run(app, host="0.0.0.0", port=port)
