import logging
from contextlib import asynccontextmanager

from dotenv import load_dotenv
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

load_dotenv()

from helpers.logging_helper import configure_logging
from routes import bounds_router, resonance_router, tetra_router

logger = logging.getLogger(__name__)

allow_origins = [
    "http://localhost:3000",
]


@asynccontextmanager
async def lifespan(app: FastAPI):
    configure_logging()
    logger.info("Resonance API starting")
    yield
    logger.info("Resonance API shutting down")


app = FastAPI(
    title="Point Interaction Resonances API",
    description="Resonances, envelopes and optimality certificates for point interactions in R³.",
    version="1.0.0",
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=allow_origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(resonance_router, prefix="/api")
app.include_router(bounds_router, prefix="/api")
app.include_router(tetra_router, prefix="/api")


@app.get("/healthz", tags=["Health Check"])
async def health_check():
    return {"status": "ok", "message": "API is healthy"}
