"""
Cograd API
FastAPI endpoints for slope fitting, G-traces, null tables, efficiency reports and simulations.
"""

import io
import sys
import logging
from pathlib import Path
from datetime import datetime
from typing import List, Optional

from fastapi import FastAPI, File, HTTPException, Query, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, field_validator

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from services.cograd_service import cograd_service as cograd, read_sample_csv
from services.errors import (
    CogradError,
    DuplicateAbscissa,
    InvalidConfig,
    InvalidSample,
    LevelUnattainable,
    NullTooLarge,
    ProblemTooLarge,
    UnknownModel,
)
from services.montecarlo import SimulationConfig
from services.ranks_gini import Sample

logger = logging.getLogger(__name__)

# Initialize FastAPI app
app = FastAPI(
    title="Cograd API",
    description="Slope estimation by Gini cograduation of residuals",
    version="1.0.0"
)

# Add CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


# Pydantic models for request/response
class SampleRequest(BaseModel):
    x: List[str]
    y: List[str]
    exact: bool = True

    @field_validator('x', 'y', mode='before')
    def coerce_to_text(cls, v):
        # numbers arrive as JSON floats; keep their shortest decimal text
        if not isinstance(v, list):
            return v
        return [str(item) for item in v]

    def to_sample(self) -> Sample:
        if len(self.x) != len(self.y):
            raise InvalidSample(f"x has {len(self.x)} values but y has {len(self.y)}")
        return Sample.from_rows(list(zip(self.x, self.y)), exact=self.exact)


class FitRequest(SampleRequest):
    level: Optional[float] = None
    null_method: str = "auto"
    seed: int = 0
    reps: Optional[int] = None


def _raise_http(e: CogradError, action: str):
    """Translate a domain failure into an HTTP error."""
    if isinstance(e, DuplicateAbscissa):
        raise HTTPException(status_code=409, detail=str(e))
    if isinstance(e, UnknownModel):
        raise HTTPException(status_code=404, detail=str(e))
    if isinstance(e, LevelUnattainable):
        raise HTTPException(status_code=422, detail={"message": str(e), "max_level": e.max_level})
    if isinstance(e, (ProblemTooLarge, NullTooLarge)):
        raise HTTPException(status_code=413, detail=str(e))
    if isinstance(e, (InvalidSample, InvalidConfig)):
        raise HTTPException(status_code=400, detail=str(e))
    logger.error(f"Error {action}: {e}")
    raise HTTPException(status_code=400, detail=f"{type(e).__name__}: {e}")


# =============================================================================
# HEALTH CHECK
# =============================================================================

@app.get("/")
async def root():
    """Root endpoint with API information."""
    return {
        "message": "Cograd API",
        "version": "1.0.0",
        "status": "operational",
        "endpoints": {
            "health": "/api/health",
            "fit": "/api/fit",
            "fit_upload": "/api/fit/upload",
            "gtrace": "/api/gtrace",
            "nulltable": "/api/nulltable/{n}",
            "are": "/api/are/{model}",
            "simulate": "/api/simulate"
        }
    }


@app.get("/api/health")
async def health_check():
    """Health check endpoint."""
    try:
        return {
            "status": "operational",
            "timestamp": datetime.now().isoformat(),
            "config": cograd.config.as_dict()
        }
    except Exception as e:
        logger.error(f"Health check failed: {e}")
        return JSONResponse(
            status_code=503,
            content={
                "status": "error",
                "message": str(e),
                "timestamp": datetime.now().isoformat()
            }
        )


# =============================================================================
# ESTIMATION ENDPOINTS
# =============================================================================

@app.post("/api/fit")
def fit(request: FitRequest):
    """Fit beta_tilde, the baselines and an optional confidence interval."""
    try:
        sample = request.to_sample()
        output = cograd.fit(sample, level=request.level, null_method=request.null_method,
                            seed=request.seed, reps=request.reps)
        return output.model_dump()

    except HTTPException:
        raise
    except CogradError as e:
        _raise_http(e, "fitting sample")
    except Exception as e:
        logger.error(f"Error fitting sample: {e}")
        raise HTTPException(status_code=500, detail=f"Error fitting sample: {str(e)}")


@app.post("/api/fit/upload")
def fit_upload(
    file: UploadFile = File(...),
    level: Optional[float] = Query(None, description="Target confidence level"),
    exact: bool = Query(True, description="Parse values as exact decimals")
):
    """Fit a CSV upload with header x,y."""
    try:
        content = file.file.read()
        sample = read_sample_csv(io.BytesIO(content), exact=exact)
        return cograd.fit(sample, level=level).model_dump()

    except HTTPException:
        raise
    except CogradError as e:
        _raise_http(e, "fitting upload")
    except Exception as e:
        logger.error(f"Error fitting upload {file.filename}: {e}")
        raise HTTPException(status_code=500, detail=f"Error fitting upload: {str(e)}")


@app.post("/api/gtrace")
def gtrace(request: SampleRequest):
    """Step function records, one per interval."""
    try:
        df = cograd.gtrace(request.to_sample())
        return {"count": len(df), "records": df.to_dict(orient="records")}

    except HTTPException:
        raise
    except CogradError as e:
        _raise_http(e, "building G-trace")
    except Exception as e:
        logger.error(f"Error building G-trace: {e}")
        raise HTTPException(status_code=500, detail=f"Error building G-trace: {str(e)}")


# =============================================================================
# TABLES AND REPORTS
# =============================================================================

@app.get("/api/nulltable/{n}")
def nulltable(n: int):
    """Exact null distribution of G for sample size n."""
    try:
        df = cograd.null_table(n)
        return {"n": n, "count": len(df), "rows": df.to_dict(orient="records")}

    except HTTPException:
        raise
    except CogradError as e:
        _raise_http(e, f"building null table for n={n}")
    except Exception as e:
        logger.error(f"Error building null table for n={n}: {e}")
        raise HTTPException(status_code=500, detail=f"Error building null table: {str(e)}")


@app.get("/api/are/{model}")
def are(model: str, design: str = Query("linear", description="Design sequence")):
    """Asymptotic efficiency of beta_tilde for a built-in error law."""
    try:
        return cograd.are(model, design).model_dump()

    except HTTPException:
        raise
    except CogradError as e:
        _raise_http(e, f"computing ARE for {model}")
    except Exception as e:
        logger.error(f"Error computing ARE for {model}: {e}")
        raise HTTPException(status_code=500, detail=f"Error computing ARE: {str(e)}")


@app.post("/api/simulate")
def simulate(config: SimulationConfig):
    """Run a seeded Monte Carlo study."""
    try:
        return cograd.simulate(config).model_dump()

    except HTTPException:
        raise
    except CogradError as e:
        _raise_http(e, "running simulation")
    except Exception as e:
        logger.error(f"Error running simulation: {e}")
        raise HTTPException(status_code=500, detail=f"Error running simulation: {str(e)}")
