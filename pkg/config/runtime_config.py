#!/usr/bin/env python3
"""
Cograd Runtime Configuration
Environment overrides for the CLI and the HTTP service
"""

import os
import logging
from typing import Dict, Optional

from cograd_config import get_null_rule, get_ranking_rule, get_simulation_rule

logger = logging.getLogger(__name__)

class RuntimeConfig:
    """Runtime configuration read from COGRAD_* environment variables"""

    def __init__(self):
        self.null_ceiling = self._int_env('COGRAD_NULL_CEILING', get_null_rule('enumeration_ceiling'))
        self.step_max_n = self._int_env('COGRAD_STEP_MAX_N', get_ranking_rule('step_function_max_n'))
        self.workers = self._int_env('COGRAD_WORKERS', get_simulation_rule('default_workers'))
        self.log_level = os.getenv('COGRAD_LOG_LEVEL', 'INFO').upper()
        self.api_host = os.getenv('COGRAD_API_HOST', '0.0.0.0')
        self.api_port = self._int_env('COGRAD_API_PORT', 8010)

    @staticmethod
    def _int_env(name: str, default: int) -> int:
        """Read a positive integer, falling back to the default on bad input"""
        raw: Optional[str] = os.getenv(name)
        if raw is None or raw.strip() == '':
            return default
        try:
            value = int(raw)
        except ValueError:
            logger.warning(f"Ignoring {name}={raw!r}: not an integer, using {default}")
            return default
        if value < 1:
            logger.warning(f"Ignoring {name}={raw!r}: must be positive, using {default}")
            return default
        return value

    def as_dict(self) -> Dict[str, object]:
        """Snapshot for health endpoints and debug logging"""
        return {
            'null_ceiling': self.null_ceiling,
            'step_max_n': self.step_max_n,
            'workers': self.workers,
            'log_level': self.log_level,
            'api_host': self.api_host,
            'api_port': self.api_port,
        }

def load_runtime_config() -> RuntimeConfig:
    """Fresh config each call so tests can patch the environment"""
    return RuntimeConfig()
