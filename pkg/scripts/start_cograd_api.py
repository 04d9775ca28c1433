#!/usr/bin/env python3
"""
Start script for the Cograd API
This script starts the Cograd API server.
"""

import sys
import logging
import uvicorn
from pathlib import Path

# Add src and config to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root / "src"))
sys.path.insert(0, str(project_root / "config"))

from runtime_config import load_runtime_config

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

def main():
    """Start the Cograd API server."""
    config = load_runtime_config()
    logging.getLogger().setLevel(config.log_level)

    print("=" * 70)
    print("🚀 STARTING COGRAD API SERVER")
    print("=" * 70)

    try:
        # Import the FastAPI app
        from api.cograd_api import app

        print("\n📋 Cograd API Server Configuration:")
        print(f"   • Host: {config.api_host}")
        print(f"   • Port: {config.api_port}")
        print(f"   • Documentation: http://localhost:{config.api_port}/docs")
        print(f"   • Health Check: http://localhost:{config.api_port}/api/health")
        print(f"   • Exact null ceiling: n <= {config.null_ceiling}")

        print("\n🌐 Available Endpoints:")
        print("   • POST /api/fit - Estimate the slope (JSON body)")
        print("   • POST /api/fit/upload - Estimate the slope (CSV upload)")
        print("   • POST /api/gtrace - Step function of G over b")
        print("   • GET  /api/nulltable/{n} - Exact null distribution")
        print("   • GET  /api/are/{model} - Asymptotic efficiency report")
        print("   • POST /api/simulate - Seeded Monte Carlo study")

        print("\n🚀 Starting server...")
        print("   Press Ctrl+C to stop the server")
        print("-" * 70)

        uvicorn.run(
            app,
            host=config.api_host,
            port=config.api_port,
            log_level=config.log_level.lower()
        )

    except KeyboardInterrupt:
        print("\n\n👋 Server stopped by user")
    except Exception as e:
        logger.error(f"Failed to start server: {e}")
        print(f"\n❌ Failed to start server: {e}")
        sys.exit(1)

if __name__ == "__main__":
    main()
