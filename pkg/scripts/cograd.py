#!/usr/bin/env python3
"""
Cograd command line launcher
Usage: python scripts/cograd.py fit data.csv --level 0.92
"""

import sys
from pathlib import Path

# Add src to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root / "src"))

from cli.cograd_cli import main

if __name__ == "__main__":
    sys.exit(main())
