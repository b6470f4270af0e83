#!/usr/bin/env python3
"""
fracwave command-line entry point.

    python main.py solve --alpha 1.5 --lambda 4 --half-period 8 --n 256 --out profile.json
    python main.py spectrum --profile profile.json
    python main.py verify --suite fast
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from src.presentation.cli.main import cli

if __name__ == '__main__':
    cli(prog_name='fracwave')
