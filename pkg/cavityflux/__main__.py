#!/usr/bin/env python3
# cavityflux/__main__.py
"""Entry point when run as a module (python -m cavityflux)."""

import sys

from .main import main

if __name__ == "__main__":
    sys.exit(main())
