#!/usr/bin/env python3
"""Rerun the bundled Motzkin projection table and print pass/fail per row.

Equivalent to `sosproj repro-motzkin`; kept as a standalone script so the
experiment can be driven without installing the console entry point.
"""

import sys

from sosproj.cli import main

if __name__ == "__main__":
    sys.exit(main(["repro-motzkin", *sys.argv[1:]]))
