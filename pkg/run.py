#!/usr/bin/env python3
"""
Entry script for the robust MCT command line.

    python run.py dunnett --input clin.csv --response CreatKinase
    python run.py sim --runs 1000 --rows h0-normal
"""

import sys

from robust_mct.cli.commands import main

if __name__ == "__main__":
    sys.exit(main())
