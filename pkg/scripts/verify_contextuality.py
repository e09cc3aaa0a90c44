#!/usr/bin/env python3
"""Magic-square contextuality verification (exact symbolic + float alphas)."""

import sys

from crnn_sim.cli import main

if __name__ == "__main__":
    sys.exit(main(["verify-contextuality", "--human", *sys.argv[1:]]))
