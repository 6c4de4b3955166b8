#!/usr/bin/env python3
"""Symbol error rate of the decorrelating detector for every k <= M+1 at a
few relay counts and 20 dB SNR.  Writes rara_detector_ser.csv."""

import sys

from rara.cli import main

sys.exit(main([
    "phy",
    "--m", "1,2,4,8",
    "--snr-db", "20",
    "--sessions", "100000",
    "--seed", "3",
    "--out", "rara_detector_ser.csv",
]))
