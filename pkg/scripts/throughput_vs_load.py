#!/usr/bin/env python3
"""Throughput and outage against traffic intensity at M=10, eps=0.1 (the
throughput peaks near lam=0.7).  Writes rara_vs_load.csv."""

import sys

from rara.cli import main

sys.exit(main([
    "compare",
    "--lambda", "0.1:1.5:0.1",
    "--m", "10",
    "--epsilon", "0.1",
    "--sessions", "1000000",
    "--seed", "2",
    "--out", "rara_vs_load.csv",
]))
