#!/usr/bin/env python3
"""Throughput and outage against relay count at fixed load (lam=0.8, eps=0.1),
theory next to simulation.  Writes rara_vs_relays.csv."""

import sys

from rara.cli import main

sys.exit(main([
    "compare",
    "--lambda", "0.8",
    "--m", "1:30:1",
    "--epsilon", "0.1",
    "--sessions", "1000000",
    "--seed", "1",
    "--out", "rara_vs_relays.csv",
]))
