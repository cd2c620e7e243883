"""Workload re-balancing on a 1D coverage gradient (same as ``fskmc balance-demo``)."""
import sys

from fskmc.cli import main

if __name__ == "__main__":
    sys.exit(main(["balance-demo", *sys.argv[1:]]))
