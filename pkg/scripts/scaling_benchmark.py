"""Wall time of serial and partitioned runs across lattice sizes (same as ``fskmc benchmark``)."""
import sys

from fskmc.cli import main

if __name__ == "__main__":
    sys.exit(main(["benchmark", *sys.argv[1:]]))
