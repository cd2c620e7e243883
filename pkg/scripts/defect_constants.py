"""One-window defect constants of the Lie and random schedules as the cell size grows."""
import argparse

from fskmc.lattice import Lattice
from fskmc.models import ArrheniusModel, ArrheniusParams
from fskmc.verification import defect_constants


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=12)
    ap.add_argument("--q", type=int, nargs="+", default=[2, 3, 6])
    ap.add_argument("--dt", type=float, default=0.05)
    args = ap.parse_args()

    lat = Lattice((args.size,))
    model = ArrheniusModel(ArrheniusParams(1.0, 1.0, 1.0, 1.0, 0.0))
    for q in args.q:
        if args.size % q or (args.size // q) % 2:
            print(f"q={q}: skipped (needs an even number of cells)")
            continue
        d = defect_constants(model, lat, q, args.dt)
        print(f"q={q}: C_Lie {d.lie:.5f}  C_random {d.random:.5f}  C_random/C_Lie {d.ratio:.3f}")


if __name__ == "__main__":
    main()
