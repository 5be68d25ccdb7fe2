"""Train the default cascade on synthetic phantoms, shared and unshared.

    python scripts/desk_training.py --epochs 6 --out runs/desk.json
"""

import argparse
import json
import logging
from dataclasses import asdict

from aliasnet.desk import DeskSetup, desk_data, run_desk


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epochs", type=int, default=DeskSetup.epochs)
    ap.add_argument("--lr", type=float, default=DeskSetup.learning_rate)
    ap.add_argument("--features", type=int, default=DeskSetup.features_2d)
    ap.add_argument("--seed", type=int, default=DeskSetup.seed)
    ap.add_argument("--sharing", choices=["shared", "unshared", "both"], default="both")
    ap.add_argument("--out")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    setup = DeskSetup(epochs=args.epochs, learning_rate=args.lr, features_2d=args.features, seed=args.seed)
    data = desk_data(setup)
    modes = ["shared", "unshared"] if args.sharing == "both" else [args.sharing]
    rows = []
    for mode in modes:
        res = run_desk(mode, setup, data)
        print(f"{mode:9s} zero-fill {res.zero_fill_psnr:6.2f} dB  test {res.test_psnr:6.2f} dB  "
              f"gain {res.gain:+.2f} dB  best epoch {res.best_epoch}  {res.seconds:.0f} s")
        rows.append({**asdict(res), "gain": res.gain})
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"setup": asdict(setup), "runs": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
