"""Sampled delay scan of the (-,+) dip, fitted visibility over several seeds."""

import argparse

import numpy as np

from entconc import cli
from entconc.config import parse_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma0", type=float, default=0.83)
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args()

    cfg = parse_config(f"command = delay-scan\noverlap_gamma = {args.gamma0!r}\n")
    vis = []
    for seed in range(args.seeds):
        res = dict(cli.run("delay-scan", cfg.replace(seed=seed)).results)
        vis.append(res["dip_visibility"])
        print(f"seed {seed:3d}  V = {res['dip_visibility']:.4f} +- {res['dip_visibility_err']:.4f}")
    vis = np.array(vis)
    print(f"mean V = {vis.mean():.4f}, spread {vis.std(ddof=1):.4f}, target {args.gamma0}")


if __name__ == "__main__":
    main()
