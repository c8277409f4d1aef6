"""Rejection rates of the bootstrap tests on log-normal samples.

    python3 scripts/null_calibration.py --trials 400 --n 300 --replicates 2000

With ``--source`` the tested sample is the ``--n``-point quantile subsample
of ``--source`` draws, and replicates repeat that reduction.
"""
import argparse

import numpy as np

from globalbias import BootstrapConfig, LogNormalParams, Method, gof_test, lognormal_sample, quantile_subsample


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=400)
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--source", type=int, default=None, help="draws per trial before subsampling")
    ap.add_argument("--replicates", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--mode", default="bootstrap", choices=["bootstrap", "asymptotic"])
    args = ap.parse_args()

    p = LogNormalParams(0.5, 1.1)
    pvals = {m: [] for m in Method}
    for t in range(args.trials):
        x = lognormal_sample(p, args.source or args.n, args.seed * 1_000_000 + t)
        if args.source:
            x = quantile_subsample(x, args.n)
        for i, m in enumerate(Method):
            boot = BootstrapConfig(args.replicates, 3 * t + i)
            pvals[m].append(gof_test(x, m, boot, mode=args.mode, source_size=args.source).p_value)

    band = 3 * np.sqrt(0.05 * 0.95 / args.trials)
    print(f"trials={args.trials} n={args.n} source={args.source} mode={args.mode}")
    print(f"5% band: [{0.05 - band:.4f}, {0.05 + band:.4f}]")
    for m, ps in pvals.items():
        ps = np.asarray(ps)
        print(f"{m.value:5s} reject@1% {np.mean(ps < 0.01):.4f}  reject@5% {np.mean(ps < 0.05):.4f}  "
              f"reject@10% {np.mean(ps < 0.10):.4f}  median p {np.median(ps):.3f}")


if __name__ == "__main__":
    main()
