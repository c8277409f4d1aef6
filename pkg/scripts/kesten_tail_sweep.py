"""Hill estimates of the Kesten stationary tail against -2m/v.

    python3 scripts/kesten_tail_sweep.py --exponents 0.8 1 2 3 4 --variances 0.1 0.5 1 1.5

Prints the Hill index, its standard error and the z-score for each
(exponent, variance) pair; m is set to -s v / 2.
"""
import argparse
import time

from globalbias import ConstantNoise, LogNormalGrowth, ProcessConfig, hill_tail_index, kesten_simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--exponents", type=float, nargs="+", default=[0.8, 1.0, 2.0, 3.0, 4.0])
    ap.add_argument("--variances", type=float, nargs="+", default=[0.1, 1.0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--paths", type=int, default=50_000)
    ap.add_argument("--seeds", type=int, nargs="+", default=[100])
    args = ap.parse_args()

    print("s*    v      m        seed  hill     stderr   z       sec")
    for s in args.exponents:
        for v in args.variances:
            m = -s * v / 2
            for seed in args.seeds:
                t0 = time.perf_counter()
                cfg = ProcessConfig(args.steps, args.paths, LogNormalGrowth(m, v), epsilon=ConstantNoise(1.0), seed=seed)
                est = hill_tail_index(kesten_simulate(cfg))
                z = (est.index - s) / est.stderr
                print(f"{s:<5} {v:<6} {m:<8.4f} {seed:<5} {est.index:<8.4f} {est.stderr:<8.4f} {z:+6.2f}  "
                      f"{time.perf_counter() - t0:5.1f}")


if __name__ == "__main__":
    main()
