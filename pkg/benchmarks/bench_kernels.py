"""Compare the compiled and pure-Python kernels on the hot paths.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

from voltstab import kernels
from voltstab.loadmodel import preset
from voltstab.network import NetworkParams, pack, state_from_voltage


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    net, load = NetworkParams(1.0, 0.4), preset("aircon")
    lp = pack(net, load)
    z_eq = state_from_voltage(0.9, 1.0, 1.0, net, load).to_vector()
    z_off = state_from_voltage(0.95, 1.0, 1.0, net, load).to_vector()

    def newton_batch(k):
        for _ in range(1000):
            k.newton(z_off, 1.0, 1.0, lp)

    def simulate(k):
        k.rk4_oltc(z_eq, 1.01, 1.0, 10.0, 0.9, 0.1, 5000, lp)

    return [("1000 Newton solves", newton_batch), ("RK4 run, 5000 steps", simulate)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    names = kernels.available()
    if len(names) < 2:
        print("compiled kernels not built; only the Python backend is available")
    print(f"{'case':24s}" + "".join(f"{n:>12s}" for n in names) + ("   speedup" if len(names) > 1 else ""))
    for label, fn in cases():
        t = {n: best_of(lambda: fn(kernels.get(n)), args.repeat) for n in names}
        row = f"{label:24s}" + "".join(f"{t[n]:11.4f}s" for n in names)
        if len(names) > 1:
            row += f"   {t['python'] / t['compiled']:7.1f}x"
        print(row)


if __name__ == "__main__":
    main()
