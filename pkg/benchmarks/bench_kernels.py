"""Benchmark: compiled extension kernels versus the pure-Python fallback.

Times the hot kernel entry points on representative workloads (the same
call mixes the admission controller and the laws produce), then times one
short closed-loop simulation under each backend.  Run from a source
checkout::

    python3 benchmarks/bench_kernels.py [--repeat N]

The pure backend is exercised in a subprocess with ``RIGHTOFWAY_PURE=1``
so both backends are measured in a fresh interpreter with identical code
paths.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def _bench_kernels(repeat: int) -> dict:
    from rightofway import kernels as K

    # One representative crossing section: perpendicular paths, D = 2.
    kind = K.ELLIPSE
    params = (0.0, 1.0, 4.0, 2.0, 0.0, -2.0)
    out = {"backend": K.BACKEND}

    def timeit(name, fn, n):
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn(n)
            best = min(best, time.perf_counter() - t0)
        out[name] = {"calls": n, "best_s": best,
                     "ns_per_call": 1e9 * best / n}

    def run_threshold(n):
        f = K.threshold
        for i in range(n):
            f(kind, *params, -3.0 + 6.0 * i / n, 0.0)

    def run_member(n):
        f = K.completion_member
        for i in range(n):
            x = -3.0 + 6.0 * i / n
            f(kind, *params, x, 0.5 * x, 0.0)

    def run_slot_flow(n):
        f = K.slot_flow
        x, v = 0.0, 0.0
        for _ in range(n):
            x, v = f(x, v, 0.05, 1.0, 0.0, 0.0)

    def run_pair_worst(n):
        f = K.pair_worst_clear
        for i in range(n):
            a = -8.0 + 4.0 * (i % 16) / 16.0
            f(kind, *params, True,
              a, 1.0, 1.0, 0.05, -0.05, 0.0, 0.0,
              -4.0, 1.0, 1.0, -0.05, 0.0, 0.0, 45)

    timeit("threshold", run_threshold, 200000)
    timeit("completion_member", run_member, 200000)
    timeit("slot_flow", run_slot_flow, 200000)
    timeit("pair_worst_clear", run_pair_worst, 20000)
    return out


def _bench_sim() -> dict:
    from rightofway import kernels as K
    from rightofway.sim import load_scenario, run

    here = os.path.dirname(os.path.abspath(__file__))
    cfg = os.path.join(here, os.pardir, "src", "rightofway", "scenarios",
                       "eight_path.cfg")
    scenario = load_scenario(cfg)
    t0 = time.perf_counter()
    metrics = run(scenario, slots=400)
    dt = time.perf_counter() - t0
    return {"backend": K.BACKEND, "slots": 400, "seconds": dt,
            "digest": metrics.digest}


def _run_child(pure: bool, what: str, repeat: int) -> dict:
    env = dict(os.environ, RIGHTOFWAY_PURE="1" if pure else "0")
    cmd = [sys.executable, os.path.abspath(__file__),
           "--child", what, "--repeat", str(repeat)]
    res = subprocess.run(cmd, env=env, capture_output=True, text=True,
                         check=True)
    return json.loads(res.stdout)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3,
                    help="timing repetitions (best of)")
    ap.add_argument("--child", choices=("kernels", "sim"), default=None,
                    help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.child == "kernels":
        print(json.dumps(_bench_kernels(args.repeat)))
        return 0
    if args.child == "sim":
        print(json.dumps(_bench_sim()))
        return 0

    results = {}
    for pure in (False, True):
        results[pure] = _run_child(pure, "kernels", args.repeat)
    fast, slow = results[False], results[True]
    if fast["backend"] == slow["backend"]:
        print("NOTE: compiled extension unavailable; both runs used the "
              "pure backend")
    print("%-22s %14s %14s %8s" % ("kernel", fast["backend"] + " ns/call",
                                   slow["backend"] + " ns/call", "speedup"))
    for name in ("threshold", "completion_member", "slot_flow",
                 "pair_worst_clear"):
        a = fast[name]["ns_per_call"]
        b = slow[name]["ns_per_call"]
        print("%-22s %14.0f %14.0f %7.1fx" % (name, a, b, b / max(a, 1e-9)))

    sims = {}
    for pure in (False, True):
        sims[pure] = _run_child(pure, "sim", args.repeat)
    a, b = sims[False], sims[True]
    print("\nclosed-loop simulation (eight paths, 400 slots):")
    for r in (a, b):
        print("  %-9s %7.2fs  digest=%s" % (r["backend"], r["seconds"],
                                            r["digest"]))
    if a["digest"] != b["digest"]:
        print("BACKEND MISMATCH: digests differ", file=sys.stderr)
        return 1
    print("  digests identical across backends")
    return 0


if __name__ == "__main__":
    sys.exit(main())
