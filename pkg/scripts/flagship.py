"""The benchmark stretch: tilted flat disc into Ball(1), stretched out to Ball(2).

Writes report.json, curve.json and boundary.csv (trimmed boundary parameters
and images) to the output directory and prints the conclusion flags.
"""
import argparse
import json
import time
from pathlib import Path

import numpy as np

from tangentnet.convex import Ball
from tangentnet.curve import AnalyticMap
from tangentnet.net import TangentNet
from tangentnet.stretch import report_json, run_lemma_main


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/flagship")
    ap.add_argument("--tilt", type=float, default=0.2)
    ap.add_argument("--eps", type=float, default=0.9, help="net radius")
    ap.add_argument("--delta", type=float, default=0.05)
    ap.add_argument("--skeleton", type=int, default=6)
    args = ap.parse_args()

    b = args.tilt
    X = AnalyticMap.polynomial([0, np.sqrt(1 - b * b)], [b])
    th = 2 * np.pi * np.arange(args.skeleton) / args.skeleton
    net = TangentNet(Ball(1.0), X(np.exp(1j * th)), args.eps)
    t0 = time.perf_counter()
    region, Y, rep = run_lemma_main(X, Ball(1.0), Ball(2.0), net, args.delta)
    print(f"stretch finished in {time.perf_counter() - t0:.1f} s")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_json(rep))
    (out / "curve.json").write_text(json.dumps(Y.to_dict(), sort_keys=True, indent=1))
    bnd = region.boundary[np.argsort(np.angle(region.boundary), kind="stable")]
    Y.write_csv(out / "boundary.csv", bnd)
    for tag in "abcde":
        print(tag, "ok" if rep[tag]["ok"] else "FAILED")


if __name__ == "__main__":
    main()
