#!/usr/bin/env python3
"""Smoke test for the ssls Python extension.

Build the module first, then run this script from the repository root:

    cargo build --release -p ssls-py
    python3 python/smoke_test.py
"""

import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load_module():
    for profile in ("release", "debug"):
        so = os.path.join(ROOT, "target", profile, "libssls.so")
        if os.path.exists(so):
            tmp = tempfile.mkdtemp(prefix="ssls-py-")
            shutil.copy(so, os.path.join(tmp, "ssls.so"))
            sys.path.insert(0, tmp)
            import ssls

            return ssls
    sys.exit("build the extension first: cargo build -p ssls-py")


def approx_equal(a, b, tol=1e-6):
    return abs(a - b) <= tol


def main():
    ssls = load_module()
    fixture = os.path.join(ROOT, "crates", "ssls-core", "fixtures", "toy.ssls")
    ctx = ssls.load_fixture(fixture)

    assert len(ctx.candidates) == 10, ctx.candidates
    assert len(ctx.friends) == 7
    assert approx_equal(ctx.max_d, 15.0)

    scores = {locid: (s_sc, s_sp, r) for locid, s_sc, s_sp, r in ctx.scores(0.5)}
    assert approx_equal(scores[6][0], 3 / 7, 1e-9)
    assert approx_equal(scores[6][1], 0.699248, 1e-5)
    assert approx_equal(scores[6][2], 0.563910, 1e-5)

    assert approx_equal(ctx.pair_diversity(6, 2, 0.5), 0.5 * 0.8 + 0.5 * 4 / 15, 1e-9)
    assert approx_equal(ctx.set_score([7, 5], 0.5, 0.5), 1.450833, 1e-5)

    exact = ctx.query(k=2, alpha=0.5, omega=0.5, algo="exact")
    assert exact["members"] == [5, 7], exact
    assert approx_equal(exact["total"], 1.450833, 1e-5)
    assert exact["telemetry"]["pruned_property2"] > 0

    for algo in ("exactplus", "fast", "brute", "approx"):
        res = ctx.query(k=2, algo=algo)
        assert res["members"] == [5, 7], (algo, res)

    gmc = ctx.query(k=2, algo="gmc")
    assert gmc["total"] <= exact["total"] + 1e-12

    assert ssls.Context.precision([5, 7], [5, 7]) == 1.0
    se, degenerate = ctx.social_entropy([5, 7])
    assert approx_equal(se, 1.0, 1e-12) and not degenerate
    assert ctx.social_coverage(ctx.candidates, 0.0) == 100.0
    assert ctx.mmd(ctx.candidates, "spatial", 0.5) == 0.0

    print("ssls python smoke test: ok")


if __name__ == "__main__":
    main()
