#!/usr/bin/env python3
"""Tail profile and rank growth of the block projection across window sizes.

The tail supremum decays like 1/(block index) while the count of singular
values above 1/2 keeps growing with the window: the operator is ghost-like
but nowhere near compact.
"""

import argparse

import numpy as np

from matfinite.constructions import BlockLayout, make_block_projection
from matfinite.ghost import tail_profile
from matfinite.report import dump_json, emit_plot


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--blocks", type=int, default=32)
    ap.add_argument("--out", default="ghost_tail.json")
    ap.add_argument("--svg", default="ghost_tail.svg")
    args = ap.parse_args()

    layout = BlockLayout.triangular(args.blocks)
    p = make_block_projection(layout).to_sparse()
    tp = tail_profile(p)

    counts = []
    for m in range(1, args.blocks + 1, max(1, args.blocks // 8)):
        sub = make_block_projection(BlockLayout.triangular(m)).to_sparse()
        svals = np.abs(np.linalg.eigvalsh(sub.to_dense().real))
        counts.append({"blocks": m, "window": sub.window,
                       "singular_above_half": int(np.sum(svals > 0.5))})

    dump_json(
        {
            "schema": 1,
            "command": "ghost-tail-scan",
            "window": p.window,
            "tail_profile": list(tp.values),
            "rank_growth": counts,
        },
        args.out,
    )
    emit_plot(
        {"tail sup": [(t + 1, v) for t, v in enumerate(tp.values)]},
        args.svg,
        title=f"tail profile, {args.blocks} blocks",
        xlabel="t",
        ylabel="sup |entries| beyond t",
    )
    print(f"window {p.window}: tail ends at {tp.values[-1]:.4f}; "
          f"rank proxy grows {counts[0]['singular_above_half']} -> "
          f"{counts[-1]['singular_above_half']}")
    print(f"wrote {args.out} and {args.svg}")


if __name__ == "__main__":
    main()
