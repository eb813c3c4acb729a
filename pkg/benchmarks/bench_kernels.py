"""Compare the compiled kernels with the pure-Python fallback.

Times three hot paths on a synthetic Zipf collection: vectorised term
scoring, document-at-a-time top-k retrieval over whole topic sets, and
postings encode/decode.  Both backends must produce identical output; the
script checks that before reporting speedups.

    python3 benchmarks/bench_kernels.py --docs 10000 --repeat 3
"""

import argparse
import sys
import time

import numpy as np

from gir import _pykernels
from gir import index as index_mod
from gir import search as search_mod
from gir.index import build_index
from gir.models import MODEL_CODES, MODEL_IDS, ModelParams
from gir.search import run_topics
from gir.synthetic import generate


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def use(kern):
    search_mod.kernels = kern
    index_mod.kernels = kern


def bench_score_array(kern, n, repeat):
    rng = np.random.default_rng(0)
    tf = rng.integers(1, 40, n).astype(float)
    l = tf + rng.integers(0, 400, n)
    params = ModelParams().as_tuple()

    def run():
        return [kern.score_array(MODEL_CODES[m], params, tf, l, 1.0, 120.0, 1e5, 1e7, 500.0, 2000.0)
                for m in MODEL_IDS]

    return best_of(run, repeat)


def bench_retrieval(kern, idx, topics, models, repeat):
    use(kern)

    def run():
        return [run_topics(idx, m, None, topics, "TD").to_bytes() for m in models]

    return best_of(run, repeat)


def bench_codec(kern, idx, repeat):
    def run():
        blob = kern.encode_postings(idx.post_docids, idx.post_tfs, idx.offsets)
        d, t = kern.decode_postings(blob, idx.offsets)
        return blob, d.tobytes(), t.tobytes()

    return best_of(run, repeat)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--docs", type=int, default=10_000)
    ap.add_argument("--topics", type=int, default=25)
    ap.add_argument("--scores", type=int, default=100_000, help="tf values per score_array call")
    ap.add_argument("--models", default="BM25,InL2,DPH,Hiemstra_LM",
                    help="models for the retrieval benchmark, or 'all'")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    try:
        from gir import _kernels
    except ImportError:
        print("compiled extension not built; run: pip install -e . --no-build-isolation", file=sys.stderr)
        return 1

    models = list(MODEL_IDS) if args.models == "all" else args.models.split(",")
    coll = generate(num_docs=args.docs, num_topics=args.topics, seed=1)
    idx = build_index(coll.docs)
    print(f"collection: N={idx.stats.num_docs} TC={idx.stats.total_tokens} "
          f"postings={len(idx.post_docids)}; best of {args.repeat}")

    rows = [
        (f"score_array x17 ({args.scores} tf)", lambda k: bench_score_array(k, args.scores, args.repeat)),
        (f"retrieval {len(models)} models x {args.topics} topics",
         lambda k: bench_retrieval(k, idx, coll.topics, models, args.repeat)),
        ("postings encode+decode", lambda k: bench_codec(k, idx, args.repeat)),
    ]
    print(f"{'benchmark':<40}{'python s':>11}{'compiled s':>12}{'speedup':>9}")
    ok = True
    for name, fn in rows:
        tp, out_p = fn(_pykernels)
        tc, out_c = fn(_kernels)
        same = all(np.array_equal(a, b) if isinstance(a, np.ndarray) else a == b for a, b in zip(out_p, out_c))
        ok &= same
        print(f"{name:<40}{tp:>11.4f}{tc:>12.4f}{tp / tc:>8.1f}x" + ("" if same else "  OUTPUT DIFFERS"))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
