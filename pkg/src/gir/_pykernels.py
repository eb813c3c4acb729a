"""Pure-Python implementations of the compiled kernels in ``_kernels.pyx``.

Same signatures and results; used when the extension is not built or when
``GIR_PURE_PYTHON=1`` is set.
"""

from __future__ import annotations

import heapq

import numpy as np

from .models import MODEL_IDS, ModelParams, SCORERS

BACKEND = "python"
MODEL_ORDER = MODEL_IDS


def _params(params):
    c, k1, b, k3, lam = params
    return ModelParams(c=c, k1=k1, b=b, k3=k3, lambda_h=lam)


def score_array(model, params, tf, l, qtf, avg_l, N, TC, df, F):
    scorer = SCORERS[MODEL_IDS[model]]
    p = _params(params)
    out = np.empty(len(tf), dtype=np.float64)
    for i in range(len(tf)):
        out[i] = scorer(float(tf[i]), qtf, float(l[i]), avg_l, N, TC, df, F, p)
    return out


def daat_topk(model, params, docids, tfs, starts, ends, qtfs, dfs, cfs,
              doc_lengths, doc_rank, N, TC, avg_l, k):
    scorer = SCORERS[MODEL_IDS[model]]
    p = _params(params)
    docids = docids.tolist() if hasattr(docids, "tolist") else list(docids)
    tfs = tfs.tolist() if hasattr(tfs, "tolist") else list(tfs)
    nt = len(starts)
    cur = [int(s) for s in starts]
    ends = [int(e) for e in ends]
    qtfs = [float(q) for q in qtfs]
    dfs = [float(x) for x in dfs]
    cfs = [float(x) for x in cfs]
    heap: list[tuple[float, int, int]] = []
    while True:
        d = -1
        for t in range(nt):
            if cur[t] < ends[t]:
                cand = docids[cur[t]]
                if d < 0 or cand < d:
                    d = cand
        if d < 0:
            break
        s = 0.0
        l = float(doc_lengths[d])
        for t in range(nt):
            i = cur[t]
            if i < ends[t] and docids[i] == d:
                s += scorer(float(tfs[i]), qtfs[t], l, avg_l, N, TC, dfs[t], cfs[t], p)
                cur[t] = i + 1
        entry = (s, int(doc_rank[d]), d)
        if len(heap) < k:
            heapq.heappush(heap, entry)
        elif entry > heap[0]:
            heapq.heapreplace(heap, entry)
    out_docs = np.array([e[2] for e in heap], dtype=np.int32)
    out_scores = np.array([e[0] for e in heap], dtype=np.float64)
    return out_docs, out_scores


def _put_varint(out: bytearray, v: int) -> None:
    while v >= 0x80:
        out.append((v & 0x7F) | 0x80)
        v >>= 7
    out.append(v)


def encode_postings(docids, tfs, offsets):
    out = bytearray()
    docids = np.asarray(docids).tolist()
    tfs = np.asarray(tfs).tolist()
    offsets = np.asarray(offsets).tolist()
    for t in range(len(offsets) - 1):
        prev = 0
        for i in range(offsets[t], offsets[t + 1]):
            _put_varint(out, docids[i] - prev)
            prev = docids[i]
            _put_varint(out, tfs[i])
    return bytes(out)


def decode_postings(data, offsets):
    data = bytes(data)
    offsets = np.asarray(offsets).tolist()
    total = offsets[-1] if offsets else 0
    od = [0] * total
    ot = [0] * total
    n = len(data)
    pos = 0
    for t in range(len(offsets) - 1):
        prev = 0
        for i in range(offsets[t], offsets[t + 1]):
            for which in (0, 1):
                v = 0
                shift = 0
                while True:
                    if pos >= n or shift > 28:
                        raise ValueError("malformed varint postings")
                    byte = data[pos]
                    pos += 1
                    v |= (byte & 0x7F) << shift
                    if byte < 0x80:
                        break
                    shift += 7
                if which == 0:
                    prev += v
                    if prev > 0x7FFFFFFF:
                        raise ValueError("malformed varint postings")
                    od[i] = prev
                else:
                    if v > 0x7FFFFFFF:
                        raise ValueError("malformed varint postings")
                    ot[i] = v
    if pos != n:
        raise ValueError(f"{n - pos} trailing bytes after postings")
    return np.array(od, dtype=np.int32), np.array(ot, dtype=np.int32)
