import heapq
import random

import numpy as np
import pytest

from gir import _pykernels
from gir._backend import BACKEND, kernels
from gir.models import MODEL_CODES, MODEL_IDS, ModelParams

compiled_only = pytest.mark.skipif(BACKEND != "compiled", reason="extension not built")


def _random_postings(rng, ndocs, nterms):
    docids, tfs, offsets = [], [], [0]
    for _ in range(nterms):
        ids = sorted(rng.sample(range(ndocs), rng.randint(1, ndocs)))
        docids += ids
        tfs += [rng.randint(1, 5) for _ in ids]
        offsets.append(len(docids))
    return (np.array(docids, dtype=np.int32), np.array(tfs, dtype=np.int32),
            np.array(offsets, dtype=np.int64))


@pytest.mark.parametrize("mod", [_pykernels, kernels], ids=["python", BACKEND])
def test_varint_round_trip(mod):
    rng = random.Random(0)
    d, t, off = _random_postings(rng, 3000, 40)
    t[5] = 2**31 - 1
    blob = mod.encode_postings(d, t, off)
    d2, t2 = mod.decode_postings(blob, off)
    assert np.array_equal(d, d2) and np.array_equal(t, t2)


@compiled_only
def test_varint_bytes_identical():
    rng = random.Random(1)
    d, t, off = _random_postings(rng, 5000, 60)
    assert _pykernels.encode_postings(d, t, off) == kernels.encode_postings(d, t, off)


@pytest.mark.parametrize("mod", [_pykernels, kernels], ids=["python", BACKEND])
def test_decode_rejects_garbage(mod):
    off = np.array([0, 3], dtype=np.int64)
    d = np.array([2, 5, 400], dtype=np.int32)
    t = np.array([1, 300, 2], dtype=np.int32)
    blob = mod.encode_postings(d, t, off)
    with pytest.raises(ValueError):
        mod.decode_postings(blob[:-1], off)
    with pytest.raises(ValueError):
        mod.decode_postings(blob + b"\x00", off)
    with pytest.raises(ValueError):
        mod.decode_postings(b"\xff" * 20, off)


def _daat_reference(model, params, d, t, off, qtfs, dfs, cfs, lengths, rank, N, TC, avg_l, k):
    scores = {}
    for j in range(len(off) - 1):
        for i in range(off[j], off[j + 1]):
            doc = int(d[i])
            s = _pykernels.score_array(model, params, np.array([float(t[i])]), np.array([float(lengths[doc])]),
                                       qtfs[j], avg_l, N, TC, dfs[j], cfs[j])[0]
            scores[doc] = scores.get(doc, 0.0) + s
    return heapq.nlargest(k, scores.items(), key=lambda x: (x[1], rank[x[0]]))


@pytest.mark.parametrize("model", MODEL_IDS)
@pytest.mark.parametrize("mod", [_pykernels, kernels], ids=["python", BACKEND])
def test_daat_topk_matches_reference(mod, model):
    rng = random.Random(MODEL_CODES[model])
    ndocs = 300
    d, t, off = _random_postings(rng, ndocs, 4)
    lengths = np.zeros(ndocs, dtype=np.int32)
    np.add.at(lengths, d, t)
    lengths += 3
    TC = float(lengths.sum())
    dfs = np.diff(off).astype(float)
    cfs = np.array([t[off[j]:off[j + 1]].sum() for j in range(4)], dtype=float)
    rank = np.array(rng.sample(range(ndocs), ndocs), dtype=np.int32)
    qtfs = np.array([1.0, 2.0, 1.0, 3.0])
    args = (MODEL_CODES[model], ModelParams().as_tuple(), d, t, off[:-1].copy(), off[1:].copy(),
            qtfs, dfs, cfs, lengths, rank, float(ndocs), TC, TC / ndocs)
    for k in (1, 10, 1000):
        docs, scores = mod.daat_topk(*args, k)
        got = sorted(zip(docs.tolist(), scores.tolist()), key=lambda x: (x[1], rank[x[0]]), reverse=True)
        want = _daat_reference(MODEL_CODES[model], ModelParams().as_tuple(), d, t, off, qtfs, dfs, cfs,
                               lengths, rank, float(ndocs), TC, TC / ndocs, k)
        assert got == want


@compiled_only
def test_score_array_vectorised_matches_python():
    rng = np.random.default_rng(0)
    tf = rng.integers(1, 50, 500).astype(float)
    l = tf + rng.integers(0, 500, 500)
    for model in MODEL_IDS:
        a = _pykernels.score_array(MODEL_CODES[model], ModelParams().as_tuple(), tf, l, 2.0, 120.0, 1e5, 1e7, 300.0, 900.0)
        b = kernels.score_array(MODEL_CODES[model], ModelParams().as_tuple(), tf, l, 2.0, 120.0, 1e5, 1e7, 300.0, 900.0)
        assert np.array_equal(a, b)


def test_model_order_shared():
    assert tuple(kernels.MODEL_ORDER) == tuple(MODEL_IDS) == tuple(_pykernels.MODEL_ORDER)
