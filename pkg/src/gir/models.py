"""Term weighting models.

Every model is a pure function of the per-term statistics in
:class:`ModelInputs` and the tuning constants in :class:`ModelParams`.
A document's score for a query is the sum of :func:`score_term` over the
query terms it contains; terms with ``tf == 0`` are never dispatched.

All logarithms are base 2.  The arithmetic here is mirrored operation for
operation by the compiled kernel (``gir._kernels``) so that both backends
produce bit-identical scores; keep the two in sync when editing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Callable, Mapping

from .errors import ContractError, UnknownModelError

LOG2E = math.log2(math.e)
LN2 = math.log(2.0)
TWO_PI = 2.0 * math.pi
# tf/l is clamped to 1 - 1e-9 in the hypergeometric models; applied as a
# lower bound on 1 - tf/l, which is what the formulas consume
MIN_ONE_MINUS_F = 1e-9
STIRLING_MIN = 0.5

log2 = math.log2


def _log2_1p(x):
    return math.log1p(x) / LN2


def _log2_ratio(a, b):
    """log2(a / b), through log1p when a and b are close."""
    r = (a - b) / b
    if -0.5 < r < 0.5:
        return math.log1p(r) / LN2
    return log2(a / b)


@dataclass(frozen=True)
class ModelInputs:
    tf: float
    qtf: float
    l: float
    avg_l: float
    N: float
    TC: float
    df: float
    F: float

    def validate(self) -> None:
        if not self.tf >= 1:
            raise ContractError(f"tf must be >= 1, got {self.tf}")
        if not self.qtf > 0:
            raise ContractError(f"qtf must be > 0, got {self.qtf}")
        if not self.l >= 1:
            raise ContractError(f"document length must be >= 1, got {self.l}")
        if not self.avg_l > 0:
            raise ContractError(f"avg_l must be > 0, got {self.avg_l}")
        if not self.N >= 1:
            raise ContractError(f"N must be >= 1, got {self.N}")
        if not 1 <= self.df <= self.N:
            raise ContractError(f"df must lie in [1, N], got df={self.df} N={self.N}")
        if not self.F >= self.tf:
            raise ContractError(f"F must be >= tf, got F={self.F} tf={self.tf}")
        if not self.TC >= self.F:
            raise ContractError(f"TC must be >= F, got TC={self.TC} F={self.F}")


@dataclass(frozen=True)
class ModelParams:
    """Tunable constants; defaults are the conventional toolkit values."""

    c: float = 1.0
    k1: float = 1.2
    b: float = 0.75
    k3: float = 8.0
    lambda_h: float = 0.15

    def __post_init__(self):
        if not self.c > 0:
            raise ContractError(f"c must be > 0, got {self.c}")
        if not self.k1 > 0:
            raise ContractError(f"k1 must be > 0, got {self.k1}")
        if not 0 <= self.b <= 1:
            raise ContractError(f"b must lie in [0, 1], got {self.b}")
        if not self.k3 >= 0:
            raise ContractError(f"k3 must be >= 0, got {self.k3}")
        if not 0 < self.lambda_h < 1:
            raise ContractError(f"lambda_h must lie in (0, 1), got {self.lambda_h}")

    _ALIASES = {"lambda": "lambda_h", "lambda_H": "lambda_h", "lambda_h": "lambda_h"}

    def with_overrides(self, overrides: Mapping[str, object]) -> "ModelParams":
        """Return a copy with ``{name: value}`` overrides applied.

        Values may be strings (as they arrive from the command line).
        """
        known = {f.name for f in fields(self)}
        changes = {}
        for key, value in overrides.items():
            name = self._ALIASES.get(key, key)
            if name not in known:
                raise ContractError(
                    f"unknown model parameter {key!r}; expected one of {sorted(known)}"
                )
            try:
                changes[name] = float(value)
            except (TypeError, ValueError):
                raise ContractError(f"parameter {key} needs a number, got {value!r}") from None
        return replace(self, **changes)

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.c, self.k1, self.b, self.k3, self.lambda_h)


def norm2(tf: float, l: float, avg_l: float, c: float) -> float:
    """Term frequency normalisation 2: ``tf * log2(1 + c * avg_l / l)``."""
    return tf * _log2_1p(c * avg_l / l)


def _stirling(n, delta):
    """Stirling term f(n, m) = (m + 0.5) log2(n/m) + (n - m) log2(n), m = n - delta.

    Taking the difference ``delta`` directly avoids cancelling the large
    terms when n is big.  m is clamped to >= 0.5.
    """
    m = n - delta
    if m < STIRLING_MIN:
        m = STIRLING_MIN
        delta = n - m
    return (m + 0.5) * _log2_1p(delta / m) + delta * log2(n)


# Each scorer takes floats (tf, qtf, l, avg_l, N, TC, df, F, params).


def _tf_idf(tf, qtf, l, avg_l, N, TC, df, F, p):
    K = p.k1 * ((1.0 - p.b) + p.b * l / avg_l)
    return qtf * (p.k1 * tf / (tf + K)) * _log2_1p(N / df)


def _bm25(tf, qtf, l, avg_l, N, TC, df, F, p):
    K = p.k1 * ((1.0 - p.b) + p.b * l / avg_l)
    qw = (p.k3 + 1.0) * qtf / (p.k3 + qtf)
    return qw * ((p.k1 + 1.0) * tf / (K + tf)) * _log2_ratio(N - df + 0.5, df + 0.5)


def _dfr_bm25(tf, qtf, l, avg_l, N, TC, df, F, p):
    K = p.k1 * ((1.0 - p.b) + p.b * l / avg_l)
    qw = (p.k3 + 1.0) * qtf / (p.k3 + qtf)
    return qw * ((p.k1 + 1.0) * tf / (K + tf)) * _log2_ratio(N + 1.0, df + 0.5)


def _inl2(tf, qtf, l, avg_l, N, TC, df, F, p):
    tfn = norm2(tf, l, avg_l, p.c)
    return qtf * (1.0 / (tfn + 1.0)) * tfn * _log2_ratio(N + 1.0, df + 0.5)


def _ifb2(tf, qtf, l, avg_l, N, TC, df, F, p):
    tfn = norm2(tf, l, avg_l, p.c)
    return qtf * ((F + 1.0) / (df * (tfn + 1.0))) * tfn * _log2_ratio(N + 1.0, F + 0.5)


def _in_expc2(tf, qtf, l, avg_l, N, TC, df, F, p):
    tfn = norm2(tf, l, avg_l, p.c)
    # n_e = N (1 - ((N-1)/N)^F); the idf log2((N+1)/(n_e+0.5)) is taken as
    # log2(1 + (0.5 + N q)/(n_e + 0.5)) with q = ((N-1)/N)^F
    if N <= 1.0:
        q = 0.0
        n_e = N
    else:
        x = F * math.log1p(-1.0 / N)
        q = math.exp(x)
        n_e = N * -math.expm1(x)
    idf = _log2_1p((0.5 + N * q) / (n_e + 0.5))
    return qtf * ((F + 1.0) / (df * (tfn + 1.0))) * tfn * idf


def _bb2(tf, qtf, l, avg_l, N, TC, df, F, p):
    tfn = norm2(tf, l, avg_l, p.c)
    # a single-document collection would give log2(0)
    n1 = N - 1.0
    if n1 < 1.0:
        n1 = 1.0
    gain = (
        -log2(n1)
        - LOG2E
        + _stirling(N + F - 1.0, tfn + 1.0)
        - _stirling(F, tfn)
    )
    return qtf * ((F + 1.0) / (df * (tfn + 1.0))) * gain


def _pl2(tf, qtf, l, avg_l, N, TC, df, F, p):
    tfn = norm2(tf, l, avg_l, p.c)
    lam = F / N
    gain = tfn * log2(tfn / lam) + (lam - tfn) * LOG2E + 0.5 * log2(TWO_PI * tfn)
    return qtf * (1.0 / (tfn + 1.0)) * gain


def _one_minus_f(tf, l):
    g = (l - tf) / l
    return MIN_ONE_MINUS_F if g < MIN_ONE_MINUS_F else g


def _dlh(tf, qtf, l, avg_l, N, TC, df, F, p):
    g = _one_minus_f(tf, l)
    gain = (
        tf * log2((tf * avg_l / l) * (N / F))
        + (l - tf) * log2(g)
        + 0.5 * log2(TWO_PI * tf * g)
    )
    return qtf / (tf + 0.5) * gain


def _dlh13(tf, qtf, l, avg_l, N, TC, df, F, p):
    g = _one_minus_f(tf, l)
    gain = tf * log2((tf * avg_l / l) * (N / F)) + 0.5 * log2(TWO_PI * tf * g)
    return qtf / (tf + 0.5) * gain


def _dph(tf, qtf, l, avg_l, N, TC, df, F, p):
    g = _one_minus_f(tf, l)
    norm = g * g / (tf + 1.0)
    gain = tf * log2((tf * avg_l / l) * (N / F)) + 0.5 * log2(TWO_PI * tf * g)
    return qtf * norm * gain


def _dfree(tf, qtf, l, avg_l, N, TC, df, F, p):
    post = (tf + 1.0) / (l + 1.0)
    ipc = TC / F
    # log2(post / prior), via post/prior - 1 = (l - tf) / (tf (l + 1))
    ratio = _log2_1p((l - tf) / (tf * (l + 1.0)))
    norm = tf * ratio
    # tf*-log2(prior*ipc) + (tf+1)*log2(post*ipc) + 0.5*ratio, with the two
    # large logarithms folded together
    gain = (tf + 0.5) * ratio + log2(post * ipc)
    return qtf * norm * gain


def _dfi0(tf, qtf, l, avg_l, N, TC, df, F, p):
    e = F * l / TC
    if tf <= e:
        return 0.0
    return qtf * _log2_1p((tf - e) / math.sqrt(e))


def _hiemstra_lm(tf, qtf, l, avg_l, N, TC, df, F, p):
    lam = p.lambda_h
    return qtf * _log2_1p((lam * tf * TC) / ((1.0 - lam) * F * l))


def _lgd(tf, qtf, l, avg_l, N, TC, df, F, p):
    tfn = norm2(tf, l, avg_l, p.c)
    lam = df / N
    return qtf * _log2_1p(tfn / lam)


def _js_kls(tf, qtf, l, avg_l, N, TC, df, F, p):
    pd = tf / l
    pc = F / TC
    if pd <= pc:
        return 0.0
    m = (pd + pc) / 2.0
    return qtf * tf * (pd * log2(pd / m) + pc * log2(pc / m))


def _xsqra_m(tf, qtf, l, avg_l, N, TC, df, F, p):
    pd = tf / l
    pc = F / TC
    if pd <= pc:
        return 0.0
    d = pd - pc
    return qtf * l * d * d / pc


Scorer = Callable[..., float]

SCORERS: dict[str, Scorer] = {
    "BB2": _bb2,
    "BM25": _bm25,
    "DFI0": _dfi0,
    "DFR_BM25": _dfr_bm25,
    "DFRee": _dfree,
    "DLH": _dlh,
    "DLH13": _dlh13,
    "DPH": _dph,
    "Hiemstra_LM": _hiemstra_lm,
    "IFB2": _ifb2,
    "In_expC2": _in_expc2,
    "InL2": _inl2,
    "Js_KLs": _js_kls,
    "LGD": _lgd,
    "PL2": _pl2,
    "TF_IDF": _tf_idf,
    "XSqrA_M": _xsqra_m,
}

MODEL_IDS: tuple[str, ...] = tuple(sorted(SCORERS))

# Integer codes used by the compiled kernel.  Order is MODEL_IDS order.
MODEL_CODES: dict[str, int] = {name: i for i, name in enumerate(MODEL_IDS)}

PARAMETER_FREE = frozenset({"DPH", "DLH", "DLH13", "DFRee", "DFI0", "Js_KLs", "XSqrA_M"})


def list_models() -> list[str]:
    return list(MODEL_IDS)


def get_scorer(model: str) -> Scorer:
    try:
        return SCORERS[model]
    except KeyError:
        raise UnknownModelError(
            f"unknown model {model!r}; valid models: {', '.join(MODEL_IDS)}"
        ) from None


def score_term(model: str, inputs: ModelInputs, params: ModelParams | None = None) -> float:
    """Score one query term against one document under ``model``."""
    scorer = get_scorer(model)
    inputs.validate()
    return scorer(
        float(inputs.tf),
        float(inputs.qtf),
        float(inputs.l),
        float(inputs.avg_l),
        float(inputs.N),
        float(inputs.TC),
        float(inputs.df),
        float(inputs.F),
        params or ModelParams(),
    )
