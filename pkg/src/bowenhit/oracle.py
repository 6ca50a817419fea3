"""Exact hitting and return laws for cylinder targets on shifts.

The symbol process is fed through a :class:`PatternAutomaton` for the
target; killing every transition into an accepting state leaves a
sub-stochastic matrix ``Q`` whose powers give P(tau > t) exactly. On
Markov shifts the chain state also remembers the last symbol. The
doubling map is handled through its coding by Bernoulli(1/2).
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .automaton import PatternAutomaton
from .symbolic import CylinderWord, WordSet, as_word, admissible
from .survival import LambdaEstimate, SurvivalCurve, lambda_estimator
from .systems import SystemDescriptor, SystemKind

MAX_CHAIN_STATES = 100_000


class StateBlowupError(ValueError):
    pass


class BoundViolation(AssertionError):
    pass


def as_wordset(target):
    if isinstance(target, WordSet):
        return target
    w = as_word(target)
    return WordSet([w], N=len(w))


def _symbol_system(sys):
    if sys.kind is SystemKind.DOUBLING:
        return SystemDescriptor.bernoulli((0.5, 0.5))
    return sys


def _target_measure(sys, ws):
    from .measure import cylinder_measure
    return math.fsum(cylinder_measure(sys, w).value for w in ws)


@dataclass
class AbsorbingChain:
    """Killed transition matrix of (automaton state[, last symbol]).

    State index is ``s`` for Bernoulli shifts and ``s * A + last`` for
    Markov shifts. ``QT`` is the transpose of ``Q`` in CSR form, so
    ``QT @ v`` advances a row distribution by one symbol.
    """

    sys: SystemDescriptor
    automaton: PatternAutomaton
    QT: sparse.csr_matrix
    markov: bool

    @classmethod
    def build(cls, sys, target):
        sys = _symbol_system(sys)
        ws = as_wordset(target)
        for w in ws:
            if not admissible(sys, w):
                raise ValueError(f"target word {w} is inadmissible")
        aut = PatternAutomaton(ws, sys.alphabet_size)
        A = sys.alphabet_size
        markov = sys.kind is SystemKind.MARKOV
        n = aut.n_states * (A if markov else 1)
        if n > MAX_CHAIN_STATES:
            raise StateBlowupError(f"absorbing chain would have {n} states (cap {MAX_CHAIN_STATES})")
        S = aut.n_states
        src = np.repeat(np.arange(S), A)
        sym = np.tile(np.arange(A), S)
        dst = aut.delta[src, sym]
        alive = ~aut.accept[dst]
        if markov:
            P = np.array(sys.P)
            rows = (src[:, None] * A + np.arange(A)[None, :]).ravel()
            cols = np.repeat((dst * A + sym)[:, None], A, axis=1).ravel()
            w = P[np.arange(A)[None, :], sym[:, None]].ravel()
            keep = np.repeat(alive, A) & (w > 0)
        else:
            rows, cols = src, dst
            w = np.asarray(sys.p)[sym]
            keep = alive & (w > 0)
        QT = sparse.csr_matrix((w[keep], (cols[keep], rows[keep])), shape=(n, n))
        QT.sum_duplicates()
        return cls(sys, aut, QT, markov)

    @property
    def n_states(self):
        return self.QT.shape[0]

    def index(self, state, last):
        A = self.sys.alphabet_size
        return state * A + last if self.markov else state

    def entry_init(self):
        """Distribution before y_1 is read: empty match, y_0 ~ pi."""
        v = np.zeros(self.n_states)
        if self.markov:
            v[self.index(0, np.arange(self.sys.alphabet_size))] = self.sys.pi
        else:
            v[0] = 1.0
        return v

    def conditional_init(self, ws):
        """Distribution right after reading a target word drawn from mu( . | A)."""
        v = np.zeros(self.n_states)
        masses = np.array([_target_measure(self.sys, [w]) for w in ws])
        for w, m in zip(ws, masses / masses.sum()):
            v[self.index(self.automaton.run(w), w[-1])] += m
        return v

    def advance(self, v, steps):
        for _ in range(steps):
            v = self.QT @ v
        return v

    def masses(self, v, t_max):
        """[|v Q^t|_1 for t = 0..t_max]."""
        out = np.empty(t_max + 1)
        out[0] = v.sum()
        for t in range(1, t_max + 1):
            v = self.QT @ v
            out[t] = v.sum()
        return out

    def resolvent_total(self, v):
        """sum_t |v Q^t|_1 = v (I - Q)^-1 1."""
        M = (sparse.identity(self.n_states, format="csc") - self.QT.tocsc())
        x = spsolve(M, v)
        return float(x.sum())


def _curve(values, sys, target, mode):
    t = np.arange(len(values), dtype=np.float64)
    return SurvivalCurve(t, np.clip(values, 0.0, 1.0), mode=mode,
                         meta={"system": sys.to_config(), "target": _label(target)})


def _label(target):
    ws = as_wordset(target)
    return ["".join(map(str, w)) for w in ws][:16]


def exact_survival(sys, target, t_max):
    """P(tau > t) for t = 0..t_max, entering from the invariant measure."""
    chain = AbsorbingChain.build(sys, target)
    L = as_wordset(target).N
    v = chain.advance(chain.entry_init(), L - 1)
    return _curve(chain.masses(v, t_max), sys, target, "Exact")


def exact_conditional_survival(sys, target, Delta, t_max=None):
    """P_A(tau_A > t) for t = 0..t_max, together with a_A and the period tau(A)."""
    ws = as_wordset(target)
    tau = period(ws, sys)
    if t_max is None:
        t_max = tau + Delta
    t_max = max(t_max, tau + Delta)
    chain = AbsorbingChain.build(sys, ws)
    vals = chain.masses(chain.conditional_init(ws), t_max)
    curve = _curve(vals, sys, target, "Exact")
    return curve, float(vals[tau + Delta]), tau


def exact_kac_mean(sys, target):
    """E_A[tau_A] from the resolvent under the conditional start."""
    ws = as_wordset(target)
    chain = AbsorbingChain.build(sys, ws)
    return chain.resolvent_total(chain.conditional_init(ws))


def exact_entry_mean(sys, target):
    """E[tau] for entry from the invariant measure."""
    chain = AbsorbingChain.build(sys, target)
    v = chain.advance(chain.entry_init(), as_wordset(target).N - 1)
    return chain.resolvent_total(v)


def target_measure(sys, target):
    return _target_measure(_symbol_system(sys), as_wordset(target))


def exact_lambda(sys, target, f):
    mu = target_measure(sys, target)
    if f < 1 or f * mu > 0.5:
        raise ValueError(f"exact_lambda needs 1 <= f and f*mu <= 1/2 (f*mu = {f * mu})")
    s = exact_survival(sys, target, f).values[f]
    est = lambda_estimator(s, f, mu, mode="Exact")
    if est.defined and est.value > 2.0 + 1e-12:
        raise BoundViolation(f"lambda = {est.value} exceeds 2 at f = {f}")
    return est


# ------------------------------------------------------------------ periods

def _bridge_lengths(sys, max_len):
    """reach[k][a, b]: a path of exactly k transitions from a to b."""
    B = (np.array(sys.transition) > 0).astype(np.int64)
    reach = [np.eye(B.shape[0], dtype=bool)]
    for _ in range(max_len):
        reach.append((reach[-1].astype(np.int64) @ B) > 0)
    return reach


def period(target, sys=None):
    """tau(A) = min{k > 0 : T^-k A meets A} for a set of cylinders of common length.

    For ``k < L`` a word of A must overlap a word of A shifted by ``k``; for
    ``k >= L`` the gap of ``k - L`` free symbols must be fillable by an
    admissible path (always possible on full shifts, so tau <= L there).
    """
    ws = as_wordset(target)
    L = ws.N
    words = list(ws)
    if sys is not None and sys.kind is SystemKind.MARKOV:
        words = [w for w in words if admissible(sys, w)]
        if not words:
            raise ValueError("target has no admissible word")
    for k in range(1, L):
        suffixes = {w[k:] for w in words}
        if any(w[:L - k] in suffixes for w in words):
            return k
    if sys is None or sys.kind is not SystemKind.MARKOV:
        return L
    A = sys.alphabet_size
    reach = _bridge_lengths(sys, A * A + 1)
    lasts = {w[-1] for w in words}
    firsts = {w[0] for w in words}
    for gap in range(0, A * A + 1):
        R = reach[gap + 1]
        if any(R[a, b] for a in lasts for b in firsts):
            return L + gap
    raise ValueError("no admissible return to the target (chain not irreducible)")


def arc_period(center_fixed, radius_fixed, max_k=4096):
    """Period of an open doubling-map arc given in 64-bit fixed point."""
    mask = (1 << 64) - 1
    for k in range(1, max_k + 1):
        if radius_fixed << k >= 1 << 63:
            return k
        moved = (center_fixed << k) & mask
        d = (moved - center_fixed) & mask
        d = min(d, (-d) & mask)
        if d < radius_fixed + (radius_fixed << k):
            return k
    raise ValueError("arc period search exhausted")


__all__ = [
    "AbsorbingChain", "BoundViolation", "CylinderWord", "LambdaEstimate",
    "StateBlowupError", "arc_period", "exact_conditional_survival", "exact_entry_mean",
    "exact_kac_mean", "exact_lambda", "exact_survival", "period", "target_measure",
]
