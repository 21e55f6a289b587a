"""Finite-dimensional quantum devices: observables, channels, instruments.

Channels are carried by their Choi matrix with the *output* factor first:

    choi(E) = sum_{m,n} E(|m><n|) (x) |m><n|

so ``choi`` acts on ``dout * din`` and tracing out the output factor of a
trace-preserving map yields the identity on the input space.  The related
literature convention M(E) = (E* (x) id)(Omega_d), which carries the input
factor first and the dual map, is reachable through
:func:`to_paper_choi` / :func:`channel_from_paper_choi`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import (
    DimensionError,
    InvalidDistributionError,
    InvalidInstrumentError,
    InvalidPovmError,
    NotAStateError,
    WeightOutOfRangeError,
)

_DEFAULT_TOL = 1e-10


def default_tol() -> float:
    return _DEFAULT_TOL


def set_default_tol(value: float) -> None:
    """Globally override the device validation tolerance."""
    global _DEFAULT_TOL
    _DEFAULT_TOL = float(value)


def _tol(tol: float | None) -> float:
    return _DEFAULT_TOL if tol is None else float(tol)


def ket(i: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=np.complex128)
    v[i] = 1.0
    return v


def proj(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    return np.outer(v, v.conj())


def omega(d: int) -> np.ndarray:
    """The rank-1 operator sum_{m,n} |mm><nn| (unnormalized)."""
    v = np.zeros(d * d, dtype=np.complex128)
    v[:: d + 1] = 1.0
    return np.outer(v, v.conj())


def max_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=np.complex128) / d


def require_state(sigma, tol: float | None = None) -> np.ndarray:
    sigma = linalg.as_operator(sigma)
    t = _tol(tol)
    if not linalg.is_hermitian(sigma, t) or linalg.min_eigenvalue(sigma) < -t:
        raise NotAStateError("density operator must be Hermitian PSD")
    if abs(np.trace(sigma).real - 1.0) > max(t, 1e-12):
        raise NotAStateError(f"trace is {np.trace(sigma).real}, expected 1")
    return sigma


def require_distribution(p, tol: float = 1e-12) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.min(p) < -tol or abs(p.sum() - 1.0) > max(tol, 1e-12):
        raise InvalidDistributionError(f"not a probability vector: {p}")
    return np.maximum(p, 0.0)


# ---------------------------------------------------------------------------
# device types


@dataclass(frozen=True)
class Povm:
    """Observable with outcome set Z_n: effects PSD, summing to identity."""

    dim: int
    effects: tuple[np.ndarray, ...]

    @property
    def n_outcomes(self) -> int:
        return len(self.effects)

    def validate(self, tol: float | None = None) -> "Povm":
        t = _tol(tol)
        total = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for e in self.effects:
            if e.shape != (self.dim, self.dim):
                raise InvalidPovmError(f"effect shape {e.shape} != dim {self.dim}")
            if not linalg.is_hermitian(e, t):
                raise InvalidPovmError("effect is not Hermitian")
            if linalg.min_eigenvalue(e) < -t:
                raise InvalidPovmError("effect is not PSD")
            total += e
        if np.max(np.abs(total - np.eye(self.dim))) > t:
            raise InvalidPovmError("effects do not sum to the identity")
        return self


@dataclass(frozen=True)
class ChannelChoi:
    """Channel din -> dout represented by its Choi matrix (output factor first)."""

    din: int
    dout: int
    choi: np.ndarray

    def validate(self, tol: float | None = None) -> "ChannelChoi":
        t = _tol(tol)
        n = self.din * self.dout
        if self.choi.shape != (n, n):
            raise DimensionError(f"choi shape {self.choi.shape} != {(n, n)}")
        if not linalg.is_hermitian(self.choi, t) or linalg.min_eigenvalue(self.choi) < -t:
            raise InvalidInstrumentError("Choi matrix is not PSD (map not CP)")
        red = linalg.partial_trace(self.choi, [self.dout, self.din], keep={1})
        if np.max(np.abs(red - np.eye(self.din))) > t:
            raise InvalidInstrumentError("map is not trace preserving")
        return self


@dataclass(frozen=True)
class Instrument:
    """Outcome-indexed CP operations (Choi blocks) summing to a channel."""

    din: int
    dout: int
    blocks: tuple[np.ndarray, ...]

    @property
    def n_outcomes(self) -> int:
        return len(self.blocks)

    def validate(self, tol: float | None = None) -> "Instrument":
        t = _tol(tol)
        n = self.din * self.dout
        for b in self.blocks:
            if b.shape != (n, n):
                raise DimensionError(f"block shape {b.shape} != {(n, n)}")
            if not linalg.is_hermitian(b, t) or linalg.min_eigenvalue(b) < -t:
                raise InvalidInstrumentError("operation block is not PSD")
        ChannelChoi(self.din, self.dout, sum(self.blocks)).validate(t)
        return self


@dataclass(frozen=True)
class MarkovKernel:
    """Column-stochastic post-processing matrix; column w is the distribution beta(.|w)."""

    matrix: np.ndarray

    def validate(self, tol: float = 1e-12) -> "MarkovKernel":
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or np.min(m) < -tol:
            raise InvalidDistributionError("kernel entries must be nonnegative")
        if np.max(np.abs(m.sum(axis=0) - 1.0)) > tol:
            raise InvalidDistributionError("kernel columns must sum to 1")
        return self


@dataclass(frozen=True)
class JointObservable:
    """Grid observable G[j, k] whose margins reproduce a POVM pair."""

    dim: int
    grid: np.ndarray  # shape (n, n', d, d)

    def validate(self, tol: float | None = None) -> "JointObservable":
        t = _tol(tol)
        n, np_, d, _ = self.grid.shape
        if d != self.dim:
            raise DimensionError("grid block size does not match dim")
        for j in range(n):
            for k in range(np_):
                g = self.grid[j, k]
                if not linalg.is_hermitian(g, t) or linalg.min_eigenvalue(g) < -t:
                    raise InvalidPovmError(f"grid block ({j},{k}) is not PSD")
        total = self.grid.sum(axis=(0, 1))
        if np.max(np.abs(total - np.eye(d))) > t:
            raise InvalidPovmError("grid blocks do not sum to the identity")
        return self

    def margins(self) -> tuple[Povm, Povm]:
        row = self.grid.sum(axis=1)
        col = self.grid.sum(axis=0)
        a = Povm(self.dim, tuple(row[j] for j in range(row.shape[0])))
        b = Povm(self.dim, tuple(col[k] for k in range(col.shape[0])))
        return a, b


# ---------------------------------------------------------------------------
# constructors


def povm_from_effects(effects, tol: float | None = None) -> Povm:
    effects = tuple(linalg.as_operator(e) for e in effects)
    return Povm(effects[0].shape[0], effects).validate(tol)


def trivial_observable(p, d: int) -> Povm:
    """T(X) = p(X) * identity."""
    p = require_distribution(p)
    eye = np.eye(d, dtype=np.complex128)
    return Povm(d, tuple(float(pj) * eye for pj in p))


def sharp_observable(vectors) -> Povm:
    """Rank-1 sharp observable from an orthonormal basis."""
    vs = [np.asarray(v, dtype=np.complex128) for v in vectors]
    return povm_from_effects([proj(v) for v in vs])


def computational_observable(d: int) -> Povm:
    return sharp_observable([ket(j, d) for j in range(d)])


def identity_channel(d: int) -> ChannelChoi:
    return ChannelChoi(d, d, omega(d))


def constant_channel(sigma, din: int) -> ChannelChoi:
    """T_sigma : rho -> sigma; Choi = sigma (x) identity."""
    sigma = require_state(sigma)
    return ChannelChoi(din, sigma.shape[0], np.kron(sigma, np.eye(din)))


def depolarizing_target(d: int) -> ChannelChoi:
    """The completely depolarizing channel rho -> I/d."""
    return constant_channel(max_mixed(d), d)


def unitary_channel(u) -> ChannelChoi:
    u = linalg.as_operator(u)
    d = u.shape[0]
    ui = np.kron(u, np.eye(d))
    return ChannelChoi(d, d, ui @ omega(d) @ ui.conj().T)


def channel_from_kraus(kraus, din: int | None = None) -> ChannelChoi:
    kraus = [np.asarray(k, dtype=np.complex128) for k in kraus]
    dout, din_ = kraus[0].shape
    din = din_ if din is None else din
    c = np.zeros((dout * din, dout * din), dtype=np.complex128)
    om = omega(din)
    for k in kraus:
        ki = np.kron(k, np.eye(din))
        c += ki @ om @ ki.conj().T
    return ChannelChoi(din, dout, c)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = linalg.hermitian_eig(m)
    return (v * np.sqrt(np.maximum(w, 0.0))) @ v.conj().T


def lueders_channel(a: Povm) -> ChannelChoi:
    """rho -> sum_j sqrt(A_j) rho sqrt(A_j)."""
    a.validate()
    return channel_from_kraus([_psd_sqrt(e) for e in a.effects])


# ---------------------------------------------------------------------------
# applying and transforming


def _choi4(e: ChannelChoi) -> np.ndarray:
    return e.choi.reshape(e.dout, e.din, e.dout, e.din)


def apply_channel(e: ChannelChoi, rho) -> np.ndarray:
    rho = linalg.as_operator(rho)
    if rho.shape[0] != e.din:
        raise DimensionError(f"state dim {rho.shape[0]} != channel input {e.din}")
    return np.einsum("ambn,mn->ab", _choi4(e), rho)


def dual_apply(e: ChannelChoi, b) -> np.ndarray:
    """Heisenberg-picture action E*(B), defined by tr[rho E*(B)] = tr[E(rho) B]."""
    b = linalg.as_operator(b)
    if b.shape[0] != e.dout:
        raise DimensionError(f"operator dim {b.shape[0]} != channel output {e.dout}")
    return np.einsum("anbm,ba->mn", _choi4(e), b)


def compose_channels(f: ChannelChoi, g: ChannelChoi) -> ChannelChoi:
    """Choi matrix of f o g (apply g first)."""
    if g.dout != f.din:
        raise DimensionError(f"cannot compose: dout(g)={g.dout} != din(f)={f.din}")
    c4 = np.einsum("aubv,umvn->ambn", _choi4(f), _choi4(g))
    n = f.dout * g.din
    return ChannelChoi(g.din, f.dout, c4.reshape(n, n))


def tensor_attach(e: ChannelChoi, sigma, side: str = "right") -> ChannelChoi:
    """rho -> E(rho) (x) sigma (or sigma (x) E(rho) with side='left')."""
    sigma = require_state(sigma)
    k = sigma.shape[0]
    c4 = _choi4(e)
    if side == "right":
        c6 = np.einsum("ambn,cd->acmbdn", c4, sigma)
        dout = e.dout * k
    else:
        c6 = np.einsum("ambn,cd->camdbn", c4, sigma)
        dout = k * e.dout
    n = dout * e.din
    return ChannelChoi(e.din, dout, c6.reshape(n, n))


def pre_process_observable(m: Povm, e: ChannelChoi) -> Povm:
    """N = E* o M: measure m after transforming with e."""
    if e.dout != m.dim:
        raise DimensionError(f"channel output {e.dout} != observable dim {m.dim}")
    effects = tuple(linalg.hermitize(dual_apply(e, mj)) for mj in m.effects)
    return Povm(e.din, effects)


def post_process_observable(m: Povm, beta: MarkovKernel) -> Povm:
    beta.validate()
    mat = np.asarray(beta.matrix, dtype=float)
    if mat.shape[1] != m.n_outcomes:
        raise DimensionError(
            f"kernel has {mat.shape[1]} columns, observable has {m.n_outcomes} outcomes"
        )
    stack = np.stack(m.effects)
    return Povm(m.dim, tuple(np.einsum("yw,wab->yab", mat, stack)))


def channel_marginals(f: ChannelChoi, split: tuple[int, int]) -> tuple[ChannelChoi, ChannelChoi]:
    k1, k2 = int(split[0]), int(split[1])
    if k1 * k2 != f.dout:
        raise DimensionError(f"output dim {f.dout} does not split as {k1}x{k2}")
    dims = [k1, k2, f.din]
    m1 = linalg.partial_trace(f.choi, dims, keep={0, 2})
    m2 = linalg.partial_trace(f.choi, dims, keep={1, 2})
    return ChannelChoi(f.din, k1, m1), ChannelChoi(f.din, k2, m2)


def instrument_marginals(g: Instrument) -> tuple[Povm, ChannelChoi]:
    """Observable marginal Gamma_j*(1) and channel marginal sum_j Gamma_j."""
    effects = []
    for b in g.blocks:
        red = linalg.partial_trace(b, [g.dout, g.din], keep={1})
        effects.append(linalg.hermitize(red.T))
    chan = ChannelChoi(g.din, g.dout, sum(g.blocks))
    return Povm(g.din, tuple(effects)), chan


def _check_weight(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise WeightOutOfRangeError(f"weight {t} outside [0, 1]")
    return t


def mix(x, y, t: float):
    """Convex combination t*x + (1-t)*y for same-shaped devices or pairs."""
    t = _check_weight(t)
    if isinstance(x, tuple) and isinstance(y, tuple):
        if len(x) != len(y):
            raise DimensionError("pairs have different lengths")
        return tuple(mix(a, b, t) for a, b in zip(x, y))
    if isinstance(x, Povm) and isinstance(y, Povm):
        if x.dim != y.dim or x.n_outcomes != y.n_outcomes:
            raise DimensionError("POVMs have different shapes")
        return Povm(x.dim, tuple(t * a + (1 - t) * b for a, b in zip(x.effects, y.effects)))
    if isinstance(x, ChannelChoi) and isinstance(y, ChannelChoi):
        if (x.din, x.dout) != (y.din, y.dout):
            raise DimensionError("channels have different shapes")
        return ChannelChoi(x.din, x.dout, t * x.choi + (1 - t) * y.choi)
    if isinstance(x, Instrument) and isinstance(y, Instrument):
        if (x.din, x.dout, x.n_outcomes) != (y.din, y.dout, y.n_outcomes):
            raise DimensionError("instruments have different shapes")
        return Instrument(x.din, x.dout, tuple(t * a + (1 - t) * b for a, b in zip(x.blocks, y.blocks)))
    if isinstance(x, np.ndarray) and isinstance(y, np.ndarray):
        return t * x + (1 - t) * y
    raise DimensionError(f"cannot mix {type(x).__name__} with {type(y).__name__}")


def product_channel(a: ChannelChoi, b: ChannelChoi) -> ChannelChoi:
    """The tensor-product channel A (x) B on a product input space."""
    c8 = np.einsum("xmyn,uavb->xumayvnb", _choi4(a), _choi4(b))
    din, dout = a.din * b.din, a.dout * b.dout
    return ChannelChoi(din, dout, c8.reshape(din * dout, din * dout))


# ---------------------------------------------------------------------------
# random device sampling (explicit generators keep runs reproducible)


def random_state(d: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


def random_povm(d: int, n: int, rng: np.random.Generator) -> Povm:
    gs = []
    for _ in range(n):
        x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        gs.append(x @ x.conj().T)
    total = sum(gs)
    w, v = linalg.hermitian_eig(total)
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    return Povm(d, tuple(linalg.hermitize(inv_sqrt @ g @ inv_sqrt) for g in gs))


def random_channel(din: int, dout: int, rng: np.random.Generator, kraus_rank: int | None = None) -> ChannelChoi:
    """Random CPTP map from a Haar-random Stinespring isometry."""
    k = kraus_rank or din
    z = rng.normal(size=(dout * k, dout * k)) + 1j * rng.normal(size=(dout * k, dout * k))
    q, r = np.linalg.qr(z)
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    iso = q[:, :din].reshape(dout, k, din)
    return channel_from_kraus([iso[:, i, :] for i in range(k)], din)


def random_kernel(nout: int, nin: int, rng: np.random.Generator) -> MarkovKernel:
    cols = rng.gamma(1.0, size=(nout, nin))
    return MarkovKernel(cols / cols.sum(axis=0, keepdims=True))


# ---------------------------------------------------------------------------
# Choi-convention conversion


def to_paper_choi(e: ChannelChoi) -> np.ndarray:
    """Convert to the literature convention M(E) = (E* (x) id)(Omega), input factor first."""
    c4 = _choi4(e)
    n = e.din * e.dout
    return c4.transpose(3, 2, 1, 0).reshape(n, n)


def channel_from_paper_choi(m, din: int, dout: int) -> ChannelChoi:
    """Inverse of :func:`to_paper_choi`."""
    m = linalg.as_operator(m)
    if m.shape[0] != din * dout:
        raise DimensionError(f"matrix size {m.shape[0]} != din*dout = {din * dout}")
    m4 = m.reshape(din, dout, din, dout)
    return ChannelChoi(din, dout, m4.transpose(3, 2, 1, 0).reshape(din * dout, din * dout))
