"""Exact event-driven simulation of the boundary-driven exclusion process
with bulk creation/annihilation, optionally tilted by bond/site drifts.

Sites live on {-N,...,N} (array index = x + N).  The diffusive part is sped
up by N^2: a bond (x,x+1) with unequal occupations exchanges at rate N^2/2
(times exp[(eta(x)-eta(x+1)) * (H((x+1)/N)-H(x/N))] when tilted), a bulk
site x with |x| <= N-M-1 flips at rate c(x,eta) * [eta e^{-G} + (1-eta) e^G],
and the two end sites flip at reservoir rate (N^2/2) [eta + beta (1-eta)].

Bookkeeping is exact integer arithmetic: Q[j] counts net rightward transfers
across bond j, K[x] net bulk creations at x, R -/+ net reservoir creations.
"""

from __future__ import annotations

import inspect
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.linalg import expm

from .errors import CapacityError, ConsistencyError, DomainError, ValidationError
from .rates import CylinderRate

_EVENT_BUFFER = 1 << 20


# ---------------------------------------------------------------------------
# data types


@dataclass
class LatticeState:
    """Microscopic configuration plus exact current counters at time t."""

    N: int
    occupancy: np.ndarray  # int8, 2N+1 entries, index x+N
    Q: np.ndarray  # int64, 2N bonds
    K: np.ndarray  # int64, 2N+1 sites (only the bulk window is ever touched)
    R_minus: int
    R_plus: int
    t: float
    initial_occupancy: np.ndarray

    def copy(self) -> "LatticeState":
        return LatticeState(
            self.N,
            self.occupancy.copy(),
            self.Q.copy(),
            self.K.copy(),
            self.R_minus,
            self.R_plus,
            self.t,
            self.initial_occupancy,
        )


@dataclass
class SimParams:
    N: int
    T: float
    beta_plus: float
    beta_minus: float
    rate: CylinderRate
    gamma: object  # callable x in [-1,1] -> [0,1]
    tilt_G: object = None  # callable x -> R or (t, x) -> R
    tilt_H: object = None
    seed: int = 0
    sample_times: tuple = ()
    tilt_substep: float | None = None
    record_events: bool = False
    max_events: int = 10**8

    def __post_init__(self):
        if self.N < self.rate.range + 1:
            raise ValidationError(f"N={self.N} < M+1={self.rate.range + 1}")
        if self.T <= 0:
            raise ValidationError("T must be positive")
        if self.beta_plus < 0 or self.beta_minus < 0:
            raise ValidationError("reservoir intensities must be nonnegative")
        st = tuple(float(s) for s in self.sample_times) or (self.T,)
        if any(s < 0 or s > self.T + 1e-12 for s in st) or list(st) != sorted(st):
            raise ValidationError("sample_times must be sorted within [0,T]")
        self.sample_times = st

    @property
    def sites_x(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1) / self.N


@dataclass
class EventLog:
    """Chronological event records plus the initial configuration."""

    N: int
    M: int
    times: np.ndarray  # float64
    channels: np.ndarray  # int32
    directions: np.ndarray  # int8
    initial_occupancy: np.ndarray

    def __len__(self):
        return self.times.size


@dataclass
class SimResult:
    params: SimParams
    initial: LatticeState
    snapshots: list
    events: EventLog | None = None


@dataclass
class RateCatalogue:
    """All elementary channel rates for one configuration."""

    bond: np.ndarray  # 2N exchange rates
    bulk: np.ndarray  # flip rates on the bulk window
    bulk_sites: np.ndarray  # the x coordinates of the bulk window
    boundary: np.ndarray  # (left, right) reservoir flip rates

    def total(self) -> float:
        return float(self.bond.sum() + self.bulk.sum() + self.boundary.sum())


# ---------------------------------------------------------------------------
# tilt evaluation (piecewise-constant freezing in time)


def _tilt_callable(tilt):
    """Normalize a tilt spec to (f(t, x), time_dependent)."""
    if tilt is None:
        return None, False
    try:
        nargs = len(inspect.signature(tilt).parameters)
    except (TypeError, ValueError):
        nargs = 2
    if nargs == 1:
        return (lambda t, x: np.broadcast_to(tilt(x), np.shape(x)).astype(float)), False
    return (lambda t, x: np.broadcast_to(tilt(t, x), np.shape(x)).astype(float)), True


def _segment_tables(params: SimParams, t: float):
    """Frozen tilt factor tables for a time segment starting at t."""
    N = params.N
    x = params.sites_x
    g_fn, _ = _tilt_callable(params.tilt_G)
    h_fn, _ = _tilt_callable(params.tilt_H)
    if g_fn is None:
        eg_pos = np.ones(2 * N + 1)
        eg_neg = np.ones(2 * N + 1)
        gvals = np.zeros(2 * N + 1)
    else:
        gvals = np.asarray(g_fn(t, x), dtype=float)
        eg_pos = np.exp(gvals)
        eg_neg = np.exp(-gvals)
    if h_fn is None:
        dh = np.zeros(2 * N)
    else:
        hvals = np.asarray(h_fn(t, x), dtype=float)
        dh = np.diff(hvals)
    return gvals, eg_pos, eg_neg, dh


def _time_dependent_tilt(params: SimParams) -> bool:
    return _tilt_callable(params.tilt_G)[1] or _tilt_callable(params.tilt_H)[1]


# ---------------------------------------------------------------------------
# numba kernel


@njit(cache=True, nogil=True)
def _seed_rng(seed):
    np.random.seed(seed)


@njit(cache=True, nogil=True, inline="always")
def _fen_add(tree, i, delta):
    i += 1
    n = tree.shape[0] - 1
    while i <= n:
        tree[i] += delta
        i += i & (-i)


@njit(cache=True, nogil=True)
def _fen_find(tree, rates, u):
    """Smallest channel i with cumulative rate > u."""
    n = tree.shape[0] - 1
    bit = 1
    while (bit << 1) <= n:
        bit <<= 1
    i = 0
    while bit:
        ni = i + bit
        if ni <= n and tree[ni] <= u:
            u -= tree[ni]
            i = ni
        bit >>= 1
    if i >= n:
        i = n - 1
    while rates[i] <= 0.0 and i > 0:  # drift guard at the top of the range
        i -= 1
    return i


@njit(cache=True, nogil=True, inline="always")
def _bond_rate(occ, j, half_n2, dh):
    a = occ[j]
    b = occ[j + 1]
    if a == b:
        return 0.0
    if a == 1:
        return half_n2 * math.exp(dh[j])
    return half_n2 * math.exp(-dh[j])


@njit(cache=True, nogil=True, inline="always")
def _bulk_rate(occ, idx, M, table, eg_pos, eg_neg):
    w = 0
    for k in range(idx - M, idx + M + 1):
        w = (w << 1) | occ[k]
    c = table[w]
    if occ[idx] == 1:
        return c * eg_neg[idx]
    return c * eg_pos[idx]


@njit(cache=True, nogil=True, inline="always")
def _boundary_rate(occ, idx, half_n2, beta):
    if occ[idx] == 1:
        return half_n2
    return half_n2 * beta


@njit(cache=True, nogil=True)
def _channel_rate(ch, occ, N, M, table, half_n2, beta_m, beta_p, eg_pos, eg_neg, dh):
    nb = 2 * N
    nbu = 2 * N - 2 * M - 1
    if ch < nb:
        return _bond_rate(occ, ch, half_n2, dh)
    if ch < nb + nbu:
        return _bulk_rate(occ, M + 1 + (ch - nb), M, table, eg_pos, eg_neg)
    if ch == nb + nbu:
        return _boundary_rate(occ, 0, half_n2, beta_m)
    return _boundary_rate(occ, 2 * N, half_n2, beta_p)


@njit(cache=True, nogil=True)
def _run_segment(
    occ,
    Q,
    K,
    R,
    t_start,
    t_end,
    N,
    M,
    table,
    beta_m,
    beta_p,
    eg_pos,
    eg_neg,
    dh,
    record,
    ev_t,
    ev_ch,
    ev_dir,
):
    """Simulate on [t_start, t_end] with frozen tilt tables.

    Returns (t_reached, n_events, full) where full=True means the event
    buffer filled up and the caller must resume from t_reached.
    """
    nb = 2 * N
    nbu = 2 * N - 2 * M - 1
    nch = nb + nbu + 2
    half_n2 = 0.5 * N * N

    rates = np.zeros(nch)
    tree = np.zeros(nch + 1)
    total = 0.0
    for ch in range(nch):
        r = _channel_rate(ch, occ, N, M, table, half_n2, beta_m, beta_p, eg_pos, eg_neg, dh)
        rates[ch] = r
        total += r
        _fen_add(tree, ch, r)

    t = t_start
    n_ev = 0
    cap = ev_t.shape[0]
    while True:
        if total <= 0.0:
            return t_end, n_ev, False
        dt = np.random.exponential() / total
        if t + dt > t_end:
            return t_end, n_ev, False
        t += dt
        u = np.random.random() * total
        ch = _fen_find(tree, rates, u)

        lo = 0
        hi = 0
        d = 0
        if ch < nb:
            j = ch
            d = 1 if occ[j] == 1 else -1
            Q[j] += d
            tmp = occ[j]
            occ[j] = occ[j + 1]
            occ[j + 1] = tmp
            lo, hi = j, j + 1
        elif ch < nb + nbu:
            idx = M + 1 + (ch - nb)
            d = 1 - 2 * occ[idx]
            K[idx] += d
            occ[idx] = 1 - occ[idx]
            lo = hi = idx
        else:
            side = ch - nb - nbu
            idx = 0 if side == 0 else 2 * N
            d = 1 - 2 * occ[idx]
            R[side] += d
            occ[idx] = 1 - occ[idx]
            lo = hi = idx

        if record:
            ev_t[n_ev] = t
            ev_ch[n_ev] = ch
            ev_dir[n_ev] = d
        n_ev += 1

        # refresh every channel whose rate can see the touched sites
        j0 = lo - 1 if lo - 1 > 0 else 0
        j1 = hi if hi < nb - 1 else nb - 1
        for j in range(j0, j1 + 1):
            r = _bond_rate(occ, j, half_n2, dh)
            delta = r - rates[j]
            if delta != 0.0:
                rates[j] = r
                total += delta
                _fen_add(tree, j, delta)
        b0 = lo - M if lo - M > M + 1 else M + 1
        b1 = hi + M if hi + M < 2 * N - M - 1 else 2 * N - M - 1
        for idx in range(b0, b1 + 1):
            chb = nb + (idx - (M + 1))
            r = _bulk_rate(occ, idx, M, table, eg_pos, eg_neg)
            delta = r - rates[chb]
            if delta != 0.0:
                rates[chb] = r
                total += delta
                _fen_add(tree, chb, delta)
        if lo == 0:
            chx = nb + nbu
            r = _boundary_rate(occ, 0, half_n2, beta_m)
            delta = r - rates[chx]
            rates[chx] = r
            total += delta
            _fen_add(tree, chx, delta)
        if hi == 2 * N:
            chx = nb + nbu + 1
            r = _boundary_rate(occ, 2 * N, half_n2, beta_p)
            delta = r - rates[chx]
            rates[chx] = r
            total += delta
            _fen_add(tree, chx, delta)

        if record and n_ev == cap:
            return t, n_ev, True


# ---------------------------------------------------------------------------
# public operations


def sample_initial(params: SimParams, rng: np.random.Generator | None = None) -> LatticeState:
    """Independent Bernoulli(gamma(x/N)) occupancies with zeroed counters."""
    if rng is None:
        rng = np.random.default_rng(np.uint64(params.seed) ^ np.uint64(0xB0BA_CAFE))
    N = params.N
    probs = np.array([float(params.gamma(x)) for x in params.sites_x])
    if np.any(probs < 0) or np.any(probs > 1):
        raise DomainError("initial profile must take values in [0,1]")
    occ = (rng.random(2 * N + 1) < probs).astype(np.int8)
    return LatticeState(
        N=N,
        occupancy=occ,
        Q=np.zeros(2 * N, dtype=np.int64),
        K=np.zeros(2 * N + 1, dtype=np.int64),
        R_minus=0,
        R_plus=0,
        t=0.0,
        initial_occupancy=occ.copy(),
    )


def jump_rates(state: LatticeState, params: SimParams, t: float | None = None) -> RateCatalogue:
    """Full catalogue of elementary channel rates for one configuration."""
    N, M = params.N, params.rate.range
    if state.N != N:
        raise ConsistencyError("state/params lattice size mismatch")
    tt = state.t if t is None else t
    _, eg_pos, eg_neg, dh = _segment_tables(params, tt)
    occ = state.occupancy
    half_n2 = 0.5 * N * N
    s = occ[:-1].astype(float) - occ[1:].astype(float)
    bond = half_n2 * (s != 0) * np.exp(s * dh)
    bond[s == 0] = 0.0
    bulk_idx = np.arange(M + 1, 2 * N - M)
    bulk = np.empty(bulk_idx.size)
    for i, idx in enumerate(bulk_idx):
        w = 0
        for k in range(idx - M, idx + M + 1):
            w = (w << 1) | int(occ[k])
        c = params.rate.table[w]
        bulk[i] = c * (eg_neg[idx] if occ[idx] else eg_pos[idx])
    boundary = np.array(
        [
            half_n2 * (occ[0] + params.beta_minus * (1 - occ[0])),
            half_n2 * (occ[2 * N] + params.beta_plus * (1 - occ[2 * N])),
        ]
    )
    return RateCatalogue(bond=bond, bulk=bulk, bulk_sites=bulk_idx - N, boundary=boundary)


def _segment_boundaries(params: SimParams) -> np.ndarray:
    """Union of sample times and tilt-freezing substep boundaries."""
    pts = {0.0, params.T}
    pts.update(params.sample_times)
    if _time_dependent_tilt(params):
        sub = params.tilt_substep or params.T / 1000.0
        n = max(1, int(math.ceil(params.T / sub)))
        pts.update(np.linspace(0.0, params.T, n + 1).tolist())
    return np.array(sorted(pts))


def run(params: SimParams) -> SimResult:
    """Exact continuous-time simulation; snapshots at params.sample_times."""
    state = sample_initial(params)
    initial = state.copy()
    _seed_rng(int(params.seed) & 0x7FFFFFFF)

    record = params.record_events
    buf = _EVENT_BUFFER if record else 1
    ev_t = np.empty(buf, dtype=np.float64)
    ev_ch = np.empty(buf, dtype=np.int32)
    ev_dir = np.empty(buf, dtype=np.int8)
    chunks = []
    total_events = 0

    R = np.zeros(2, dtype=np.int64)
    boundaries = _segment_boundaries(params)
    sample_set = set(params.sample_times)
    snapshots = []
    if 0.0 in sample_set:
        snapshots.append(state.copy())

    for t0, t1 in zip(boundaries[:-1], boundaries[1:]):
        _, eg_pos, eg_neg, dh = _segment_tables(params, t0)
        t = t0
        while True:
            t, n_ev, full = _run_segment(
                state.occupancy,
                state.Q,
                state.K,
                R,
                t,
                t1,
                params.N,
                params.rate.range,
                params.rate.table,
                params.beta_minus,
                params.beta_plus,
                eg_pos,
                eg_neg,
                dh,
                record,
                ev_t,
                ev_ch,
                ev_dir,
            )
            if record and n_ev:
                total_events += n_ev
                if total_events > params.max_events:
                    raise CapacityError(
                        f"event log exceeds cap of {params.max_events} events"
                    )
                chunks.append((ev_t[:n_ev].copy(), ev_ch[:n_ev].copy(), ev_dir[:n_ev].copy()))
            if not full:
                break
        state.t = float(t1)
        state.R_minus = int(R[0])
        state.R_plus = int(R[1])
        if t1 in sample_set and t1 != 0.0:
            snapshots.append(state.copy())

    events = None
    if record:
        if chunks:
            times = np.concatenate([c[0] for c in chunks])
            chs = np.concatenate([c[1] for c in chunks])
            dirs = np.concatenate([c[2] for c in chunks])
        else:
            times = np.empty(0)
            chs = np.empty(0, dtype=np.int32)
            dirs = np.empty(0, dtype=np.int8)
        events = EventLog(
            N=params.N,
            M=params.rate.range,
            times=times,
            channels=chs,
            directions=dirs,
            initial_occupancy=initial.occupancy.copy(),
        )
    return SimResult(params=params, initial=initial, snapshots=snapshots, events=events)


def log_radon_nikodym(
    events: EventLog, params: SimParams, omega=None
) -> float:
    """log dP_{omega,G,H} / dP_gamma evaluated on a path of the untilted law.

    The tilted law uses the same piecewise-constant tilt freezing as `run`,
    so exp(result) is an exactly mean-one martingale under the untilted law.
    """
    N, M = params.N, params.rate.range
    if events.N != N or events.M != M:
        raise ConsistencyError("event log does not match params (N or M differ)")
    nb = 2 * N
    nbu = 2 * N - 2 * M - 1

    occ = events.initial_occupancy.copy()
    logrn = 0.0
    if omega is not None:
        x = params.sites_x
        w = np.array([float(omega(xi)) for xi in x])
        g = np.array([float(params.gamma(xi)) for xi in x])
        if np.any(g <= 0) or np.any(g >= 1) or np.any(w <= 0) or np.any(w >= 1):
            raise DomainError("omega/gamma must be interior profiles for the RN term")
        logrn += float(np.sum(occ * np.log(w / g) + (1 - occ) * np.log((1 - w) / (1 - g))))

    boundaries = _segment_boundaries(params)
    untilted = SimParams(
        N=N,
        T=params.T,
        beta_plus=params.beta_plus,
        beta_minus=params.beta_minus,
        rate=params.rate,
        gamma=params.gamma,
        seed=params.seed,
        sample_times=(params.T,),
    )

    def totals(t_seg):
        st = LatticeState(N, occ, None, None, 0, 0, 0.0, occ)
        st.Q = np.zeros(nb, dtype=np.int64)
        st.K = np.zeros(2 * N + 1, dtype=np.int64)
        lam = jump_rates(st, untilted).total()
        lam_t = jump_rates(st, params, t=t_seg).total()
        return lam, lam_t

    i = 0
    n_events = len(events)
    for t0, t1 in zip(boundaries[:-1], boundaries[1:]):
        gvals, _, _, dh = _segment_tables(params, t0)
        t_prev = t0
        while i < n_events and events.times[i] <= t1:
            te = float(events.times[i])
            lam, lam_t = totals(t0)
            logrn -= (lam_t - lam) * (te - t_prev)
            ch = int(events.channels[i])
            if ch < nb:
                s = int(occ[ch]) - int(occ[ch + 1])
                if s == 0:
                    raise ConsistencyError(f"bond event {i} on equal occupancies")
                logrn += s * dh[ch]
                occ[ch], occ[ch + 1] = occ[ch + 1], occ[ch]
            elif ch < nb + nbu:
                idx = M + 1 + (ch - nb)
                logrn += (1 - 2 * int(occ[idx])) * gvals[idx]
                occ[idx] = 1 - occ[idx]
            else:
                idx = 0 if ch == nb + nbu else 2 * N
                occ[idx] = 1 - occ[idx]  # reservoir rates are untilted
            t_prev = te
            i += 1
        lam, lam_t = totals(t0)
        logrn -= (lam_t - lam) * (t1 - t_prev)
    if i != n_events:
        raise ConsistencyError("event log extends past params.T")
    return float(logrn)


def exact_tilted_moment(params: SimParams) -> float:
    """E[dP_{G,H}/dP] via a dense Feynman-Kac matrix exponential (N <= 4).

    Assembled from the tilted channel rates: off-diagonal entries are the
    tilted jump rates, the diagonal carries -(total untilted rate) minus the
    integrand (total tilted - total untilted).  Equals 1 to roundoff for any
    bounded time-independent tilt.
    """
    N, M = params.N, params.rate.range
    n_sites = 2 * N + 1
    if n_sites > 9:
        raise CapacityError(f"state space 2^{n_sites} too large for the oracle (N <= 4)")
    if _time_dependent_tilt(params):
        raise ValidationError("oracle requires a time-independent tilt")
    n_states = 1 << n_sites
    nb = 2 * N
    bulk_idx = np.arange(M + 1, 2 * N - M)

    L = np.zeros((n_states, n_states))
    dummy_Q = np.zeros(nb, dtype=np.int64)
    dummy_K = np.zeros(n_sites, dtype=np.int64)
    untilted = SimParams(
        N=N,
        T=params.T,
        beta_plus=params.beta_plus,
        beta_minus=params.beta_minus,
        rate=params.rate,
        gamma=params.gamma,
        seed=params.seed,
        sample_times=(params.T,),
    )
    for s in range(n_states):
        occ = np.array([(s >> i) & 1 for i in range(n_sites)], dtype=np.int8)
        state = LatticeState(N, occ, dummy_Q, dummy_K, 0, 0, 0.0, occ)
        cat_t = jump_rates(state, params, t=0.0)
        cat_u = jump_rates(state, untilted, t=0.0)
        for j in range(nb):
            if cat_t.bond[j] > 0:
                s2 = s ^ (1 << j) ^ (1 << (j + 1))
                L[s, s2] += cat_t.bond[j]
        for i, idx in enumerate(bulk_idx):
            if cat_t.bulk[i] > 0:
                L[s, s ^ (1 << idx)] += cat_t.bulk[i]
        for side, idx in ((0, 0), (1, n_sites - 1)):
            if cat_t.boundary[side] > 0:
                L[s, s ^ (1 << idx)] += cat_t.boundary[side]
        lam_u = cat_u.total()
        lam_t = cat_t.total()
        L[s, s] -= lam_u + (lam_t - lam_u)

    probs = np.array([float(params.gamma(x)) for x in params.sites_x])
    mu0 = np.ones(n_states)
    for s in range(n_states):
        for i in range(n_sites):
            mu0[s] *= probs[i] if (s >> i) & 1 else 1.0 - probs[i]
    return float(mu0 @ expm(params.T * L) @ np.ones(n_states))
