"""Energy-efficiency maximization by Dinkelbach iteration over a Lagrangian dual.

For a fixed ratio ``q`` the parametric problem ``max R - q P`` is relaxed with
multipliers ``mu`` (rate floors), ``gamma`` (per-DBS power caps) and
``upsilon`` (wireless fronthaul capacity). The relaxed problem separates per
resource block: every candidate UE gets multi-level water-filling power and
the block goes to the UE with the largest positive score ``H``.

Two inner minimizers of the dual are provided. ``"subgradient"`` follows the
projected subgradient recursion with a diminishing step. ``"coordinate"``
(the default) minimizes the dual exactly over one multiplier family at a
time, which removes the step-size tuning and converges in a few sweeps.
Either way, dual iterates are turned into primal candidates by fixing the
assignment and solving the remaining convex power problem (``_polish``),
and the best feasible candidate is kept.

Internally the solver works with the denominator ``d_m = gamma_m + q phi``
instead of ``gamma_m`` and with ``e = B0 N0 / g``, the noise-to-gain ratio.
"""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InvalidArgumentError, SolverStateError
from .model import (LN2, AllocationSolution, ChannelState, DualState, PowerModel,
                    SystemConfig, Topology, compute_rate)

MU_MAX = 1e6
_REPAIR_ROUNDS = 12


class SolverStatus(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class FronthaulGroups:
    """Wireless fronthaul capacity constraints.

    Each group is a set of DBS indices whose summed rate is capped. The pooled
    constraint is one group holding every wireless DBS; the static baseline
    uses one group per wireless DBS.
    """

    members: Tuple[Tuple[int, ...], ...]
    caps_bps: Tuple[float, ...]

    def __post_init__(self):
        members = tuple(tuple(int(m) for m in grp) for grp in self.members)
        caps = tuple(float(c) for c in self.caps_bps)
        if len(members) != len(caps):
            raise InvalidArgumentError("one cap per fronthaul group is required")
        flat = [m for grp in members for m in grp]
        if len(flat) != len(set(flat)):
            raise InvalidArgumentError("a DBS may belong to at most one fronthaul group")
        if any(not np.isfinite(c) or c <= 0 for c in caps):
            raise InvalidArgumentError("fronthaul caps must be finite and > 0")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "caps_bps", caps)

    @classmethod
    def pooled(cls, topo: Topology, cap_bps: float) -> "FronthaulGroups":
        wireless = tuple(int(m) for m in np.flatnonzero(topo.wireless))
        if not wireless:
            return cls((), ())
        return cls((wireless,), (cap_bps,))

    @classmethod
    def per_dbs(cls, topo: Topology, cap_each_bps: float) -> "FronthaulGroups":
        wireless = [int(m) for m in np.flatnonzero(topo.wireless)]
        return cls(tuple((m,) for m in wireless), tuple(cap_each_bps for _ in wireless))

    @property
    def num_groups(self) -> int:
        return len(self.members)

    def group_of(self, num_dbs: int) -> np.ndarray:
        out = np.full(num_dbs, -1, dtype=int)
        for g, grp in enumerate(self.members):
            if max(grp) >= num_dbs:
                raise InvalidArgumentError("fronthaul group references a missing DBS")
            out[list(grp)] = g
        return out


@dataclass(frozen=True)
class FeasibilityReport:
    """Signed slacks of the rate, power, fronthaul and exclusivity constraints.

    Absolute slacks are in bit/s (C1, C3), W (C2) and RB counts (C4). The
    relative slacks divide by the bound. Positive means satisfied.
    """

    c1_slack_bps: np.ndarray
    c2_slack_w: np.ndarray
    c3_slack_bps: np.ndarray
    c4_slack: np.ndarray
    c1_relative: np.ndarray
    c2_relative: np.ndarray
    c3_relative: np.ndarray
    tol: float

    @property
    def c3_slack(self) -> float:
        """Scalar fronthaul slack: the tightest group (``inf`` without groups)."""
        return float(self.c3_slack_bps.min()) if self.c3_slack_bps.size else float("inf")

    @property
    def max_violation(self) -> float:
        worst = [0.0]
        for arr in (self.c1_relative, self.c2_relative, self.c3_relative):
            if arr.size:
                worst.append(float(-arr.min()))
        if self.c4_slack.size:
            worst.append(float(-self.c4_slack.min()))
        return max(worst)

    @property
    def feasible(self) -> bool:
        return self.max_violation <= self.tol

    def as_dict(self) -> dict:
        return {
            "c1_relative_min": float(self.c1_relative.min()) if self.c1_relative.size else None,
            "c2_relative_min": float(self.c2_relative.min()) if self.c2_relative.size else None,
            "c3_relative_min": float(self.c3_relative.min()) if self.c3_relative.size else None,
            "c4_min": float(self.c4_slack.min()) if self.c4_slack.size else None,
            "max_violation": self.max_violation,
            "feasible": self.feasible,
        }


@dataclass(frozen=True)
class SolverReport:
    q_trace: Tuple[float, ...]
    f_trace: Tuple[float, ...]
    dual_residuals: dict
    status: SolverStatus
    dual_iterations: Tuple[int, ...] = ()
    runtime_s: float = 0.0

    def as_dict(self) -> dict:
        return {
            "q_trace": list(self.q_trace),
            "f_trace": list(self.f_trace),
            "dual_residuals": dict(self.dual_residuals),
            "status": self.status.value,
            "dual_iterations": list(self.dual_iterations),
            "runtime_s": self.runtime_s,
        }


# ---------------------------------------------------------------------------
# closed forms


def waterfill_power(gain, q, mu_k, gamma_m, upsilon, w_m, cfg: SystemConfig, phi_e=None):
    """Multi-level water-filling power of one (or many broadcast) candidates.

    ``p = [B0/ln2 (1 + mu_k - upsilon w_m) / (gamma_m + q phi) - B0 N0 / g]^+``.

    Raises
    ------
    SolverStateError
        If ``gamma_m + q phi`` is not strictly positive.
    """
    phi = cfg.phi_e if phi_e is None else phi_e
    denom = np.asarray(gamma_m, dtype=float) + q * phi
    if np.any(denom <= 0):
        raise SolverStateError("gamma_m + q*phi_e must be > 0 (q = 0 with gamma_m = 0)")
    g = np.asarray(gain, dtype=float)
    if np.any(g <= 0):
        raise InvalidArgumentError("gain must be > 0")
    b0 = cfg.rb_bandwidth_hz
    a = 1.0 + np.asarray(mu_k, dtype=float) - np.asarray(upsilon, dtype=float) * np.asarray(w_m, dtype=float)
    level = b0 / LN2 * np.maximum(a, 0.0) / denom
    out = np.maximum(level - b0 * cfg.noise_psd_w_per_hz / g, 0.0)
    return float(out) if out.ndim == 0 else out


def select_assignment(score: np.ndarray) -> np.ndarray:
    """Give each (m, n) to the argmax UE of ``score[:, m, n]`` if its score is > 0.

    Ties go to the lowest UE index.
    """
    best = score.argmax(axis=0)
    top = np.take_along_axis(score, best[None], axis=0)[0]
    alpha = np.zeros(score.shape, dtype=bool)
    mi, ni = np.nonzero(top > 0)
    alpha[best[mi, ni], mi, ni] = True
    return alpha


# ---------------------------------------------------------------------------
# internal problem representation


class _Problem:
    """Pre-computed arrays of one instance for one power model."""

    def __init__(self, ch: ChannelState, topo: Topology, cfg: SystemConfig,
                 pm: PowerModel, fronthaul: FronthaulGroups):
        K, M1, N = ch.shape
        if topo.num_dbs != M1 or topo.num_ues != K:
            raise InvalidArgumentError(
                f"channel shape {ch.shape} does not match topology ({K} UEs, {topo.num_dbs} DBSs)")
        if N != cfg.num_rbs:
            raise InvalidArgumentError(f"channel has {N} RBs, configuration has {cfg.num_rbs}")
        self.K, self.M1, self.N = K, M1, N
        self.cfg = cfg
        self.b0 = cfg.rb_bandwidth_hz
        self.c = self.b0 / LN2
        self.e = self.b0 * cfg.noise_psd_w_per_hz / ch.gains
        self.inv_e = 1.0 / self.e
        self.log2_inv_e = np.log2(self.inv_e)
        self._col_cache = {}
        self.pmax = topo.max_power_w
        self.rmin = cfg.min_rates(K)
        self.phi = pm.phi_e
        self.p_static = pm.p_static_w
        self.groups = fronthaul
        self.group_of = fronthaul.group_of(M1)
        self.caps = np.array(fronthaul.caps_bps, dtype=float)
        self.G = fronthaul.num_groups
        self.wcols = np.flatnonzero(self.group_of >= 0)
        self.tol = cfg.constraint_tol

    def base(self, q: float) -> float:
        # The floor is relative to B0/ln2: an absolute 1e-9 would push the
        # wireless water level below double precision when power is free.
        return q * self.phi if q > 0 else self.cfg.denominator_floor * self.c

    def ups_cols(self, ups: np.ndarray) -> np.ndarray:
        out = np.zeros(self.M1)
        if self.G:
            out[self.wcols] = ups[self.group_of[self.wcols]]
        return out

    def fields(self, mu, d, ups_m, cols=None):
        """Rate, power and score tensors at the given multipliers.

        ``d`` and ``ups_m`` are full-length per-DBS arrays; ``cols`` restricts
        the evaluation to a subset of DBSs.
        """
        a = 1.0 + mu[:, None] - ups_m[None, :]
        if cols is None:
            e, log_inv_e = self.e, self.log2_inv_e
        else:
            a, d = a[:, cols], d[cols]
            e, log_inv_e = self._sub(cols)
        level = self.c * np.maximum(a, 0.0) / d[None, :]
        with np.errstate(divide="ignore"):
            log_level = np.log2(level)
        R = self.b0 * np.maximum(log_level[:, :, None] + log_inv_e, 0.0)
        p = np.where(R > 0, np.maximum(level[:, :, None] - e, 0.0), 0.0)
        H = a[:, :, None] * R - d[None, :, None] * p
        return R, p, H

    def _sub(self, cols):
        key = tuple(int(c) for c in cols)
        if key not in self._col_cache:
            self._col_cache[key] = (self.e[:, cols], self.log2_inv_e[:, cols])
        return self._col_cache[key]

    def evaluate(self, alpha, power):
        """Rates, totals and relative violations of an allocation."""
        R = np.where(alpha, self.b0 * np.log1p(power * self.inv_e) / LN2, 0.0)
        return self.measure(R, power * alpha)

    def measure(self, R, P):
        rate_k = R.sum(axis=(1, 2))
        spent = P.sum(axis=(0, 2))
        v1 = np.maximum(self.rmin - rate_k, 0.0) / np.maximum(self.rmin, 1.0)
        v2 = np.maximum(spent - self.pmax, 0.0) / self.pmax
        if self.G:
            rate_m = R.sum(axis=(0, 2))
            grp_rate = np.bincount(self.group_of[self.wcols], rate_m[self.wcols], self.G)
            v3 = np.maximum(grp_rate - self.caps, 0.0) / self.caps
        else:
            v3 = np.zeros(0)
        viol = max(v1.max(initial=0.0), v2.max(initial=0.0), v3.max(initial=0.0))
        r_tot = float(R.sum())
        p_tot = self.phi * float(P.sum()) + self.p_static
        return r_tot, p_tot, viol, v1


@dataclass
class _Candidate:
    alpha: np.ndarray
    power: np.ndarray
    rate: float
    power_total: float
    violation: float
    mu: np.ndarray
    d: np.ndarray
    ups: np.ndarray
    q: float = 0.0

    def objective(self, q: float) -> float:
        return self.rate - q * self.power_total


# ---------------------------------------------------------------------------
# exact block minimization of the dual (full assignment freedom)


def _bisect_smallest(ok, lo, hi, steps):
    """Vectorized bisection for the smallest x in [lo, hi] with ok(x) true (hi assumed ok)."""
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        f = ok(mid)
        hi = np.where(f, mid, hi)
        lo = np.where(f, lo, mid)
    return hi


def _gamma_block(prob: _Problem, mu, ups, q, d, rounds=6):
    """Per-DBS denominators meeting the power caps under the induced assignment.

    Alternates between the score-maximizing assignment and exact
    water-filling of each DBS's budget over its assigned RBs until the
    denominators settle.
    """
    base = prob.base(q)
    ups_m = prob.ups_cols(ups)
    a_km = 1.0 + mu[:, None] - ups_m[None, :]
    d = np.maximum(d, base)
    for _ in range(rounds):
        R, p, H = prob.fields(mu, d, ups_m)
        alpha = select_assignment(H)
        k, m, n = np.nonzero(alpha)
        t = _waterfill_groups(m, prob.c * a_km[k, m], prob.e[k, m, n], prob.pmax, prob.M1)
        with np.errstate(divide="ignore"):
            new_d = np.maximum(base, 1.0 / t)
        settled = np.max(np.abs(np.log(new_d / d))) < 1e-6
        d = new_d
        if settled:
            break
    return d


def _upsilon_block(prob: _Problem, mu, d, ups):
    """Per-group smallest fronthaul multiplier whose group rate meets its cap."""
    if not prob.G:
        return ups
    cols = prob.wcols
    gidx = prob.group_of[cols]

    def grp_rate(u):
        ups_m = np.zeros(prob.M1)
        ups_m[cols] = u[gidx]
        R, p, H = prob.fields(mu, d, ups_m, cols)
        rate_m = (R * select_assignment(H)).sum(axis=(0, 2))
        return np.bincount(gidx, rate_m, prob.G)

    zero_ok = grp_rate(np.zeros(prob.G)) <= prob.caps
    lo = np.zeros(prob.G)
    hi = np.full(prob.G, 1.0 + float(mu.max()))
    out = _bisect_smallest(lambda u: grp_rate(u) <= prob.caps, lo, hi, 30)
    return np.where(zero_ok, 0.0, out)


def _mu_block(prob: _Problem, mu, d, ups, tol):
    """Gauss-Seidel pass: each UE gets the smallest multiplier meeting its floor."""
    ups_m = prob.ups_cols(ups)
    R, p, H = prob.fields(mu, d, ups_m)
    Hp = np.maximum(H, 0.0)
    alpha = select_assignment(H)
    rate_k = (R * alpha).sum(axis=(1, 2))
    mu = mu.copy()
    moved = 0.0
    rmin = prob.rmin
    order = np.argsort(rate_k / np.maximum(rmin, 1.0), kind="stable")
    e, inv_e = prob.e, prob.inv_e
    for k in order:
        if rmin[k] <= 0 or (rate_k[k] >= rmin[k] and mu[k] == 0):
            continue
        others = np.delete(Hp, k, axis=0).max(axis=0) if prob.K > 1 else np.zeros((prob.M1, prob.N))

        def own(mk):
            a = 1.0 + mk - ups_m
            level = prob.c * np.maximum(a, 0.0) / d
            x = np.maximum(level[:, None] * inv_e[k], 1.0)
            Rk = prob.b0 * np.log2(x)
            pk = np.where(x > 1.0, level[:, None] - e[k], 0.0)
            Hk = a[:, None] * Rk - d[:, None] * pk
            won = Hk > others
            return float((Rk * won).sum()), Rk, pk, Hk

        current = own(mu[k])[0]
        if current >= rmin[k]:
            if mu[k] == 0 or own(mu[k] * (1 - 1e-4))[0] < rmin[k]:
                continue
        elif current >= rmin[k] * (1 - 0.3 * tol):
            continue
        if own(0.0)[0] >= rmin[k]:
            new = 0.0
        else:
            lo, hi = 0.0, max(mu[k], 0.05)
            while own(hi)[0] < rmin[k] and hi < MU_MAX:
                lo, hi = hi, min(hi * 4.0, MU_MAX)
            for _ in range(48):
                mid = 0.5 * (lo + hi)
                if own(mid)[0] >= rmin[k]:
                    hi = mid
                else:
                    lo = mid
                if hi - lo <= 1e-4 * hi:
                    break
            new = hi
        moved = max(moved, abs(new - mu[k]) / (1.0 + mu[k]))
        mu[k] = new
        _, Rk, pk, Hk = own(new)
        H[k] = Hk
        Hp[k] = np.maximum(Hk, 0.0)
    return mu, moved


# ---------------------------------------------------------------------------
# primal recovery for a fixed assignment


def _slot_upper_bound(prob: _Problem, k, m, e):
    """Largest rate each UE could reach on its slots if every DBS served it alone."""
    npairs = prob.K * prob.M1
    pairs = k * prob.M1 + m
    budget = np.tile(prob.pmax, prob.K)
    e_min = np.full(npairs, np.inf)
    e_max = np.zeros(npairs)
    np.minimum.at(e_min, pairs, e)
    np.maximum.at(e_max, pairs, e)
    used = np.isfinite(e_min)
    lo = np.where(used, np.log(np.where(used, e_min, 1.0)), 0.0)
    hi = np.where(used, np.log(budget + e_max), 1.0)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        spent = np.bincount(pairs, np.maximum(np.exp(mid)[pairs] - e, 0.0), npairs)
        f = spent <= budget
        lo = np.where(f, mid, lo)
        hi = np.where(f, hi, mid)
    rates = prob.b0 * np.log2(np.maximum(np.exp(lo)[pairs] / e, 1.0))
    return np.bincount(k, rates, prob.K)


def _waterfill_groups(group, weight, e, budget, num_groups):
    """Per group, the ``t >= 0`` solving ``sum_j (weight_j t - e_j)^+ = budget``.

    Slots with non-positive weight never switch on. Groups whose slots can
    never spend anything get ``t = inf``.
    """
    t = np.full(num_groups, np.inf)
    live = weight > 0
    if not live.any():
        return t
    g, w, ee = group[live], weight[live], e[live]
    brk = ee / w
    order = np.lexsort((brk, g))
    g, w, ee, brk = g[order], w[order], ee[order], brk[order]
    bounds = np.flatnonzero(np.r_[True, g[1:] != g[:-1], True])
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        cand = (budget[g[lo]] + np.cumsum(ee[lo:hi])) / np.cumsum(w[lo:hi])
        # the valid prefix is contiguous; its last entry fixes t
        valid = np.flatnonzero(cand > brk[lo:hi])
        if valid.size:
            t[g[lo]] = cand[valid[-1]]
    return t


def _newton_increasing(fdf, x, lo, hi, ftol, iters=60):
    """Safeguarded vectorized Newton iteration for roots of increasing functions.

    ``fdf(x)`` returns ``(f, df)``. Components start in the bracket
    ``[lo, hi]`` with ``f(lo) < 0 <= f(hi)``; a Newton step leaving the
    bracket is replaced by bisection.
    """
    x = np.clip(x, lo, hi)
    for _ in range(iters):
        f, df = fdf(x)
        done = (np.abs(f) <= ftol) | (hi - lo <= 1e-13 * (1.0 + np.abs(hi)))
        if done.all():
            break
        lo = np.where(f < 0, x, lo)
        hi = np.where(f > 0, x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = x - f / df
        inside = np.isfinite(step) & (step > lo) & (step < hi)
        x = np.where(done, x, np.where(inside, step, 0.5 * (lo + hi)))
    return x


def _polish(prob: _Problem, alpha, mu, d, ups, q, max_sweeps=200):
    """Optimal powers and multipliers for a fixed assignment.

    Block minimization of the dual of the convex power problem left after
    fixing ``alpha``: per-UE ``mu`` and per-group ``upsilon`` by safeguarded
    Newton iteration, per-DBS denominators by exact water-filling. Returns
    the candidate (``None`` if some UE cannot reach its floor on its slots)
    and a boolean mask of such UEs.
    """
    k, m, n = np.nonzero(alpha)
    K, M1, G = prob.K, prob.M1, prob.G
    e = prob.e[k, m, n]
    rmin = prob.rmin
    need_mu = rmin > 0
    short = (np.bincount(k, minlength=K) == 0) & need_mu
    if e.size:
        short |= (_slot_upper_bound(prob, k, m, e) < rmin * (1 - 1e-9)) & need_mu
    if short.any():
        return None, short

    base = prob.base(q)
    grp = prob.group_of[m]
    wmask = grp >= 0
    wgrp = grp[wmask]
    mu = np.where(need_mu, mu, 0.0).astype(float)
    d = np.maximum(d.astype(float), base)
    ups = ups.astype(float).copy()
    target = 0.01 * prob.tol
    b0, c, kappa = prob.b0, prob.c, prob.b0 / LN2

    def slot_a(mu_, ups_):
        a = 1.0 + mu_[k]
        if G:
            a = a.copy()
            a[wmask] -= ups_[wgrp]
        return a

    def slot_rate(a, d_):
        level = c * np.maximum(a, 0.0) / d_[m]
        x = level / e
        on = x > 1.0
        return np.where(on, b0 * np.log2(np.where(on, x, 1.0)), 0.0), on, level

    Pt = np.zeros(alpha.shape)
    for sweep in range(max_sweeps):
        moved = 0.0
        # rate floors
        ups_slot = np.zeros(e.size)
        if G:
            ups_slot[wmask] = ups[wgrp]

        def mu_fdf(mv):
            a = 1.0 + mv[k] - ups_slot
            R, on, _ = slot_rate(a, d)
            dR = np.where(on, kappa / np.where(on, a, 1.0), 0.0)
            return np.bincount(k, R, K) - rmin, np.bincount(k, dR, K)

        f0, _ = mu_fdf(np.zeros(K))
        todo = need_mu & (f0 < 0)
        new_mu = np.zeros(K)
        if todo.any():
            hi = np.maximum(mu * 2.0, 1.0)
            for _ in range(40):
                fh, _ = mu_fdf(hi)
                grow = todo & (fh < 0) & (hi < MU_MAX)
                if not grow.any():
                    break
                hi = np.where(grow, np.minimum(hi * 4.0, MU_MAX), hi)
            lo = np.zeros(K)
            root = _newton_increasing(mu_fdf, np.where(todo, mu, 0.0), lo, hi, 1e-9 * np.maximum(rmin, 1.0))
            new_mu = np.where(todo, root, 0.0)
        moved = max(moved, float(np.max(np.abs(new_mu - mu) / (1.0 + mu), initial=0.0)))
        mu = new_mu

        # fronthaul groups
        if G:
            a_base = 1.0 + mu[k[wmask]]
            d_w = d[m[wmask]]
            e_w = e[wmask]

            def ups_fdf(u):
                a = a_base - u[wgrp]
                level = c * np.maximum(a, 0.0) / d_w
                x = level / e_w
                on = x > 1.0
                R = np.where(on, b0 * np.log2(np.where(on, x, 1.0)), 0.0)
                dR = np.where(on, kappa / np.where(on, a, 1.0), 0.0)
                return prob.caps - np.bincount(wgrp, R, G), np.bincount(wgrp, dR, G)

            f0, _ = ups_fdf(np.zeros(G))
            todo = f0 < 0
            new_ups = np.zeros(G)
            if todo.any():
                hi = np.full(G, 1.0 + float(mu.max()))
                root = _newton_increasing(ups_fdf, np.where(todo, ups, 0.0), np.zeros(G), hi,
                                          1e-9 * prob.caps)
                new_ups = np.where(todo, root, 0.0)
            moved = max(moved, float(np.max(np.abs(new_ups - ups), initial=0.0)))
            ups = new_ups

        # power caps
        a = slot_a(mu, ups)
        t = _waterfill_groups(m, c * a, e, prob.pmax, M1)
        with np.errstate(divide="ignore"):
            new_d = np.maximum(base, 1.0 / t)
        moved = max(moved, float(np.max(np.abs(np.log(new_d / d)))))
        d = new_d

        R, on, level = slot_rate(a, d)
        p = np.where(on, level - e, 0.0)
        Rt = np.zeros(alpha.shape)
        Pt = np.zeros(alpha.shape)
        Rt[k, m, n] = R
        Pt[k, m, n] = p
        r_tot, p_tot, viol, v1 = prob.measure(Rt, Pt)
        if viol <= target or (sweep > 2 and moved < 1e-10):
            break

    alpha_out = alpha & (Pt > 0)
    cand = _Candidate(alpha_out, Pt, r_tot, p_tot, viol, mu, d, ups, q)
    return cand, (v1 > prob.tol) & need_mu


def _repair(prob: _Problem, alpha, short):
    """Move RBs to UEs whose slots cannot carry their floor.

    RB values are estimated at an even split of each DBS's power budget. A
    short UE takes its most valuable RBs, free ones or ones whose owner keeps
    its own floor with a margin, until the estimated deficit is covered.
    """
    k, m, n = np.nonzero(alpha)
    bound = _slot_upper_bound(prob, k, m, prob.e[k, m, n]) if k.size else np.zeros(prob.K)
    share = prob.pmax / prob.N
    value = prob.b0 * np.log2(1.0 + share[None, :, None] * prob.inv_e)
    alpha = alpha.copy()
    owned = alpha.any(axis=0)
    owner = np.where(owned, alpha.argmax(axis=0), -1)
    rmin = prob.rmin
    deficit = rmin - bound
    for kk in np.argsort(-deficit * short, kind="stable"):
        if not short[kk]:
            continue
        gained = 0.0
        need = 1.2 * deficit[kk]
        while gained < need or gained == 0.0:
            own_idx = np.maximum(owner, 0)
            owner_loss = np.take_along_axis(value, own_idx[None], axis=0)[0]
            owner_left = bound[own_idx] - owner_loss
            donor_ok = (owner < 0) | ((owner_left >= 1.05 * rmin[own_idx]) & ~short[own_idx])
            score = np.where(donor_ok & (owner != kk), value[kk], -np.inf)
            flat = int(np.argmax(score))
            if not np.isfinite(score.flat[flat]):
                break
            mi, ni = np.unravel_index(flat, score.shape)
            j = owner[mi, ni]
            if j >= 0:
                alpha[j, mi, ni] = False
                bound[j] -= value[j, mi, ni]
            alpha[kk, mi, ni] = True
            owner[mi, ni] = kk
            gained += value[kk, mi, ni]
            bound[kk] += value[kk, mi, ni]
    return alpha


def _recover(prob: _Problem, alpha, mu, d, ups, q):
    """Polish a dual assignment into a primal candidate, repairing starved UEs."""
    cand = None
    fewest, stalled = np.inf, 0
    for _ in range(_REPAIR_ROUNDS):
        cand, short = _polish(prob, alpha, mu, d, ups, q)
        n_short = int(short.sum())
        if not n_short:
            return cand
        # give up once moving RBs stops helping
        stalled = stalled + 1 if n_short >= fewest else 0
        fewest = min(fewest, n_short)
        repaired = _repair(prob, alpha, short)
        if stalled >= 2 or np.array_equal(repaired, alpha):
            break
        alpha = repaired
    return cand


_WITNESS_MAX_VARS = 200_000
_WITNESS_AFTER_SWEEPS = 3
_RETRY_SWEEPS = 10  # dual sweeps still allowed when the witness finds nothing


def _feasibility_witness(prob: _Problem, time_limit: float = 10.0):
    """A feasible allocation with an even power split per DBS, found by MILP.

    Each DBS picks how many slots ``s`` it activates and gives each
    ``Pmax / s``; binaries choose the slots and their owners so that every
    floor and fronthaul cap holds at those powers. Any solution is feasible
    as it stands, which makes this a fallback for instances where the dual
    iterates never produce a feasible point (tight floors on few slots).
    Large instances only consider ``s = N``.

    Returns
    -------
    (alpha, power) or None
    """
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import coo_matrix

    K, M1, N = prob.K, prob.M1, prob.N
    counts = np.arange(1, N + 1) if K * M1 * N * N <= _WITNESS_MAX_VARS else np.array([N])
    S = counts.size
    share = prob.pmax[:, None] / counts[None, :]
    rate = prob.b0 * np.log2(1.0 + share[None, :, None, :] * prob.inv_e[..., None])
    nx, ny = K * M1 * N * S, M1 * S
    kk, mm, nn, ss = (a.ravel() for a in np.indices((K, M1, N, S)))
    xid = np.arange(nx)
    yid = nx + np.arange(ny).reshape(M1, S)
    r = rate.ravel()
    cons = []

    def add(rows, cols, vals, n_rows, lo, hi):
        A = coo_matrix((vals, (rows, cols)), shape=(n_rows, nx + ny)).tocsr()
        cons.append(LinearConstraint(A, lo, hi))

    # one owner per slot, at most s active slots on a DBS that chose s, one s per DBS
    add(mm * N + nn, xid, np.ones(nx), M1 * N, -np.inf, 1.0)
    add(np.r_[mm * S + ss, np.arange(ny)], np.r_[xid, yid.ravel()],
        np.r_[np.ones(nx), -np.tile(counts, M1).astype(float)], ny, -np.inf, 0.0)
    add(np.repeat(np.arange(M1), S), yid.ravel(), np.ones(ny), M1, 1.0, 1.0)
    need = prob.rmin > 0
    if need.any():
        row_of = np.cumsum(need) - 1
        sel = need[kk]
        add(row_of[kk[sel]], xid[sel], r[sel] / prob.rmin[kk[sel]], int(need.sum()), 1.0, np.inf)
    if prob.G:
        grp = prob.group_of[mm]
        sel = grp >= 0
        add(grp[sel], xid[sel], r[sel] / prob.caps[grp[sel]], prob.G, -np.inf, 1.0)
    cost = np.r_[-r / (prob.b0 * max(M1 * N, 1)), np.zeros(ny)]
    res = milp(cost, constraints=cons, integrality=np.ones(nx + ny), bounds=Bounds(0, 1),
               options={"time_limit": time_limit})
    if res.x is None:
        return None
    x = res.x[:nx].reshape(K, M1, N, S) > 0.5
    alpha = x.any(axis=3)
    power = np.where(alpha, np.take_along_axis(share[None, :, None, :].repeat(K, 0).repeat(N, 2),
                                                x.argmax(axis=3)[..., None], axis=3)[..., 0], 0.0)
    return alpha, power


def _witness_candidate(prob: _Problem, mu, d, ups) -> Optional[_Candidate]:
    """The MILP witness with its powers re-optimized for the ratio (fixed assignment)."""
    found = _feasibility_witness(prob)
    if found is None:
        return None
    alpha, power = found
    r_tot, p_tot, viol, _ = prob.evaluate(alpha, power)
    if viol > prob.tol:
        return None
    cand = _Candidate(alpha, power, r_tot, p_tot, viol, mu, d, ups, 0.0)
    for _ in range(prob.cfg.dinkelbach_max_iters):
        q = cand.rate / cand.power_total
        polished, _ = _polish(prob, alpha, mu, d, ups, q)
        if polished is None or polished.violation > prob.tol or \
                polished.rate / polished.power_total <= q * (1 + 1e-12):
            break
        cand = _canonical(prob, polished)
    return cand


def _rescaled(prob: _Problem, alpha, power):
    """Scale each DBS's powers by ``min(1, Pmax / spent)``."""
    spent = (power * alpha).sum(axis=(0, 2))
    scale = np.minimum(1.0, prob.pmax / np.maximum(spent, 1e-300))
    p = power * alpha * scale[None, :, None]
    r_tot, p_tot, viol, _ = prob.evaluate(alpha, p)
    return r_tot, p_tot, viol, p


# ---------------------------------------------------------------------------
# inner solves at fixed q


def _better(cand: Optional[_Candidate], best: Optional[_Candidate], q: float, tol: float):
    if cand is None or cand.violation > tol:
        return best
    if best is None or cand.objective(q) > best.objective(q):
        return cand
    return best


def _inner_coordinate(prob: _Problem, q, mu, d, ups, best, give_up=None):
    tol = prob.tol
    d = np.maximum(d, prob.base(q))
    sweeps = 0
    stall = 0
    for sweeps in range(1, prob.cfg.coordinate_max_sweeps + 1):
        d_prev, ups_prev = d.copy(), ups.copy()
        d = _gamma_block(prob, mu, ups, q, d)
        ups = _upsilon_block(prob, mu, d, ups)
        mu, mu_moved = _mu_block(prob, mu, d, ups, tol)
        d = _gamma_block(prob, mu, ups, q, d)
        _, _, H = prob.fields(mu, d, prob.ups_cols(ups))
        alpha = select_assignment(H)
        cand = _recover(prob, alpha, mu, d, ups, q)
        prev_obj = best.objective(q) if best is not None else -np.inf
        best = _better(cand, best, q, tol)
        gain = (best.objective(q) - prev_obj) if best is not None else 0.0
        stall = stall + 1 if (best is not None and gain <= 1e-6 * best.power_total) else 0
        moved = max(mu_moved,
                    float(np.max(np.abs(ups - ups_prev), initial=0.0)),
                    float(np.max(np.abs(np.log(d / d_prev)))))
        if best is not None and (moved < prob.cfg.dual_tol or stall >= 2):
            break
        if best is None and give_up is not None and sweeps >= give_up:
            break
    return best, mu, d, ups, sweeps


def _inner_subgradient(prob: _Problem, q, mu, d, ups, best, recover_every=25):
    tol = prob.tol
    base = prob.base(q)
    sched = prob.cfg.step_schedule
    gamma = np.maximum(d - q * prob.phi, 0.0)
    t = 0
    for t in range(1, prob.cfg.dual_max_iters + 1):
        d = np.maximum(gamma + q * prob.phi, base)
        R, p, H = prob.fields(mu, d, prob.ups_cols(ups))
        alpha = select_assignment(H)
        Ra, Pa = R * alpha, p * alpha
        r_tot, p_tot, viol, _ = prob.measure(Ra, Pa)
        cand = _Candidate(alpha, Pa, r_tot, p_tot, viol, mu, d, ups, q)
        if viol > tol:
            r2, p2, v2, P2 = _rescaled(prob, alpha, Pa)
            cand = _Candidate(alpha, P2, r2, p2, v2, mu, d, ups, q)
        best = _better(cand, best, q, tol)
        if t % recover_every == 0 or t == prob.cfg.dual_max_iters:
            best = _better(_recover(prob, alpha, mu, d, ups, q), best, q, tol)
        grads = _normalized(prob, _gradients(prob, Ra, Pa), d)
        new_mu, new_gamma, new_ups = _project_step((mu, gamma, ups), grads, _scheduled_steps(sched, t))
        moved = max(float(np.max(np.abs(new_mu - mu), initial=0.0)),
                    float(np.max(np.abs(new_gamma - gamma) / d)),
                    float(np.max(np.abs(new_ups - ups), initial=0.0)))
        mu, gamma, ups = new_mu, new_gamma, new_ups
        if moved < prob.cfg.dual_tol and best is not None:
            break
    d = np.maximum(gamma + q * prob.phi, base)
    return best, mu, d, ups, t


def _gradients(prob: _Problem, Ra, Pa):
    rate_k = Ra.sum(axis=(1, 2))
    spent = Pa.sum(axis=(0, 2))
    if prob.G:
        rate_m = Ra.sum(axis=(0, 2))
        grp_rate = np.bincount(prob.group_of[prob.wcols], rate_m[prob.wcols], prob.G)
    else:
        grp_rate = np.zeros(0)
    return rate_k - prob.rmin, prob.pmax - spent, prob.caps - grp_rate


def _scheduled_steps(sched, t):
    root = np.sqrt(float(t))
    return sched.c_mu / root, sched.c_gamma / root, sched.c_upsilon / root


def _normalized(prob: _Problem, grads, d):
    """Subgradients divided by their bounds and clipped to [-1, 1].

    The ``gamma`` component is rescaled by the current denominator so that a
    step constant bounds the relative first move of ``gamma + q phi``.
    """
    g_mu, g_gamma, g_ups = grads
    g_mu = np.clip(g_mu / np.maximum(prob.rmin, 1.0), -1.0, 1.0)
    g_gamma = np.clip(g_gamma / prob.pmax, -1.0, 1.0) * d
    if prob.G:
        g_ups = np.clip(g_ups / prob.caps, -1.0, 1.0)
    return g_mu, g_gamma, g_ups


def _project_step(duals, grads, steps):
    """``x <- max(0, x - delta * grad)`` per multiplier family."""
    return tuple(np.maximum(0.0, x - s * g) for x, g, s in zip(duals, grads, steps))


# ---------------------------------------------------------------------------
# public API


def _default_groups(topo: Topology, cfg: SystemConfig, fronthaul: Optional[FronthaulGroups]):
    return FronthaulGroups.pooled(topo, cfg.fronthaul_cap_bps) if fronthaul is None else fronthaul


def _duals_from(prob: _Problem, duals: Optional[DualState], q: float):
    if duals is None:
        duals = DualState.zeros(prob.K, prob.M1, max(prob.G, 1))
    ups = np.asarray(duals.upsilon, dtype=float)
    ups = ups[:prob.G] if ups.size >= prob.G else np.zeros(prob.G)
    d = np.maximum(np.asarray(duals.gamma, dtype=float) + q * prob.phi, prob.base(q))
    return np.asarray(duals.mu, dtype=float).copy(), d, ups.copy()


def _to_dualstate(prob: _Problem, mu, d, ups, q, iters) -> DualState:
    gamma = np.maximum(d - q * prob.phi, 0.0)
    return DualState(np.maximum(mu, 0.0), gamma, ups if prob.G else np.zeros(1), iters)


def _solution(prob: _Problem, cand: _Candidate, iters: int, extra: dict) -> AllocationSolution:
    # the multipliers are reported at the ratio the candidate was computed for
    duals = _to_dualstate(prob, cand.mu, cand.d, cand.ups, cand.q, iters)
    ee = cand.rate / cand.power_total
    return AllocationSolution(cand.alpha, cand.power, ee, duals, extra)


def assign_rbs(ch: ChannelState, q: float, duals: DualState, topo: Topology, cfg: SystemConfig,
               pm: Optional[PowerModel] = None, fronthaul: Optional[FronthaulGroups] = None):
    """Water-filling powers and score-maximizing RB assignment at fixed duals.

    Returns
    -------
    assignment : ndarray of bool, shape (K, M+1, N)
    power : ndarray, shape (K, M+1, N)
        Zero wherever the assignment is zero.
    """
    pm = PowerModel.from_config(cfg) if pm is None else pm
    prob = _Problem(ch, topo, cfg, pm, _default_groups(topo, cfg, fronthaul))
    if q < 0:
        raise InvalidArgumentError("q must be >= 0")
    mu, d, ups = _duals_from(prob, duals, q)
    R, p, H = prob.fields(mu, d, prob.ups_cols(ups))
    alpha = select_assignment(H)
    return alpha, np.where(alpha, p, 0.0)


def subgradient_step(duals: DualState, sol: AllocationSolution, ch: ChannelState, topo: Topology,
                     cfg: SystemConfig, iteration: int, q: float = 0.0,
                     pm: Optional[PowerModel] = None, fronthaul: Optional[FronthaulGroups] = None,
                     step_sizes: Optional[Sequence[float]] = None) -> DualState:
    """One projected subgradient update of all multipliers.

    The subgradients are ``rate_k - rmin_k``, ``Pmax_m - spent_m`` and
    ``cap - fronthaul rate`` and each multiplier moves to
    ``max(0, x - delta * grad)``.

    Parameters
    ----------
    step_sizes : (delta_mu, delta_gamma, delta_upsilon), optional
        Raw step sizes applied to the unscaled subgradients. When omitted,
        the configured schedule ``c / sqrt(iteration)`` is applied to
        subgradients normalized by their bounds.
    """
    if iteration < 1:
        raise InvalidArgumentError("iteration counts from 1")
    pm = PowerModel.from_config(cfg) if pm is None else pm
    prob = _Problem(ch, topo, cfg, pm, _default_groups(topo, cfg, fronthaul))
    R = np.where(sol.assignment, compute_rate(sol.power_w, ch.gains, cfg), 0.0)
    grads = _gradients(prob, R, np.where(sol.assignment, sol.power_w, 0.0))
    ups = np.asarray(duals.upsilon, dtype=float)[:max(prob.G, 1)]
    if not prob.G:
        grads = (grads[0], grads[1], np.zeros(ups.size))
    current = (np.asarray(duals.mu, float), np.asarray(duals.gamma, float), ups)
    if step_sizes is not None:
        new = _project_step(current, grads, tuple(float(s) for s in step_sizes))
    else:
        d = np.maximum(current[1] + q * prob.phi, prob.base(q))
        new = _project_step(current, _normalized(prob, grads, d),
                            _scheduled_steps(cfg.step_schedule, iteration))
    return DualState(new[0], new[1], new[2], duals.iter + 1)


def solve_dual(ch: ChannelState, q: float, topo: Topology, cfg: SystemConfig,
               pm: Optional[PowerModel] = None, fronthaul: Optional[FronthaulGroups] = None,
               duals: Optional[DualState] = None):
    """Best primal-feasible allocation of ``max R - q P`` found by the dual method.

    Returns
    -------
    solution : AllocationSolution
        ``diagnostics["status"]`` is ``"Infeasible"`` when no feasible
        candidate was found; the solution is then empty.
    duals : DualState
        Multipliers at exit, usable as a warm start.
    """
    if not np.isfinite(q) or q < 0:
        raise InvalidArgumentError("q must be finite and >= 0")
    pm = PowerModel.from_config(cfg) if pm is None else pm
    prob = _Problem(ch, topo, cfg, pm, _default_groups(topo, cfg, fronthaul))
    mu, d, ups = _duals_from(prob, duals, q)
    best, mu, d, ups, iters = _run_inner(prob, q, mu, d, ups, None)
    out_duals = _to_dualstate(prob, mu, d, ups, q, iters)
    if best is None:
        empty = AllocationSolution.empty(ch.shape)
        return AllocationSolution(empty.assignment, empty.power_w, 0.0, out_duals,
                                  {"status": SolverStatus.INFEASIBLE.value, "dual_iterations": iters}), out_duals
    sol = _solution(prob, best, iters, {"status": "Feasible", "dual_iterations": iters,
                                           "objective": best.objective(q)})
    return sol, out_duals


def _run_inner(prob, q, mu, d, ups, best, give_up=None):
    if prob.cfg.dual_method == "subgradient":
        return _inner_subgradient(prob, q, mu, d, ups, best)
    return _inner_coordinate(prob, q, mu, d, ups, best, give_up)


def _capacity_bound_infeasible(prob: _Problem) -> bool:
    """True if some UE misses its floor even with every RB of every DBS at full power."""
    K, M1, N = prob.K, prob.M1, prob.N
    bound = np.zeros(K)
    for mm in range(M1):
        e = prob.e[:, mm, :]
        lo = np.log(np.maximum(e.min(axis=1), 1e-300)) - 1.0
        hi = np.log(prob.pmax[mm] + e.max(axis=1))
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            spent = np.maximum(np.exp(mid)[:, None] - e, 0.0).sum(axis=1)
            f = spent <= prob.pmax[mm]
            lo = np.where(f, mid, lo)
            hi = np.where(f, hi, mid)
        bound += prob.b0 * np.log2(np.maximum(np.exp(lo)[:, None] / e, 1.0)).sum(axis=1)
    return bool(np.any(bound < prob.rmin * (1 - prob.tol)))


def solve_ee(ch: ChannelState, topo: Topology, cfg: SystemConfig, pm: Optional[PowerModel] = None,
             fronthaul: Optional[FronthaulGroups] = None,
             initial: Union[AllocationSolution, Sequence[Optional[AllocationSolution]], None] = None):
    """Maximize sum rate over total power by Dinkelbach iteration.

    Starting from ``q = 0``, each step solves ``max R - q P`` with the dual
    method and sets ``q`` to the ratio of the returned allocation. The loop
    stops when ``|R - q P| < dinkelbach_tol * P``.

    Parameters
    ----------
    ch, topo, cfg
        The instance.
    pm : PowerModel, optional
        Power accounting; defaults to the configuration's CDSA constants.
    fronthaul : FronthaulGroups, optional
        Fronthaul constraints; defaults to one pooled group with the
        configured capacity.
    initial : AllocationSolution or sequence of them, optional
        Known allocations, e.g. solutions of more constrained variants. The
        best one that is feasible here competes with every iterate, and the
        result is never worse than it.

    Returns
    -------
    solution : AllocationSolution
    report : SolverReport
    """
    t0 = time.perf_counter()
    pm = PowerModel.from_config(cfg) if pm is None else pm
    prob = _Problem(ch, topo, cfg, pm, _default_groups(topo, cfg, fronthaul))
    if _capacity_bound_infeasible(prob):
        return _infeasible(prob, ch, [], [], [], t0)

    q = 0.0
    mu, d, ups = _duals_from(prob, None, q)
    if initial is None or isinstance(initial, AllocationSolution):
        initial = [initial]
    seed = None
    for init in initial:
        cand = _seed_candidate(prob, init, mu, d, ups)
        if cand is not None and (seed is None or cand.rate / cand.power_total > seed.rate / seed.power_total):
            seed = cand
    best: Optional[_Candidate] = seed
    q_trace: List[float] = []
    f_trace: List[float] = []
    iters: List[int] = []
    status = SolverStatus.MAX_ITERS
    for _ in range(cfg.dinkelbach_max_iters):
        give_up = _WITNESS_AFTER_SWEEPS if best is None else None
        cand, mu, d, ups, n_inner = _run_inner(prob, q, mu, d, ups, best, give_up)
        if cand is None:
            # no dual iterate was feasible yet: restart from a MILP witness,
            # or keep iterating the duals if the MILP finds none either
            witness = _witness_candidate(prob, mu, d, ups)
            cand, mu, d, ups, more = _run_inner(prob, q, mu, d, ups, witness,
                                                None if witness is not None else _RETRY_SWEEPS)
            n_inner += more
        iters.append(n_inner)
        if cand is None:
            return _infeasible(prob, ch, q_trace, f_trace, iters, t0)
        best = cand
        f = best.objective(q)
        # The inner maximum is only approximate. If this candidate also beats
        # what an earlier step recorded, that step undershot: redo it with
        # the better point so the trace keeps the Dinkelbach ordering.
        while f_trace and f >= f_trace[-1]:
            q = q_trace.pop()
            f_trace.pop()
            f = best.objective(q)
        q_trace.append(q)
        f_trace.append(f)
        if abs(f) < cfg.dinkelbach_tol * best.power_total:
            status = SolverStatus.CONVERGED
            break
        q = best.rate / best.power_total

    best = _canonical(prob, best)
    if seed is not None:
        polished, _ = _polish(prob, seed.alpha, mu, d, ups, best.rate / best.power_total)
        for cand in (seed, polished and _canonical(prob, polished)):
            if cand is not None and cand.violation <= prob.tol and \
                    cand.rate / cand.power_total > best.rate / best.power_total:
                best = cand
    final_q = best.rate / best.power_total
    sol = _solution(prob, best, int(sum(iters)), {})
    report_sol = AllocationSolution(sol.assignment, sol.power_w, final_q, sol.duals, {
        "dinkelbach_iterations": len(q_trace),
        "dual_iterations": list(iters),
        "final_f": f_trace[-1],
        "dual_q": best.q,
        "status": status.value,
    })
    residuals = check_feasibility(report_sol, ch, topo, cfg, prob.groups)
    report_sol.diagnostics["residuals"] = residuals.as_dict()
    report = SolverReport(tuple(q_trace), tuple(f_trace), residuals.as_dict(), status,
                          tuple(iters), time.perf_counter() - t0)
    return report_sol, report


def _canonical(prob: _Problem, cand: _Candidate) -> _Candidate:
    """Totals recomputed by one formula, so equal allocations report equal ratios."""
    r_tot, p_tot, viol, _ = prob.evaluate(cand.alpha, cand.power)
    return replace(cand, rate=r_tot, power_total=p_tot, violation=viol)


def _seed_candidate(prob: _Problem, initial: Optional[AllocationSolution], mu, d, ups):
    if initial is None:
        return None
    if initial.assignment.shape != (prob.K, prob.M1, prob.N):
        raise InvalidArgumentError("initial allocation has the wrong shape")
    alpha = initial.assignment.copy()
    power = np.where(alpha, initial.power_w, 0.0)
    r_tot, p_tot, viol, _ = prob.evaluate(alpha, power)
    if viol > prob.tol:
        return None
    return _Candidate(alpha, power, r_tot, p_tot, viol, mu, d, ups)


def _infeasible(prob, ch, q_trace, f_trace, iters, t0):
    empty = AllocationSolution.empty(ch.shape)
    diag = {"dinkelbach_iterations": len(q_trace), "dual_iterations": list(iters),
            "final_f": None, "status": SolverStatus.INFEASIBLE.value}
    sol = AllocationSolution(empty.assignment, empty.power_w, 0.0,
                             DualState.zeros(prob.K, prob.M1, max(prob.G, 1)), diag)
    report = SolverReport(tuple(q_trace), tuple(f_trace), {}, SolverStatus.INFEASIBLE,
                          tuple(iters), time.perf_counter() - t0)
    return sol, report


def check_feasibility(sol: AllocationSolution, ch: ChannelState, topo: Topology, cfg: SystemConfig,
                      fronthaul: Optional[FronthaulGroups] = None,
                      tol: Optional[float] = None) -> FeasibilityReport:
    """Signed slacks of every constraint, recomputed from the allocation."""
    groups = _default_groups(topo, cfg, fronthaul)
    K, M1, N = ch.shape
    if sol.assignment.shape != ch.shape:
        raise InvalidArgumentError("solution and channel shapes differ")
    R = np.where(sol.assignment, compute_rate(sol.power_w, ch.gains, cfg), 0.0)
    P = np.where(sol.assignment, sol.power_w, 0.0)
    rmin = cfg.min_rates(K)
    pmax = topo.max_power_w
    c1 = R.sum(axis=(1, 2)) - rmin
    c2 = pmax - P.sum(axis=(0, 2))
    rate_m = R.sum(axis=(0, 2))
    caps = np.array(groups.caps_bps, dtype=float)
    c3 = np.array([caps[g] - rate_m[list(grp)].sum() for g, grp in enumerate(groups.members)])
    c4 = 1.0 - sol.assignment.sum(axis=0).astype(float)
    return FeasibilityReport(
        c1_slack_bps=c1, c2_slack_w=c2, c3_slack_bps=c3, c4_slack=c4,
        c1_relative=c1 / np.maximum(rmin, 1.0), c2_relative=c2 / pmax,
        c3_relative=c3 / caps if caps.size else np.zeros(0),
        tol=cfg.constraint_tol if tol is None else tol)
