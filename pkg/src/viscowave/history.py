"""Solution history and the three memory quantities of the wave system.

For a kernel g and stiffness form K the buffer evaluates, at the current
time t,

  convolution force   int_0^t g(t-s) K u(s) ds          (a vector),
  g  o grad u         int_0^t g(t-s) |grad(u(t)-u(s))|^2 ds,
  g' o grad u         the same with g' = -xi g.

Two evaluation paths exist.  Exponential kernels (constant rate) use exact
recursive accumulators equivalent to composite-trapezoid quadrature over the
full step history at O(N) per step.  All other kernels use explicit
trapezoid quadrature over the retained snapshots, with optional stride or
truncation-window storage to keep long runs affordable; trapezoid weights on
the (possibly non-uniform) retained stamps integrate constants exactly.

Snapshots store u, K u and u^T K u at push time, so every later evaluation
is pure accumulation: |grad(u(t)-u(s))|^2 expands into stored quantities.

A buffer built with ``kernel=None`` is the memory-free mode used by
reference and manufactured-solution runs: every quantity is identically
zero.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .kernels import ConstantRate, PowerLawRate, RelaxationKernel

STORAGE_POLICIES = ("auto", "fast", "full", "stride", "window")


def _trap_weights(ts: np.ndarray) -> np.ndarray:
    w = np.zeros(len(ts))
    if len(ts) >= 2:
        w[0] = (ts[1] - ts[0]) / 2.0
        w[-1] = (ts[-1] - ts[-2]) / 2.0
        w[1:-1] = (ts[2:] - ts[:-2]) / 2.0
    return w


class HistoryBuffer:
    """Causal history of one simulation; mutated only by its owning stepper."""

    def __init__(
        self,
        kernel: RelaxationKernel | None,
        n_dofs: int,
        policy: str = "auto",
        stride: int = 2,
        eps_g_rel: float = 1e-8,
    ):
        if policy not in STORAGE_POLICIES:
            raise ValueError(f"unknown storage policy '{policy}'; valid: {STORAGE_POLICIES}")
        self.kernel = kernel
        self.n_dofs = n_dofs
        self.stride = int(stride)
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {stride}")
        self.eps_g_rel = eps_g_rel

        if kernel is None:
            self.policy = "none"
        elif policy == "auto":
            self.policy = "fast" if kernel.fast_path else "full"
        elif policy == "fast":
            if not kernel.fast_path:
                raise ValueError("fast path requires an exponential (constant-rate) kernel")
            self.policy = "fast"
        else:
            self.policy = policy

        self._t_last = None
        self._push_count = 0

        if self.policy == "fast":
            self._alpha = kernel.rate.alpha
            self._acc_ku = np.zeros(n_dofs)
            self._acc_q = 0.0
            self._acc_one = 0.0
            self._ku_last = np.zeros(n_dofs)
            self._q_last = 0.0
        elif self.policy not in ("none",):
            cap = 256
            self._ts = np.zeros(cap)
            self._ku = np.zeros((cap, n_dofs))
            self._u = np.zeros((cap, n_dofs))
            self._q = np.zeros(cap)
            self._count = 0
            self._start = 0
            self._last_is_keeper = True
            if self.policy == "window":
                self._window = self._solve_window(kernel, eps_g_rel)

    @staticmethod
    def _solve_window(kernel: RelaxationKernel, eps_rel: float) -> float:
        # age W with g(W) = eps_rel * g(0), i.e. phi(W) = ln(1/eps_rel)
        target = math.log(1.0 / eps_rel)
        rate = kernel.rate
        if isinstance(rate, ConstantRate):
            return target / rate.alpha
        if isinstance(rate, PowerLawRate):
            return math.exp(target / rate.alpha) - 1.0
        hi = 1.0
        while float(rate.phi(hi)) < target:
            hi *= 2.0
        return brentq(lambda w: float(rate.phi(w)) - target, 0.0, hi)

    @property
    def last_time(self) -> float | None:
        return self._t_last

    @property
    def n_entries(self) -> int:
        if self.policy in ("none", "fast"):
            return self._push_count
        return self._count - self._start

    def push(self, t: float, u: np.ndarray, ku: np.ndarray) -> None:
        """Record the state at time t; t must exceed every earlier stamp."""
        if self._t_last is None:
            if t != 0.0:
                raise ValueError(f"history must start at t = 0, got first push at {t}")
        elif t <= self._t_last:
            raise ValueError(f"non-monotone push: t = {t} after t = {self._t_last}")

        if self.policy == "none":
            self._t_last = t
            self._push_count += 1
            return

        if self.policy == "fast":
            q = float(u @ ku)
            if self._t_last is not None:
                dt = t - self._t_last
                d = math.exp(-self._alpha * dt)
                g0 = self.kernel.g0
                half = 0.5 * dt * g0
                self._acc_ku = d * (self._acc_ku + half * self._ku_last) + half * ku
                self._acc_q = d * (self._acc_q + half * self._q_last) + half * q
                self._acc_one = d * (self._acc_one + half) + half
            self._ku_last = np.array(ku, dtype=float)
            self._q_last = q
            self._t_last = t
            self._push_count += 1
            return

        keep_previous = True
        if self.policy == "stride" and self._count - self._start > 0:
            keep_previous = self._last_is_keeper
        if not keep_previous:
            self._count -= 1  # previous entry was only a running endpoint

        self._ensure_capacity()
        i = self._count
        self._ts[i] = t
        self._u[i] = u
        self._ku[i] = ku
        self._q[i] = float(u @ ku)
        self._count += 1
        self._last_is_keeper = (self._push_count % self.stride == 0)
        self._t_last = t
        self._push_count += 1

        if self.policy == "window":
            cutoff = t - self._window
            while self._count - self._start > 2 and self._ts[self._start] < cutoff:
                self._start += 1

    def _ensure_capacity(self) -> None:
        cap = len(self._ts)
        if self._count < cap:
            return
        new_cap = cap * 2
        for name in ("_ts", "_q"):
            arr = getattr(self, name)
            grown = np.zeros(new_cap)
            grown[: self._count] = arr[: self._count]
            setattr(self, name, grown)
        for name in ("_ku", "_u"):
            arr = getattr(self, name)
            grown = np.zeros((new_cap, self.n_dofs))
            grown[: self._count] = arr[: self._count]
            setattr(self, name, grown)

    def _require_coverage(self, t: float) -> None:
        if self._t_last is None:
            raise ValueError("empty history buffer")
        if abs(t - self._t_last) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(
                f"memory quantities are evaluated at the last stamp; "
                f"got t = {t}, buffer at t = {self._t_last}"
            )

    def _weights_and_ages(self, t: float):
        ts = self._ts[self._start : self._count]
        w = _trap_weights(ts)
        ages = t - ts
        return ts, w, ages

    def convolution_force(self, t: float) -> np.ndarray:
        """int_0^t g(t-s) K u(s) ds."""
        if self.policy == "none":
            return np.zeros(self.n_dofs)
        self._require_coverage(t)
        if self.policy == "fast":
            return self._acc_ku.copy()
        _, w, ages = self._weights_and_ages(t)
        gw = w * self.kernel.g(ages)
        return gw @ self._ku[self._start : self._count]

    def g_diamond(self, t: float, u_now: np.ndarray) -> float:
        """(g o grad u)(t) >= 0; zero for a history constant in time."""
        return self._diamond(t, u_now, prime=False)

    def g_prime_diamond(self, t: float, u_now: np.ndarray) -> float:
        """(g' o grad u)(t) <= 0."""
        return self._diamond(t, u_now, prime=True)

    def _diamond(self, t: float, u_now: np.ndarray, prime: bool) -> float:
        if self.policy == "none":
            return 0.0
        self._require_coverage(t)
        if self.policy == "fast":
            q_now = float(u_now @ self._ku_last)
            val = self._acc_one * q_now - 2.0 * float(u_now @ self._acc_ku) + self._acc_q
            val = max(val, 0.0)  # roundoff guard: exact value is a sum of squares
            return -self._alpha * val if prime else val
        ts, w, ages = self._weights_and_ages(t)
        gv = self.kernel.g_prime(ages) if prime else self.kernel.g(ages)
        gw = w * gv
        ku_h = self._ku[self._start : self._count]
        q_now = float(u_now @ (ku_h[-1]))
        val = (
            gw.sum() * q_now
            - 2.0 * float(u_now @ (gw @ ku_h))
            + float(gw @ self._q[self._start : self._count])
        )
        return min(val, 0.0) if prime else max(val, 0.0)
