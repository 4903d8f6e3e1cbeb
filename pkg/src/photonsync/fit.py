"""Small weighted nonlinear least-squares fits for the decay and noise models.

The models have 1-3 parameters and analytic Jacobians, so a damped
Gauss-Newton (Levenberg-Marquardt style) loop is all that is needed.
Positivity and range constraints are handled by log / logit
reparameterization so the internal search is unconstrained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import avg_memory_efficiency, memory_efficiency
from .params import DecayModel

MAX_ITER = 200
FTOL = 1e-10


@dataclass
class FitResult:
    names: list[str]
    values: np.ndarray
    errors: np.ndarray              # 1 s.d. from the covariance diagonal
    covariance: np.ndarray          # in external parameter space
    chi2: float
    dof: int
    converged: bool
    n_iter: int = 0

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    def error(self, name: str) -> float:
        return float(self.errors[self.names.index(name)])

    def report(self) -> str:
        lines = [f"converged={self.converged}  chi2={self.chi2:.6g}  dof={self.dof}"]
        for n, v, e in zip(self.names, self.values, self.errors):
            lines.append(f"  {n} = {v:.8g} +- {e:.3g}")
        return "\n".join(lines)


def lm_fit(residual_jac, u0, max_iter: int = MAX_ITER, ftol: float = FTOL):
    """Minimize 0.5*||r(u)||^2 given a callable returning (r, J) at u.

    Returns (u, converged, n_iter). J is d r / d u.
    """
    u = np.asarray(u0, dtype=float).copy()
    r, jac = residual_jac(u)
    cost = 0.5 * float(r @ r)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        jtj = jac.T @ jac
        g = jac.T @ r
        if np.linalg.norm(g, ord=np.inf) < 1e-14:
            converged = True
            break
        step_ok = False
        for _ in range(50):
            try:
                step = np.linalg.solve(jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-12)), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            u_new = u + step
            r_new, jac_new = residual_jac(u_new)
            cost_new = 0.5 * float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                rel = (cost - cost_new) / max(cost, 1e-300)
                u, r, jac, cost = u_new, r_new, jac_new, cost_new
                lam = max(lam * 0.3, 1e-12)
                step_ok = True
                if rel < ftol:
                    converged = True
                break
            lam *= 10.0
        if converged or not step_ok:
            converged = converged or not step_ok and cost == 0.0
            break
    return u, converged, it


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def fit_decay(t_ns, eta, sigma, p0: DecayModel | None = None) -> FitResult:
    """Weighted fit of the decoherence model to (t, eta, sigma_eta) points.

    Parameters are (eta0, tau_sigma_ns, tau_gamma_ns); errors are 1 s.d.
    """
    t = np.asarray(t_ns, dtype=float)
    y = np.asarray(eta, dtype=float)
    s = np.asarray(sigma, dtype=float)
    if t.size < 4:
        raise ValueError("need at least 4 points")
    if np.any(s <= 0):
        raise ValueError("sigma must be > 0")

    eta0_guess = min(max(float(y.max()), 1e-3), 0.999)
    tau_guess = max(float(t.max()), 1.0)
    if p0 is not None:
        starts = [p0]
    else:
        # The Gaussian/exponential split is weakly constrained, so a single
        # start can stall on a pure-exponential plateau; try several splits
        # and keep the lowest-cost solution.
        starts = [DecayModel(eta0=eta0_guess, tau_sigma_ns=ts, tau_gamma_ns=tg)
                  for ts, tg in ((tau_guess, tau_guess),
                                 (tau_guess / 2, 3 * tau_guess),
                                 (3 * tau_guess, tau_guess / 2))]

    def unpack(u):
        # Clip internal coordinates so trial steps far from the optimum
        # stay finite (exp of a large step overflows otherwise).
        v = np.clip(u, -20.0, 20.0)
        return _sigmoid(v[0]), math.exp(v[1]), math.exp(v[2])

    def residual_jac(u):
        eta0, ts, tg = unpack(u)
        m = eta0 * np.exp(-t * t / (2 * ts * ts) - t / tg)
        r = (m - y) / s
        # d m / d(external), then chain rule to internal coordinates
        d_eta0 = m / eta0 * (eta0 * (1 - eta0))            # * d eta0/d u0
        d_ts = m * (t * t / ts**3) * ts                    # * d ts/d u1
        d_tg = m * (t / tg**2) * tg                        # * d tg/d u2
        jac = np.column_stack([d_eta0, d_ts, d_tg]) / s[:, None]
        return r, jac

    best = None
    for start in starts:
        u0 = np.array([_logit(start.eta0), math.log(start.tau_sigma_ns),
                       math.log(start.tau_gamma_ns)])
        u, converged, it = lm_fit(residual_jac, u0)
        r, _ = residual_jac(u)
        cost = float(r @ r)
        if best is None or cost < best[0]:
            best = (cost, u, converged, it)
    _, u, converged, it = best
    eta0, ts, tg = unpack(u)

    # covariance in external space from the external-parameter Jacobian
    m = eta0 * np.exp(-t * t / (2 * ts * ts) - t / tg)
    jac_ext = np.column_stack([m / eta0, m * t * t / ts**3, m * t / tg**2]) / s[:, None]
    cov = _safe_inv(jac_ext.T @ jac_ext)
    r = (m - y) / s
    return FitResult(
        names=["eta0", "tau_sigma_ns", "tau_gamma_ns"],
        values=np.array([eta0, ts, tg]),
        errors=np.sqrt(np.maximum(np.diag(cov), 0.0)),
        covariance=cov,
        chi2=float(r @ r),
        dof=t.size - 3,
        converged=converged,
        n_iter=it,
    )


def _safe_inv(a: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.inv(a)
    except np.linalg.LinAlgError:
        return np.linalg.pinv(a)


@dataclass(frozen=True)
class G2Dataset:
    """One measured g2-vs-storage-time curve with its fixed per-dataset parameters."""

    t_ns: np.ndarray
    g2: np.ndarray
    sigma: np.ndarray
    rho: float
    decay: DecayModel
    g2_source: float
    transmission: float
    t_offres_factor: float = 0.9


def fit_g2_transmission(datasets: list[G2Dataset], f0: float = 0.05) -> FitResult:
    """Simultaneous fit of the retrieval leak-through fraction across datasets.

    The single shared parameter is t_retrieval_factor (T_retrieval / T).
    """
    if not datasets:
        raise ValueError("need at least one dataset")
    t_all, y_all, s_all, a_all, b_all = [], [], [], [], []
    # model per point: g2 = a + b * f   with
    #   a = g2s * [(1-rho) + rho * t_offres_factor * T / eta]
    #   b = g2s * (1-rho) * T / eta
    for ds in datasets:
        t = np.asarray(ds.t_ns, dtype=float)
        eta = np.array([memory_efficiency(ti, ds.decay) for ti in t])
        a = ds.g2_source * ((1 - ds.rho) + ds.rho * ds.t_offres_factor * ds.transmission / eta)
        b = ds.g2_source * (1 - ds.rho) * ds.transmission / eta
        t_all.append(t)
        y_all.append(np.asarray(ds.g2, dtype=float))
        s_all.append(np.asarray(ds.sigma, dtype=float))
        a_all.append(a)
        b_all.append(b)
    y = np.concatenate(y_all)
    s = np.concatenate(s_all)
    a = np.concatenate(a_all)
    b = np.concatenate(b_all)
    if np.any(s <= 0):
        raise ValueError("sigma must be > 0")

    def residual_jac(u):
        r = (a + b * u[0] - y) / s
        return r, (b / s)[:, None]

    u, converged, it = lm_fit(residual_jac, np.array([f0]))
    f = float(u[0])
    jac = (b / s)[:, None]
    cov = _safe_inv(jac.T @ jac)
    r = (a + b * f - y) / s
    return FitResult(
        names=["t_retrieval_factor"],
        values=np.array([f]),
        errors=np.sqrt(np.maximum(np.diag(cov), 0.0)),
        covariance=cov,
        chi2=float(r @ r),
        dof=y.size - 1,
        converged=converged,
        n_iter=it,
    )


def calibrate_decay(eta0: float, t_1e_ns: float, eta_bar_target: float,
                    t_star_ns: float, tol: float = 1e-9) -> DecayModel:
    """Solve (tau_sigma, tau_gamma) from the 1/e lifetime and the window average.

    The constraint eta(t_1e) = eta0/e pins one combination of the decay
    exponents; the split between Gaussian and exponential character is found
    by bisection so that the [0, t*] average matches eta_bar_target.
    """
    if not (0 < eta0 <= 1 and t_1e_ns > 0 and t_star_ns > 0):
        raise ValueError("eta0, t_1e_ns, t_star_ns must be positive (eta0 <= 1)")

    def model_for(split: float) -> DecayModel:
        # exponent at t_1e: split from the Gaussian term, 1-split from the linear term
        tau_sigma = t_1e_ns / math.sqrt(2 * split) if split > 0 else math.inf
        tau_gamma = t_1e_ns / (1 - split) if split < 1 else math.inf
        return DecayModel(eta0=eta0, tau_sigma_ns=tau_sigma, tau_gamma_ns=tau_gamma)

    def eta_bar(split: float) -> float:
        return avg_memory_efficiency(model_for(split), t_star_ns, tol=1e-9)

    lo_bar, hi_bar = eta_bar(0.0), eta_bar(1.0)
    if not (min(lo_bar, hi_bar) - tol <= eta_bar_target <= max(lo_bar, hi_bar) + tol):
        raise ValueError(
            f"eta_bar_target {eta_bar_target:.6g} outside the feasible interval "
            f"[{min(lo_bar, hi_bar):.6g}, {max(lo_bar, hi_bar):.6g}] "
            f"(pure-exponential to pure-Gaussian bounds)")

    lo, hi = 0.0, 1.0
    if abs(eta_bar_target - lo_bar) <= tol:
        return model_for(0.0)
    if abs(eta_bar_target - hi_bar) <= tol:
        return model_for(1.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if eta_bar(mid) < eta_bar_target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return model_for(0.5 * (lo + hi))
