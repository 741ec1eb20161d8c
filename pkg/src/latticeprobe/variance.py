"""Estimator variances, analytic bounds, worst cases and Monte Carlo runs.

Every corrected estimate is a linear functional of observed frequencies, so
its single-run variance is sum_i P_exp(i) c_i**2 - mean**2, and after N runs
the standard error is sqrt(V/N).  The corrector coefficients grow with the
error rates, which is where the exponential run-count requirements come from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import channels, correction, network
from .purity import PurityProfile, avpur_profile
from .states import QubitRegisterState

MODES = ("bs", "detector", "combined")
METHODS = ("explicit", "least-squares")

_FEAS_TOL = 1e-12


@dataclass(frozen=True)
class VarianceReport:
    """Single-run variance of one corrected estimator and its bound."""

    k: int
    value: float
    bound: float
    method: str
    mode: str
    n: int
    p: float
    q: float
    sigma: float = 0.0


@dataclass(frozen=True)
class ExperimentSample:
    """Raw outcome record of one simulated experiment (reproducible from seed)."""

    seed: object
    n_runs: int
    outcomes: np.ndarray
    mode: str


@dataclass(frozen=True)
class MonteCarloResult:
    """Corrected estimates from one finite-N simulated experiment.

    ``estimate_variance[k]`` is the estimated variance of the k-th profile
    entry (within-run sample variance of the single-run estimator divided
    by N), so multiplying by N recovers the single-run V_k.
    """

    profile: PurityProfile
    estimate_variance: np.ndarray
    sample: ExperimentSample
    method: str


@dataclass(frozen=True)
class WorstCase:
    value: float
    profile: PurityProfile


def variance_vk(p_exp, coefficients, estimate: float) -> float:
    """sum_i P_exp(i) c_i**2 - estimate**2 for any linear estimator."""
    p_exp = np.asarray(p_exp, dtype=float)
    c = np.asarray(coefficients, dtype=float)
    if p_exp.shape != c.shape:
        raise ValueError(f"coefficients {c.shape} do not match support {p_exp.shape}")
    return float(np.dot(p_exp, c * c) - estimate * estimate)


def estimator_coefficients(
    n: int, p: float, q: float, mode: str, method: str = "explicit"
) -> np.ndarray:
    """Coefficient rows C[k, outcome] of the chosen corrected estimator."""
    if mode == "bs":
        return correction.bs_estimator_matrix(n, q)
    if mode == "detector":
        W = network.avpur_from_pj_matrix(n)
        D = (
            correction.detector_inverse_matrix(n, p)
            if method == "explicit"
            else correction.detector_pinv_matrix(n, p)
        )
        return W @ D
    if mode == "combined":
        return correction.combined_estimator_matrix(n, p, q, method)
    raise ValueError(f"unknown mode {mode!r}")


def forward_matrix(n: int, p: float, q: float, mode: str) -> np.ndarray:
    """Channel matrix from the true P(j) to the observed distribution."""
    if mode == "bs":
        return channels.bs_error_matrix(n, q)
    if mode == "detector":
        return channels.detector_error_matrix(n, p)
    if mode == "combined":
        return channels.detector_error_matrix(n, p) @ channels.bs_error_matrix(n, q)
    raise ValueError(f"unknown mode {mode!r}")


def analytic_bounds(n: int, k: int, p: float, q: float, mode: str) -> float:
    """Worst-case variance bounds from the corrector coefficient magnitudes."""
    rq = (1.0 + q) / (1.0 - q)
    rp = (1.0 + p) / (1.0 - p)
    if mode == "bs":
        return rq ** (2 * k)
    if mode == "detector":
        return rp ** (4 * n)
    if mode == "combined":
        return rp ** (4 * n) * rq ** (2 * k)
    if mode == "spatial-subset":
        rp2 = (1.0 + p * p) / (1.0 - p * p)
        return rp2 ** (2 * k)
    raise ValueError(f"unknown mode {mode!r}")


def profile_of(state_or_profile) -> PurityProfile:
    if isinstance(state_or_profile, PurityProfile):
        return state_or_profile
    if isinstance(state_or_profile, QubitRegisterState):
        return avpur_profile(state_or_profile)
    raise TypeError(f"expected a state or profile, got {type(state_or_profile)!r}")


def state_variances(
    state_or_profile,
    p: float,
    q: float,
    mode: str = "combined",
    method: str = "explicit",
) -> list[VarianceReport]:
    """Per-k variance reports for a concrete state at given error rates."""
    profile = profile_of(state_or_profile)
    n = profile.n
    pj = network.singles_distribution(profile)
    p_exp = forward_matrix(n, p, q, mode) @ np.asarray(pj.probs)
    C = estimator_coefficients(n, p, q, mode, method)
    reports = []
    for k in range(n + 1):
        est = float(np.dot(C[k], p_exp))
        reports.append(
            VarianceReport(
                k=k,
                value=variance_vk(p_exp, C[k], est),
                bound=analytic_bounds(n, k, p, q, mode),
                method=method,
                mode=mode,
                n=n,
                p=p,
                q=q,
            )
        )
    return reports


def subset_bs_variance(subset_purities: dict[int, float], bits: int, q: float) -> float:
    """Variance of the spatially resolved block-purity estimate under pair error.

    Needs the purities of every submask of the block; the block's own
    antisymmetric-count law follows from them by the sign-pattern expansion.
    """
    k = bits.bit_count()
    submasks = [m for m in range(bits + 1) if m & bits == m]
    pj = np.zeros(k + 1)
    for j in range(k + 1):
        acc = 0.0
        for m in submasks:
            size = m.bit_count()
            kraw = 0
            for l in range(max(0, j - (k - size)), min(size, j) + 1):
                kraw += (-1) ** l * math.comb(size, l) * math.comb(k - size, j - l)
            acc += kraw * subset_purities[m]
        pj[j] = acc / (1 << k)
    p_exp = channels.bs_error_matrix(k, q) @ pj
    r = (1.0 + q) / (1.0 - q)
    coeff = np.array([r ** (k - i) * (-1.0) ** i for i in range(k + 1)])
    est = float(np.dot(coeff, p_exp))
    return variance_vk(p_exp, coeff, est)


# -- worst case over purity profiles ------------------------------------------
#
# V as a function of the profile vector a is u.a - (m.a)**2 with u, m fixed by
# the channel and corrector, hence concave; the search is a deterministic
# multi-start (feasible box corners plus seeded interior points) followed by
# exact per-coordinate maximization under the box and, by default, the
# physicality constraint P(j) >= 0.


def _coordinate_ascent(a, u, m, M, lo, constrain, sweeps=300):
    n = a.size - 1
    value = float(np.dot(u, a) - np.dot(m, a) ** 2)
    for _ in range(sweeps):
        for idx in range(1, n + 1):
            alpha, beta = u[idx], m[idx]
            rest_m = float(np.dot(m, a) - m[idx] * a[idx])
            t_lo, t_hi = lo[idx], 1.0
            if constrain:
                pj = M @ a - M[:, idx] * a[idx]
                for row in range(M.shape[0]):
                    coef = M[row, idx]
                    if abs(coef) < 1e-300:
                        if pj[row] < -_FEAS_TOL:
                            t_lo, t_hi = 1.0, 0.0
                        continue
                    bound = (-_FEAS_TOL - pj[row]) / coef
                    if coef > 0:
                        t_lo = max(t_lo, bound)
                    else:
                        t_hi = min(t_hi, bound)
            if t_lo > t_hi:
                continue
            if beta != 0.0:
                t_star = (alpha / (2.0 * beta) - rest_m) / beta
            else:
                t_star = t_hi if alpha >= 0 else t_lo
            t_new = min(max(t_star, t_lo), t_hi)
            if t_new != a[idx]:
                a[idx] = t_new
        new_value = float(np.dot(u, a) - np.dot(m, a) ** 2)
        if new_value - value < 1e-15:
            value = new_value
            break
        value = new_value
    return value, a


def worst_case_variance(
    n: int,
    k: int,
    p: float = 0.0,
    q: float = 0.0,
    mode: str = "bs",
    method: str = "explicit",
    constrain_pj: bool = True,
    seed: int = 0,
    n_random: int = 32,
    n_corner_starts: int = 8,
) -> WorstCase:
    """Maximize V_k over profiles inside the purity box.

    By default the profile must also map to a nonnegative P(j), which keeps
    the maximizer physically meaningful; pass ``constrain_pj=False`` for the
    box-only variant.  Deterministic for fixed seed.
    """
    M_singles = network.singles_count_matrix(n)
    T = forward_matrix(n, p, q, mode) @ M_singles
    c = estimator_coefficients(n, p, q, mode, method)[k]
    u = T.T @ (c * c)
    m = T.T @ c
    lo = 2.0 ** -np.arange(n + 1)

    def feasible(batch):
        if not constrain_pj:
            return np.ones(batch.shape[0], dtype=bool)
        return (batch @ M_singles.T).min(axis=1) >= -_FEAS_TOL

    starts = [np.ones(n + 1)]
    ghz = np.full(n + 1, 0.5)
    ghz[0] = ghz[n] = 1.0
    starts.append(ghz)

    if n <= 15:
        corners = np.ones((1 << n, n + 1))
        bits = (np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1
        corners[:, 1:] = np.where(bits.astype(bool), lo[1:][None, :], 1.0)
        ok = feasible(corners)
        if ok.any():
            vals = corners[ok] @ u - (corners[ok] @ m) ** 2
            order = np.argsort(vals)[::-1][:n_corner_starts]
            starts.extend(corners[ok][order])

    rng = np.random.default_rng(seed)
    anchor = np.ones(n + 1)
    for _ in range(n_random):
        cand = np.empty(n + 1)
        cand[0] = 1.0
        cand[1:] = rng.uniform(lo[1:], 1.0)
        if constrain_pj:
            blend = 1.0
            for _ in range(40):
                trial = anchor + blend * (cand - anchor)
                if feasible(trial[None, :])[0]:
                    cand = trial
                    break
                blend *= 0.5
            else:
                cand = anchor.copy()
        starts.append(cand)

    best_val = -math.inf
    best_a = None
    for start in starts:
        val, a = _coordinate_ascent(start.copy(), u, m, M_singles, lo, constrain_pj)
        if val > best_val:
            best_val = val
            best_a = a
    return WorstCase(value=best_val, profile=PurityProfile(n=n, avpur=best_a))


# -- worst case over spatially resolved site-set distributions ----------------


def spatial_purity_coefficients(kernel: np.ndarray, n: int, bits: int, method: str):
    """(coefficients over position multisets, outcome list) estimating pur(B)."""
    if method == "explicit":
        C, outs = correction.spatial_explicit_matrix(kernel, n)
    elif method == "least-squares":
        F, outs = channels.spatial_forward_matrix(kernel, n)
        if np.linalg.matrix_rank(F) < (1 << n):
            raise correction.SingularCorrectionError("blur channel lost column rank")
        C = np.linalg.pinv(F)
    else:
        raise ValueError(f"unknown method {method!r}")
    signs = np.array([(-1.0) ** (bits & b).bit_count() for b in range(1 << n)])
    return signs @ C, outs


def spatial_subset_variance(
    site_probs: dict[int, float],
    kernel: np.ndarray,
    n: int,
    bits: int,
    method: str = "explicit",
) -> float:
    """Variance of the blur-corrected pur(B) estimate for a concrete state."""
    coeff, outs = spatial_purity_coefficients(kernel, n, bits, method)
    F, _ = channels.spatial_forward_matrix(kernel, n)
    pvec = np.array([site_probs.get(b, 0.0) for b in range(1 << n)])
    p_exp = F @ pvec
    est = float(np.dot(coeff, p_exp))
    return variance_vk(p_exp, coeff, est)


def worst_case_spatial_variance(
    kernel: np.ndarray,
    n: int,
    bits: int,
    method: str = "explicit",
    seed: int = 0,
    n_random: int = 32,
    sweeps: int = 400,
) -> tuple[float, np.ndarray]:
    """Maximize the blurred pur(B) estimator variance over site-set laws.

    The variable is the distribution over antisymmetric-site sets, kept on
    the probability simplex and inside the purity box; refinement moves mass
    between pairs of sets with an exact concave line search.
    """
    dim = 1 << n
    coeff, outs = spatial_purity_coefficients(kernel, n, bits, method)
    F, _ = channels.spatial_forward_matrix(kernel, n)
    u = F.T @ (coeff * coeff)
    m = F.T @ coeff
    parity = np.array(
        [[(-1.0) ** (cm & b).bit_count() for b in range(dim)] for cm in range(dim)]
    )
    lo_pur = 2.0 ** -np.array([cm.bit_count() for cm in range(dim)])

    def feasible(P):
        if P.min() < -_FEAS_TOL:
            return False
        pur = parity @ P
        return bool(np.all(pur >= lo_pur - 1e-9) and np.all(pur <= 1.0 + 1e-9))

    product = np.zeros(dim)
    product[0] = 1.0
    starts = [product]
    # physically realizable anchors; guarantees the search never reports a
    # value below the members of the tested families
    from .purity import all_subset_purities
    from .states import make_cluster, make_ghz, make_werner

    for anchor_state in (make_ghz(n), make_cluster(n), make_werner(n, 1.0)):
        dist = network.sign_pattern_distribution(all_subset_purities(anchor_state), n)
        starts.append(np.asarray(dist.probs, dtype=float).copy())
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        cand = rng.dirichlet(np.ones(dim))
        blend = 1.0
        for _ in range(40):
            trial = product + blend * (cand - product)
            if feasible(trial):
                starts.append(trial)
                break
            blend *= 0.5

    best_val = -math.inf
    best_P = product
    with np.errstate(divide="ignore", invalid="ignore"):
        for start in starts:
            P = start.copy()
            value = float(np.dot(u, P) - np.dot(m, P) ** 2)
            base = parity @ P
            mp = float(np.dot(m, P))
            for _ in range(sweeps):
                prev = value
                for i in range(dim):
                    for j in range(dim):
                        if i == j:
                            continue
                        rows = parity[:, i] - parity[:, j]
                        hi_room = np.where(
                            rows > 0,
                            (1.0 + 1e-9 - base) / rows,
                            (lo_pur - 1e-9 - base) / rows,
                        )
                        lo_room = np.where(
                            rows > 0,
                            (lo_pur - 1e-9 - base) / rows,
                            (1.0 + 1e-9 - base) / rows,
                        )
                        active = np.abs(rows) > 1e-300
                        t_hi = min(P[j], hi_room[active].min(initial=math.inf))
                        t_lo = max(-P[i], lo_room[active].max(initial=-math.inf))
                        if t_lo > t_hi:
                            continue
                        du = u[i] - u[j]
                        dm = m[i] - m[j]
                        if dm != 0.0:
                            t_star = (du / (2.0 * dm) - mp) / dm
                        else:
                            t_star = t_hi if du >= 0 else t_lo
                        t_new = min(max(t_star, t_lo), t_hi)
                        if t_new != 0.0:
                            P[i] += t_new
                            P[j] -= t_new
                            base += rows * t_new
                            mp += dm * t_new
                value = float(np.dot(u, P) - np.dot(m, P) ** 2)
                if value - prev < 1e-14:
                    break
            if value > best_val:
                best_val = value
                best_P = P
    return best_val, best_P


# -- Monte Carlo ---------------------------------------------------------------


def exact_observed_distribution(profile: PurityProfile, p: float, q: float) -> np.ndarray:
    """Atom-count law after both error channels (the sampling distribution)."""
    pj = network.singles_distribution(profile)
    p_exp = forward_matrix(profile.n, p, q, "combined") @ np.asarray(pj.probs)
    p_exp = np.clip(p_exp, 0.0, None)
    return p_exp / p_exp.sum()


def monte_carlo_estimate(
    state_or_profile,
    errors: channels.ErrorParams,
    n_runs: int,
    seed,
    method: str = "explicit",
) -> MonteCarloResult:
    """Simulate N runs through the exact composed channel and correct them.

    Outcomes are drawn from the composed atom-count distribution with a
    seeded generator, so identical seeds give identical results; the
    estimator is unbiased, with per-run variance reported through
    ``estimate_variance`` (variance of the estimate, i.e. V_k-hat / N).
    """
    if n_runs < 1:
        raise ValueError("need at least one run")
    profile = profile_of(state_or_profile)
    n = profile.n
    p_exp = exact_observed_distribution(profile, errors.p, errors.q)
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n_runs, p_exp)
    outcomes = np.repeat(np.arange(2 * n + 1, dtype=np.uint16), counts)
    C = estimator_coefficients(n, errors.p, errors.q, "combined", method)
    freq = counts / n_runs
    estimates = C @ freq
    second = (C * C) @ freq
    if n_runs > 1:
        sample_var = (second - estimates**2) * n_runs / (n_runs - 1)
    else:
        sample_var = np.zeros_like(estimates)
    return MonteCarloResult(
        profile=PurityProfile(n=n, avpur=estimates),
        estimate_variance=sample_var / n_runs,
        sample=ExperimentSample(seed=seed, n_runs=n_runs, outcomes=outcomes, mode="combined"),
        method=method,
    )


def monte_carlo_replicates(
    state_or_profile,
    errors: channels.ErrorParams,
    n_runs: int,
    master_seed: int,
    n_replicates: int,
    method: str = "explicit",
    threads: int = 1,
) -> list[MonteCarloResult]:
    """Independent replicates seeded as (master_seed, index); order-stable."""
    profile = profile_of(state_or_profile)

    def one(idx: int) -> MonteCarloResult:
        return monte_carlo_estimate(profile, errors, n_runs, [master_seed, idx], method)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(n_replicates)))
    return [one(idx) for idx in range(n_replicates)]


def trajectory_counts(
    state: QubitRegisterState,
    errors: channels.ErrorParams,
    n_runs: int,
    seed,
) -> np.ndarray:
    """Site-level trajectory sampler kept as a cross-check (n <= 6).

    Draws a full sign pattern per run, fails each symmetric column with
    probability q, then loses each atom with probability p; the returned
    atom-count histogram must agree with the composed analytic channel.
    """
    from .purity import all_subset_purities

    n = state.n
    if n > 6:
        raise ValueError("trajectory sampler retained for n <= 6 only")
    pattern_dist = network.sign_pattern_distribution(all_subset_purities(state), n)
    rng = np.random.default_rng(seed)
    patterns = rng.choice(1 << n, size=n_runs, p=np.asarray(pattern_dist.probs))
    j_true = np.bitwise_count(patterns.astype(np.uint64)).astype(np.int64)
    extra = rng.binomial(n - j_true, errors.q)
    atoms = 2 * (j_true + extra)
    detected = rng.binomial(atoms, 1.0 - errors.p)
    return np.bincount(detected, minlength=2 * n + 1)


def beta_fit(
    state_or_profile,
    p_grid,
    k: int,
    method: str = "explicit",
) -> float:
    """Exponent of V_k ~ exp(beta * n * p) for the detector channel.

    Least-squares slope of log V_k against n*p over the supplied grid.
    """
    p_grid = np.asarray(p_grid, dtype=float)
    if p_grid.size < 4:
        raise ValueError("need at least 4 grid points for a stable fit")
    profile = profile_of(state_or_profile)
    n = profile.n
    values = []
    for p in p_grid:
        rep = state_variances(profile, p, 0.0, mode="detector", method=method)[k]
        values.append(rep.value)
    values = np.asarray(values)
    if values.min() <= 0.0:
        raise ValueError("variance grid is not positive; fit undefined")
    slope = np.polyfit(n * p_grid, np.log(values), 1)[0]
    return float(slope)
