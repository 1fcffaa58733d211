"""Full-run orchestration and the verification surfaces built on top of it.

A run initializes the shared representation (spectral warm start by
default), then iterates communication rounds grouped into doubling
stages: draw per-client times, keep the fastest n, update the model,
accumulate simulated wall-clock, and measure the true subspace distance
with oracle access to the hidden representation.  The full-participation
baseline is the same loop with a single stage of size N.

Also here: the per-round contraction report, first-crossing speedup
comparison, the closed-form wall-clock bounds, and a deterministic
multi-seed sweep helper.
"""

import hashlib
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    CHatOutOfRange,
    ConfigError,
    NonConvergence,
    SrpflError,
    TargetNotReached,
)
from .fedrep import LearningState, fedrep_round, method_of_moments_init
from .linalg import principal_angle_dist, thin_qr
from .straggler import (
    MODE_ANALYTIC,
    MODE_FIXED,
    MODE_THRESHOLD,
    PLAN_MODES,
    SpeedModel,
    StagePlan,
    build_stage_plan,
    draw_round_times,
    optimal_doubling_point,
    participant_ladder,
    round_time,
    select_fastest,
    target_accuracy,
)
from .synthesis import gen_ground_truth, substream

_TAG_ACTIVE_SET = 0x21
_TAG_SUBSET_PROBE = 0x22
_TAG_RANDOM_INIT = 0x23

ALGO_SRPFL = "srpfl"
ALGO_FEDREP_FULL = "fedrep_full"
ALGORITHMS = (ALGO_SRPFL, ALGO_FEDREP_FULL)

INIT_MOMENTS = "moments"
INIT_RANDOM = "random"
INIT_MODES = (INIT_MOMENTS, INIT_RANDOM)

RESAMPLE_PER_STAGE = "per_stage"
RESAMPLE_PER_ROUND = "per_round"
RESAMPLE_SCOPES = (RESAMPLE_PER_STAGE, RESAMPLE_PER_ROUND)

SPEED_KINDS = ("fixed", "dynamic")

# floor/ceiling for the automatically measured contraction factor
_A_MIN = 1e-6
_A_MAX = 0.25


@dataclass
class RunConfig:
    """Everything that determines a run; a run is a pure function of this.

    ``eta``, ``a`` and ``epsilon`` may be None, in which case they are
    derived from the ground truth with oracle access: eta as
    1/(8 sigma_max^2), a as (1/2) eta E0 sigma_min^2 (clamped into
    [1e-6, 1/4]), epsilon from the target-accuracy formula.  The sigma
    extremes are measured over sampled participant subsets of every
    ladder size, see :func:`measure_singular_extremes`.
    """

    d: int
    k: int
    n_total: int            # N: clients sampled per stage
    n0: int
    m: int
    sigma: float
    n_clients: int = 0      # M: population size; 0 means "same as N"
    eta: float | None = None
    a: float | None = None
    epsilon: float | None = None
    c_hat: float = 1.2
    algorithm: str = ALGO_SRPFL
    plan_mode: str = MODE_ANALYTIC
    fixed_rounds: int = 50
    init_mode: str = INIT_MOMENTS
    speed_kind: str = "fixed"
    lam: float = 1.0
    comm_cost: float = 0.0
    resample_scope: str = RESAMPLE_PER_STAGE
    seed: int = 0
    sweep_seeds: int = 20
    max_rounds: int = 10_000

    def __post_init__(self):
        if self.n_clients == 0:
            self.n_clients = self.n_total

    def validate(self):
        checks = [
            (1 <= self.k <= self.d, f"need 1 <= k <= d, got k={self.k}, d={self.d}"),
            (1 <= self.n0 <= self.n_total, f"need 1 <= n0 <= N, got n0={self.n0}, N={self.n_total}"),
            (self.n_total <= self.n_clients, f"need N <= M, got N={self.n_total}, M={self.n_clients}"),
            (self.m >= 1, f"batch size m must be >= 1, got {self.m}"),
            (self.sigma >= 0, f"sigma must be >= 0, got {self.sigma}"),
            (self.eta is None or self.eta > 0, f"eta must be positive, got {self.eta}"),
            (self.a is None or 0 < self.a <= _A_MAX, f"a must lie in (0, 1/4], got {self.a}"),
            (self.epsilon is None or self.epsilon >= 0, f"epsilon must be >= 0, got {self.epsilon}"),
            (1 < self.c_hat < math.sqrt(2), f"c_hat must lie in (1, sqrt(2)), got {self.c_hat}"),
            (self.algorithm in ALGORITHMS, f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}"),
            (self.plan_mode in PLAN_MODES, f"plan_mode must be one of {PLAN_MODES}, got {self.plan_mode!r}"),
            (self.fixed_rounds >= 1, f"fixed_rounds must be >= 1, got {self.fixed_rounds}"),
            (self.init_mode in INIT_MODES, f"init_mode must be one of {INIT_MODES}, got {self.init_mode!r}"),
            (self.speed_kind in SPEED_KINDS, f"speed_kind must be one of {SPEED_KINDS}, got {self.speed_kind!r}"),
            (self.lam > 0, f"lam must be positive, got {self.lam}"),
            (self.comm_cost >= 0, f"comm_cost must be >= 0, got {self.comm_cost}"),
            (self.resample_scope in RESAMPLE_SCOPES,
             f"resample_scope must be one of {RESAMPLE_SCOPES}, got {self.resample_scope!r}"),
            (self.seed >= 0, f"seed must be >= 0, got {self.seed}"),
            (self.sweep_seeds >= 1, f"sweep_seeds must be >= 1, got {self.sweep_seeds}"),
            (self.max_rounds >= 1, f"max_rounds must be >= 1, got {self.max_rounds}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def digest(self):
        canonical = "\n".join(f"{k}={v!r}" for k, v in sorted(vars(self).items()))
        return hashlib.sha256(canonical.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class RoundRecord:
    stage: int
    round_index: int
    n: int
    round_time: float
    cumulative_time: float
    dist: float


@dataclass
class RunTrace:
    """Per-round log of one run plus the derived run-level quantities."""

    records: list
    config_digest: str
    final_dist: float
    init_dist: float
    epsilon: float
    eta: float
    a: float
    sigma_min_star: float
    sigma_max_star: float
    reached_target: bool
    participants: list = field(default_factory=list)

    def total_time(self):
        return self.records[-1].cumulative_time if self.records else 0.0

    def dists(self):
        return np.array([r.dist for r in self.records])


def measure_singular_extremes(w_active, n0, seed, subsets_per_size=64):
    """Sampled extremes of the singular values of (1/sqrt(n)) W restricted to subsets.

    Scans every ladder size from n0 up to the full active set; the full
    set is evaluated exactly, smaller sizes over ``subsets_per_size``
    random subsets.  The exact extremes range over all subsets, which is
    combinatorially out of reach; the sampled values are what the
    automatic step size and contraction factor use.
    """
    n_active = w_active.shape[0]
    rng = substream(seed, _TAG_SUBSET_PROBE)
    s_min, s_max = math.inf, 0.0
    for n in participant_ladder(n_active, n0):
        if n == n_active:
            subsets = [np.arange(n_active)]
        else:
            subsets = [rng.choice(n_active, size=n, replace=False) for _ in range(subsets_per_size)]
        for idx in subsets:
            sv = np.linalg.svd(w_active[idx] / math.sqrt(n), compute_uv=False)
            s_min = min(s_min, float(sv[-1]))
            s_max = max(s_max, float(sv[0]))
    return s_min, s_max


def _speed_model(config):
    if config.speed_kind == "fixed":
        return SpeedModel.fixed(config.lam, config.comm_cost, config.seed)
    return SpeedModel.dynamic(config.n_total, config.comm_cost, config.seed)


def _sample_active(config, scope_index):
    """Ids of the N clients connected for one stage (or round)."""
    if config.n_clients == config.n_total:
        return np.arange(config.n_total)
    rng = substream(config.seed, _TAG_ACTIVE_SET, scope_index)
    return rng.choice(config.n_clients, size=config.n_total, replace=False)


def _random_basis(config, gt):
    rng = substream(config.seed, _TAG_RANDOM_INIT)
    basis, _ = thin_qr(rng.standard_normal((gt.d, gt.k)))
    return basis


def run(config):
    """Execute one run and return its trace; pure function of the config.

    Stages follow the doubling plan (single full-participation stage for
    the baseline algorithm).  Each round: draw slot times, keep the
    fastest n, run one communication round, accumulate wall-clock,
    measure the oracle distance.  The run stops as soon as the measured
    distance reaches epsilon; budgeted stages also stop at their budget.
    The final stage of a non-fixed plan keeps running until epsilon is
    crossed, bounded by ``max_rounds`` in total, and raises
    :class:`NonConvergence` when the cap is hit first.
    """
    config.validate()
    gt = gen_ground_truth(config.d, config.k, config.n_clients, config.sigma, config.seed)
    speed = _speed_model(config)

    active = _sample_active(config, 0)
    s_min, s_max = measure_singular_extremes(gt.w_star[active], config.n0, config.seed)
    eta = config.eta if config.eta is not None else 1.0 / (8.0 * s_max**2)

    if config.init_mode == INIT_MOMENTS:
        b0 = method_of_moments_init(gt, active, config.m, config.seed)
    else:
        b0 = _random_basis(config, gt)
    init_dist = principal_angle_dist(b0, gt.b_star)
    e0 = 1.0 - init_dist**2

    if config.a is not None:
        a = config.a
    else:
        a = min(max(0.5 * eta * e0 * s_min**2, _A_MIN), _A_MAX)
    epsilon = (
        config.epsilon
        if config.epsilon is not None
        else target_accuracy(a, config.n_total, config.n0, config.c_hat)
    )

    if config.algorithm == ALGO_FEDREP_FULL:
        budget = config.fixed_rounds if config.plan_mode == MODE_FIXED else None
        plan = StagePlan(n0=config.n0, stages=((config.n_total, budget),), mode=config.plan_mode)
    else:
        plan = build_stage_plan(
            config.n_total, config.n0, a, speed, config.c_hat,
            config.plan_mode, config.fixed_rounds,
        )

    state = LearningState(b=b0, heads=np.zeros((config.n_clients, config.k)), round_index=0)
    records, participants = [], []
    cumulative = 0.0
    global_round = 0
    reached = False
    last_stage = len(plan.stages) - 1

    for stage, (n_r, tau_r) in enumerate(plan.stages):
        if reached:
            break
        if config.resample_scope == RESAMPLE_PER_STAGE and stage > 0:
            active = _sample_active(config, stage)
        # a final budgeted-or-open stage of a non-fixed plan pursues epsilon
        pursue = stage == last_stage and plan.mode != MODE_FIXED
        threshold = None
        if plan.mode == MODE_THRESHOLD and stage < last_stage:
            threshold = optimal_doubling_point(stage + 1, a, config.n0, speed, config.n_total)
        rounds_in_stage = 0
        while True:
            current = records[-1].dist if records else init_dist
            if threshold is not None and current <= threshold:
                break
            if tau_r is not None and rounds_in_stage >= tau_r and not pursue:
                break
            if global_round >= config.max_rounds:
                if pursue or plan.mode == MODE_THRESHOLD:
                    raise NonConvergence(
                        f"round cap {config.max_rounds} hit at stage {stage} "
                        f"with dist {current:.6g} > epsilon {epsilon:.6g}"
                    )
                break
            global_round += 1
            if config.resample_scope == RESAMPLE_PER_ROUND:
                active = _sample_active(config, global_round)
            times = draw_round_times(speed, global_round, config.n_total)
            chosen = select_fastest(times, n_r)
            ids = active[chosen]
            try:
                state = fedrep_round(state, gt, ids, config.m, eta, config.seed)
            except SrpflError as exc:
                raise type(exc)(f"stage {stage}, round {global_round}: {exc}") from exc
            elapsed = round_time(times[chosen], speed.comm_cost)
            cumulative += elapsed
            dist = principal_angle_dist(state.b, gt.b_star)
            records.append(RoundRecord(
                stage=stage, round_index=global_round, n=int(n_r),
                round_time=elapsed, cumulative_time=cumulative, dist=dist,
            ))
            participants.append(ids)
            rounds_in_stage += 1
            if dist <= epsilon:
                reached = True
                break

    return RunTrace(
        records=records,
        config_digest=config.digest(),
        final_dist=records[-1].dist if records else init_dist,
        init_dist=init_dist,
        epsilon=epsilon,
        eta=eta,
        a=a,
        sigma_min_star=s_min,
        sigma_max_star=s_max,
        reached_target=reached,
        participants=participants,
    )


@dataclass(frozen=True)
class ContractionReport:
    """Per-round check of dist^{t+1} <= dist^t sqrt(1-a_t) + a_t / sqrt((n/n0)(1-a_t))."""

    n_rounds: int
    n_satisfied: int
    fraction_satisfied: float
    worst_violation: float
    a_values: np.ndarray
    margins: np.ndarray  # lhs - rhs per round; negative = satisfied


def verify_contraction(trace, gt, eta, n0):
    """Check the per-round contraction inequality on a finished trace.

    For each round the factor ``a_t = (1/2) eta E0 sigma_min^2`` is
    computed on the realized participant set (E0 from the realized
    initial distance), and the inequality is evaluated against the
    recorded distances.  Returns a report, never raises on violations.
    """
    if len(trace.participants) != len(trace.records):
        raise ConfigError("trace does not carry realized participant sets")
    e0 = 1.0 - trace.init_dist**2
    dist_before = trace.init_dist
    margins, a_values = [], []
    for record, ids in zip(trace.records, trace.participants):
        w = gt.w_star[ids] / math.sqrt(len(ids))
        s_min = float(np.linalg.svd(w, compute_uv=False)[-1])
        a_t = 0.5 * eta * e0 * s_min**2
        a_t = min(max(a_t, 0.0), _A_MAX)
        shrink = math.sqrt(1.0 - a_t)
        floor = a_t / math.sqrt((record.n / n0) * (1.0 - a_t)) if a_t > 0 else 0.0
        rhs = dist_before * shrink + floor
        margins.append(record.dist - rhs)
        a_values.append(a_t)
        dist_before = record.dist
    margins = np.array(margins)
    a_values = np.array(a_values)
    satisfied = margins <= 1e-12
    return ContractionReport(
        n_rounds=len(margins),
        n_satisfied=int(satisfied.sum()),
        fraction_satisfied=float(satisfied.mean()) if len(margins) else 1.0,
        worst_violation=float(max(0.0, margins.max())) if len(margins) else 0.0,
        a_values=a_values,
        margins=margins,
    )


@dataclass(frozen=True)
class SpeedupReport:
    t_srpfl: float
    t_baseline: float
    ratio: float


def crossing_time(trace, epsilon, name="trace"):
    """First cumulative time at which the trace distance reaches epsilon."""
    for record in trace.records:
        if record.dist <= epsilon:
            return record.cumulative_time
    raise TargetNotReached(f"{name} never reached epsilon={epsilon:.6g} (final dist {trace.final_dist:.6g})")


def speedup_report(srpfl_trace, baseline_trace, epsilon):
    """First-crossing wall-clock times of both traces and their ratio."""
    t_s = crossing_time(srpfl_trace, epsilon, name="srpfl trace")
    t_b = crossing_time(baseline_trace, epsilon, name="baseline trace")
    return SpeedupReport(t_srpfl=t_s, t_baseline=t_b, ratio=t_s / t_b if t_b > 0 else 1.0)


def analytic_speedup_bound(n_total, n0, c_hat, a, c):
    """Closed-form wall-clock bounds, in units of the mean client time 1/lam.

    Upper bound on the adaptive scheme, lower bound on the
    full-participation baseline, and their ratio bound

        (6(c+1) + 4 log(1/(c_hat-1))) / (log N + 2 log(1/(c_hat-1)))

    with natural logarithms and C = c/lam the communication cost.
    """
    if not 1.0 < c_hat < math.sqrt(2.0):
        raise CHatOutOfRange(f"c_hat must lie strictly between 1 and sqrt(2), got {c_hat}")
    if not 0.0 < a <= _A_MAX:
        raise ConfigError(f"a must lie in (0, 1/4], got {a}")
    if n_total < 2:
        raise ConfigError(f"bounds need N >= 2, got {n_total}")
    log_n = math.log(n_total)
    hardness = math.log(1.0 / (c_hat - 1.0))
    rate = math.log(1.0 / (1.0 - a))
    upper_srpfl = log_n * (6.0 * (c + 1.0) + 4.0 * hardness) / rate
    lower_fedrep = log_n * (log_n + 2.0 * hardness) / rate
    ratio_bound = (6.0 * (c + 1.0) + 4.0 * hardness) / (log_n + 2.0 * hardness)
    return upper_srpfl, lower_fedrep, ratio_bound


def measure_contraction_rate(trace, upper=0.85, lower_mult=1.3):
    """Realized per-round contraction factor a fitted from a trace.

    Least-squares slope of log dist over the mid-trajectory window
    (below ``upper * init_dist``, above ``lower_mult * epsilon``), so the
    slow early rounds and the noise plateau are excluded.  Returns the
    ``a`` with per-round factor sqrt(1-a), clamped into (0, 1/4].
    """
    d = trace.dists()
    t = np.arange(1, len(d) + 1, dtype=float)
    hi = upper * trace.init_dist
    lo = lower_mult * trace.epsilon
    mask = (d <= hi) & (d >= lo) & (d > 0)
    if mask.sum() < 4:  # window too narrow; fall back to the whole descent
        mask = d > 0
    if mask.sum() < 2:
        raise ConfigError("trace too short to measure a contraction rate")
    slope = np.polyfit(t[mask], np.log(d[mask]), 1)[0]
    a = 1.0 - math.exp(2.0 * slope)
    return min(max(a, _A_MIN), _A_MAX)


def _sweep_worker(config):
    return run(config)


def sweep_threads():
    """Worker cap for seed sweeps; the SRPFL_THREADS env var overrides."""
    env = os.environ.get("SRPFL_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"SRPFL_THREADS must be an integer, got {env!r}") from exc
    return max(1, os.cpu_count() or 1)


def run_sweep(config, seeds, algorithms=(ALGO_SRPFL, ALGO_FEDREP_FULL)):
    """Run every (seed, algorithm) pair; deterministic in the inputs.

    Results are returned keyed by algorithm, in seed order, regardless
    of how many worker processes execute them.
    """
    jobs = [replace(config, seed=s, algorithm=alg) for alg in algorithms for s in seeds]
    workers = min(sweep_threads(), len(jobs))
    if workers <= 1:
        traces = [run(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(_sweep_worker, jobs, chunksize=1))
    out = {}
    for alg_index, alg in enumerate(algorithms):
        start = alg_index * len(seeds)
        out[alg] = traces[start:start + len(seeds)]
    return out
