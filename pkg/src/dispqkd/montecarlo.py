"""Event-level Monte Carlo of the filtered link, used to check the analytic key-rate model.

One trial follows one emitted pair.

1. Draw the pair's detection times from the bivariate normal |psi_L|^2 and
   add Gaussian jitter to each.  Each photon survives its arm with
   probability T.
2. A surviving photon is *registered* if it lands inside its station's own
   window.  That window is the unheralded filter window with a global clock,
   or the 1/r slot without one.
3. The herald click is Bob's registered photon if there is one, otherwise
   Alice's registered photon, otherwise Alice's earliest dark click in her
   own window.  The partner searches a coincidence window centred on the
   expected arrival: the conditional mean with a global clock, or the herald
   time without one.
4. Dark clicks form a Poisson process of rate 2d (two detectors per station).
   An accepted pair involving a dark click is marked as an error.  Its key
   bit is then wrong with probability 1/2.

``ideal=True`` mirrors the assumptions of the analytic model.  Registered
photons are drawn conditioned on landing inside their windows, a photon in
the search window takes precedence over dark clicks, and every search window
has its full duration.  With ``ideal=False`` the Gaussian tails escape the
windows, the earliest click wins, and with a global clock the search window
is clipped to the partner's own window (clicks outside it were discarded).
Without a global clock the slot only books dark counts and nothing is
clipped.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import qkd, stats
from .biphoton import BiphotonState
from .model import LinkConfig, validate
from .qkd import Scenario

__all__ = [
    "MIN_TRIALS",
    "TrialOutcome",
    "TrialBatch",
    "McReport",
    "sample_pair_times",
    "simulate_batch",
    "run_trials",
    "compare_with_analytic",
]

MIN_TRIALS = 10_000
CHUNK = 1 << 20


def sample_pair_times(state: BiphotonState, rng: np.random.Generator, size=None):
    """Detection times (t1, t2) from the propagated two-photon density."""
    sd1 = stats.tau1(state, 1)
    sd2 = stats.tau1(state, 2)
    r = stats.pearson(state)
    z1 = rng.standard_normal(size)
    z2 = rng.standard_normal(size)
    return sd1 * z1, sd2 * (r * z1 + math.sqrt(max(0.0, 1.0 - r * r)) * z2)


@dataclass(frozen=True)
class TrialOutcome:
    alice_click: float | None
    bob_click: float | None
    accepted: bool
    error: bool


@dataclass
class TrialBatch:
    """Per-trial arrays; click times are NaN where no click was used."""

    alice_click: np.ndarray
    bob_click: np.ndarray
    accepted: np.ndarray
    error: np.ndarray
    bit_error: np.ndarray
    alice_survived: np.ndarray
    bob_survived: np.ndarray

    def __len__(self) -> int:
        return self.accepted.size

    def __getitem__(self, i: int) -> TrialOutcome:
        a, b = self.alice_click[i], self.bob_click[i]
        return TrialOutcome(
            None if np.isnan(a) else float(a),
            None if np.isnan(b) else float(b),
            bool(self.accepted[i]),
            bool(self.error[i]),
        )


class _Link:
    """Everything a batch needs, precomputed once per (config, scenario)."""

    def __init__(self, config: LinkConfig, scenario: Scenario):
        validate(config)
        self.scenario = Scenario.parse(scenario)
        self.state = BiphotonState.from_config(config)
        self.T = qkd.transmittance(config.fiber)
        self.win = qkd.windows(config, self.scenario)
        qkd.dark_probs(config.detector.dark_rate, self.win)  # validity guard
        self.rate = 2.0 * config.detector.dark_rate
        self.jitter = config.detector.jitter_sigma
        self.half_a = 0.5 * self.win.tau1_win
        self.half_b = 0.5 * self.win.tau2_win
        self.half_ha = 0.5 * self.win.tau1h_win
        self.half_hb = 0.5 * self.win.tau2h_win
        if self.scenario is Scenario.GLOBAL_REF:
            self.slope_ab = stats.mean_shift_slope(self.state)  # E[t1 | t2] = slope_ab * t2
            self.slope_ba = stats.mean_shift_slope(self.state.swapped())
        else:
            self.slope_ab = self.slope_ba = 1.0

    def search(self, herald, half_width, half_own, slope, clip):
        center = slope * herald
        if not clip:
            return center, center - half_width, np.full_like(center, 2.0 * half_width)
        lo = np.maximum(center - half_width, -half_own)
        hi = np.minimum(center + half_width, half_own)
        return center, lo, np.maximum(hi - lo, 0.0)


def _earliest_dark(rng, count, lo, width):
    # earliest of `count` uniform points on [lo, lo + width]
    u = rng.random(count.shape)
    with np.errstate(divide="ignore"):
        frac = 1.0 - u ** (1.0 / np.maximum(count, 1))
    return np.where(count > 0, lo + width * frac, np.nan)


def simulate_batch(
    config: LinkConfig, scenario: Scenario, n: int, rng: np.random.Generator, ideal: bool = True
) -> TrialBatch:
    return _simulate(_Link(config, scenario), n, rng, ideal)


def _simulate(link: _Link, n: int, rng: np.random.Generator, ideal: bool) -> TrialBatch:
    surv_a = rng.random(n) < link.T
    surv_b = rng.random(n) < link.T

    def draw(size):
        t1, t2 = sample_pair_times(link.state, rng, size)
        if link.jitter > 0:
            t1 = t1 + link.jitter * rng.standard_normal(size)
            t2 = t2 + link.jitter * rng.standard_normal(size)
        return t1, t2

    t1, t2 = draw(n)
    if ideal:
        for _ in range(1000):
            in_a = np.abs(t1) <= link.half_a
            in_b = np.abs(t2) <= link.half_b
            in_search = np.abs(t1 - link.slope_ab * t2) <= link.half_ha
            bad = (surv_a & ~in_a) | (surv_b & ~in_b) | (surv_a & surv_b & ~in_search)
            k = int(bad.sum())
            if k == 0:
                break
            t1[bad], t2[bad] = draw(k)
        else:
            raise RuntimeError("truncated sampling did not converge")

    reg_a = surv_a & (np.abs(t1) <= link.half_a)
    reg_b = surv_b & (np.abs(t2) <= link.half_b)

    # herald selection
    herald_bob = reg_b
    herald_alice_photon = ~reg_b & reg_a
    herald_alice_dark = ~reg_b & ~reg_a
    n_dark_a_own = rng.poisson(link.rate * 2.0 * link.half_a, n)
    dark_herald_time = _earliest_dark(rng, n_dark_a_own, -link.half_a, 2.0 * link.half_a)
    has_herald = herald_bob | herald_alice_photon | (herald_alice_dark & (n_dark_a_own > 0))
    herald_time = np.where(herald_bob, t2, np.where(herald_alice_photon, t1, dark_herald_time))

    # search on the partner side
    clip = not ideal and link.scenario is Scenario.GLOBAL_REF
    _, lo_a, width_a = link.search(
        np.where(herald_bob, herald_time, 0.0), link.half_ha, link.half_a, link.slope_ab, clip
    )
    _, lo_b, width_b = link.search(
        np.where(herald_bob, 0.0, np.nan_to_num(herald_time)), link.half_hb, link.half_b, link.slope_ba, clip
    )
    lo = np.where(herald_bob, lo_a, lo_b)
    width = np.where(herald_bob, width_a, width_b)
    n_dark_search = rng.poisson(link.rate * width)
    dark_match_time = _earliest_dark(rng, n_dark_search, lo, width)

    # the searcher's own photon is a candidate only when Bob heralds
    photon_time = np.where(herald_bob & reg_a, t1, np.nan)
    photon_ok = herald_bob & reg_a & (photon_time >= lo) & (photon_time <= lo + width)
    dark_ok = n_dark_search > 0
    if ideal:
        use_photon = photon_ok
    else:
        use_photon = photon_ok & (~dark_ok | (photon_time <= dark_match_time))
    matched = has_herald & (photon_ok | dark_ok)
    match_time = np.where(use_photon, photon_time, dark_match_time)

    herald_is_dark = herald_alice_dark
    error = matched & (herald_is_dark | ~use_photon)
    bit_error = error & (rng.random(n) < 0.5)

    herald_t = np.where(has_herald, herald_time, np.nan)
    match_t = np.where(matched, match_time, np.nan)
    alice_click = np.where(herald_bob, match_t, herald_t)
    bob_click = np.where(herald_bob, herald_t, match_t)
    return TrialBatch(
        alice_click=alice_click,
        bob_click=bob_click,
        accepted=matched,
        error=error,
        bit_error=bit_error,
        alice_survived=surv_a,
        bob_survived=surv_b,
    )


@dataclass
class McReport:
    n_trials: int
    n_accepted: int
    n_errors: int
    n_bit_errors: int
    p_exp_hat: float
    p_exp_se: float
    qber_hat: float
    qber_se: float
    seed: int
    scenario: str
    length: float
    ideal: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _chunk_counts(link, seed, index, size, ideal):
    bitgen = np.random.Philox(np.random.SeedSequence([seed, index]))
    batch = _simulate(link, size, np.random.Generator(bitgen), ideal)
    return int(batch.accepted.sum()), int(batch.error.sum()), int(batch.bit_error.sum())


def run_trials(
    config: LinkConfig,
    scenario: Scenario,
    n: int,
    seed: int,
    workers: int = 1,
    ideal: bool = True,
    chunk_size: int = CHUNK,
) -> McReport:
    """Simulate ``n`` emitted pairs and estimate p_exp and the QBER.

    Trials are split into fixed-size chunks, each with its own Philox stream
    keyed by (seed, chunk index), so results do not depend on ``workers``.
    """
    if int(n) != n or n < MIN_TRIALS:
        raise ValueError(f"n must be an integer >= {MIN_TRIALS}")
    n = int(n)
    link = _Link(config, scenario)
    sizes = [chunk_size] * (n // chunk_size)
    if n % chunk_size:
        sizes.append(n % chunk_size)
    jobs = list(enumerate(sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(lambda job: _chunk_counts(link, seed, job[0], job[1], ideal), jobs))
    else:
        counts = [_chunk_counts(link, seed, i, s, ideal) for i, s in jobs]
    acc, err, bit = (sum(c[k] for c in counts) for k in range(3))

    p_hat = acc / n
    q_hat = bit / acc if acc else 0.0
    return McReport(
        n_trials=n,
        n_accepted=acc,
        n_errors=err,
        n_bit_errors=bit,
        p_exp_hat=p_hat,
        p_exp_se=math.sqrt(p_hat * (1.0 - p_hat) / n),
        qber_hat=q_hat,
        qber_se=math.sqrt(q_hat * (1.0 - q_hat) / acc) if acc else 0.0,
        seed=int(seed),
        scenario=link.scenario.value,
        length=config.fiber.length,
        ideal=ideal,
    )


def compare_with_analytic(report: McReport, analytic: qkd.KeyRateResult, n_sigma: float = 3.0) -> dict:
    """z-scores of the estimates against the analytic values.

    The binomial standard errors are evaluated at the analytic probabilities
    (the null hypothesis), which stays meaningful when few errors are observed.
    """
    p, q = analytic.p_exp, analytic.qber
    se_p = math.sqrt(p * (1.0 - p) / report.n_trials)
    z_p = (report.p_exp_hat - p) / se_p if se_p > 0 else (0.0 if report.p_exp_hat == p else math.inf)
    if report.n_accepted:
        se_q = math.sqrt(q * (1.0 - q) / report.n_accepted)
        z_q = (report.qber_hat - q) / se_q if se_q > 0 else (0.0 if report.qber_hat == q else math.inf)
    else:
        z_q = 0.0
    return {
        "p_exp_analytic": p,
        "qber_analytic": q,
        "z_p_exp": z_p,
        "z_qber": z_q,
        "p_exp_agrees": abs(z_p) <= n_sigma,
        "qber_agrees": abs(z_q) <= n_sigma,
    }
