//! Seeded Monte Carlo simulation of the two-round protocol.
//!
//! Trial `i` draws from ChaCha8 stream `i` of the run seed, so any split of
//! the trial range across workers sees the same random numbers. Trials are
//! grouped in fixed blocks of [`BLOCK`] indices; blocks run in parallel and
//! are merged in index order, which makes every report bit-identical for a
//! given seed whatever the thread count.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bench::{open_loop_required_power, OpenLoopSolution};
use crate::channel::{sample_g1, sample_g2_given_g1, ChannelGain, QuantileMethod};
use crate::error::{domain, Error, Result};
use crate::harq::{theta, HarqConfig, P2Rule, Protocol};
use crate::numeric::CompensatedSum;
use crate::prob::Probability;

pub const BLOCK: u64 = 4096;

/// Fewest round-2 trials a conditional estimate may rest on.
pub const MIN_CONDITIONED: u64 = 100;

/// One protocol run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub round1_ok: bool,
    /// `None` when round 1 decoded.
    pub round2_ok: Option<bool>,
    pub spent_power: f64,
    pub g1: ChannelGain,
    pub g2: Option<ChannelGain>,
    pub jensen_fallback: bool,
}

impl TrialOutcome {
    pub fn outage(&self) -> bool {
        !self.round1_ok && self.round2_ok != Some(true)
    }
}

/// Mergeable counts and sums over a range of trials.
#[derive(Debug, Clone, Default)]
pub struct McTally {
    pub trials: u64,
    pub outages: u64,
    pub round2_trials: u64,
    pub round2_failures: u64,
    pub jensen_fallbacks: u64,
    power: CompensatedSum,
    power_sq: CompensatedSum,
}

impl McTally {
    pub fn record(&mut self, t: &TrialOutcome) {
        self.trials += 1;
        self.outages += u64::from(t.outage());
        if let Some(ok) = t.round2_ok {
            self.round2_trials += 1;
            self.round2_failures += u64::from(!ok);
        }
        self.jensen_fallbacks += u64::from(t.jensen_fallback);
        self.power.add(t.spent_power);
        self.power_sq.add(t.spent_power * t.spent_power);
    }

    pub fn merge(&mut self, other: &McTally) {
        self.trials += other.trials;
        self.outages += other.outages;
        self.round2_trials += other.round2_trials;
        self.round2_failures += other.round2_failures;
        self.jensen_fallbacks += other.jensen_fallbacks;
        self.power.merge(&other.power);
        self.power_sq.merge(&other.power_sq);
    }

    pub fn report(&self, seed: u64) -> McReport {
        let n = self.trials.max(1) as f64;
        let rate = self.outages as f64 / n;
        let mean = self.power.value() / n;
        let var = (self.power_sq.value() / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        let conditional = (self.round2_trials > 0).then(|| {
            let k = self.round2_trials as f64;
            let p = self.round2_failures as f64 / k;
            (Probability::clamped(p), binomial_se(p, k))
        });
        McReport {
            n_trials: self.trials,
            outages: self.outages,
            outage_rate: Probability::clamped(rate),
            outage_std_err: binomial_se(rate, n),
            round2_trials: self.round2_trials,
            round2_failures: self.round2_failures,
            conditional_round2_outage: conditional.map(|c| c.0),
            conditional_std_err: conditional.map(|c| c.1),
            avg_power: mean,
            avg_power_std_err: (var / n).sqrt(),
            jensen_fallbacks: self.jensen_fallbacks,
            seed,
        }
    }
}

fn binomial_se(p: f64, n: f64) -> f64 {
    (p * (1.0 - p) / n).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McReport {
    pub n_trials: u64,
    pub outages: u64,
    /// Fraction of all trials that fail after the last round.
    pub outage_rate: Probability,
    pub outage_std_err: f64,
    /// Denominator of the conditional estimate: trials that reached round 2.
    pub round2_trials: u64,
    /// Numerator of the conditional estimate.
    pub round2_failures: u64,
    /// `None` when no trial reached round 2.
    pub conditional_round2_outage: Option<Probability>,
    pub conditional_std_err: Option<f64>,
    pub avg_power: f64,
    pub avg_power_std_err: f64,
    pub jensen_fallbacks: u64,
    pub seed: u64,
}

fn run_range<F>(seed: u64, range: Range<u64>, trial: F) -> Result<McTally>
where
    F: Fn(&mut ChaCha8Rng) -> Result<TrialOutcome> + Sync,
{
    let base = ChaCha8Rng::seed_from_u64(seed);
    let first_block = range.start / BLOCK;
    let end_block = range.end.div_ceil(BLOCK);
    let tallies = (first_block..end_block)
        .into_par_iter()
        .map(|b| {
            let lo = (b * BLOCK).max(range.start);
            let hi = ((b + 1) * BLOCK).min(range.end);
            let mut tally = McTally::default();
            for i in lo..hi {
                let mut rng = base.clone();
                rng.set_stream(i);
                tally.record(&trial(&mut rng)?);
            }
            Ok(tally)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = McTally::default();
    for t in &tallies {
        total.merge(t);
    }
    Ok(total)
}

fn check_trials(n_trials: u64) -> Result<()> {
    if n_trials == 0 {
        return Err(domain("n_trials must be at least 1"));
    }
    Ok(())
}

fn check_power(power: f64, rate: f64, sigma: f64) -> Result<()> {
    if !(power > 0.0 && power.is_finite() && rate > 0.0 && sigma > 0.0 && sigma <= 1.0) {
        return Err(domain(format!("need P > 0, R > 0, sigma in (0, 1]; got P = {power}, R = {rate}, sigma = {sigma}")));
    }
    Ok(())
}

fn round2_ok(protocol: Protocol, rate: f64, snr1: f64, snr2: f64) -> bool {
    match protocol {
        Protocol::Rtd => snr1 + snr2 >= theta(rate),
        Protocol::Inr => snr1.ln_1p() + snr2.ln_1p() >= rate,
    }
}

fn closed_loop_trial(rule: &P2Rule, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    let cfg = rule.config();
    let g1 = sample_g1(rng);
    if cfg.decodes_first_round(g1.value()) {
        return Ok(TrialOutcome {
            round1_ok: true,
            round2_ok: None,
            spent_power: cfg.p1,
            g1,
            g2: None,
            jensen_fallback: false,
        });
    }
    let p2 = rule.power(g1.value())?;
    let g2 = sample_g2_given_g1(rng, g1.value(), rule.sigma());
    let ok = round2_ok(cfg.protocol, cfg.rate, g1.value() * cfg.p1, g2.value() * p2.power);
    Ok(TrialOutcome {
        round1_ok: false,
        round2_ok: Some(ok),
        spent_power: cfg.p1 + p2.power,
        g1,
        g2: Some(g2),
        jensen_fallback: p2.jensen_fallback,
    })
}

/// Closed-loop tally over an arbitrary trial index range.
pub fn closed_loop_tally(cfg: &HarqConfig, sigma: f64, method: QuantileMethod, seed: u64, range: Range<u64>) -> Result<McTally> {
    let rule = P2Rule::new(*cfg, sigma, method)?;
    run_range(seed, range, |rng| closed_loop_trial(&rule, rng))
}

/// Simulates the power-adaptive protocol: round 2 uses `P2(g1)` from `method`.
pub fn run_closed_loop(cfg: &HarqConfig, sigma: f64, method: QuantileMethod, n_trials: u64, seed: u64) -> Result<McReport> {
    check_trials(n_trials)?;
    Ok(closed_loop_tally(cfg, sigma, method, seed, 0..n_trials)?.report(seed))
}

fn open_loop_trial(protocol: Protocol, power: f64, rate: f64, sigma: f64, g1: ChannelGain, rng: &mut ChaCha8Rng) -> TrialOutcome {
    if (g1.value() * power).ln_1p() >= rate {
        return TrialOutcome { round1_ok: true, round2_ok: None, spent_power: power, g1, g2: None, jensen_fallback: false };
    }
    let g2 = sample_g2_given_g1(rng, g1.value(), sigma);
    let ok = round2_ok(protocol, rate, g1.value() * power, g2.value() * power);
    TrialOutcome { round1_ok: false, round2_ok: Some(ok), spent_power: 2.0 * power, g1, g2: Some(g2), jensen_fallback: false }
}

/// Simulates equal-power retransmission. The conditional outage counts only
/// trials whose round 1 failed; the average power is unconditional.
pub fn run_open_loop(power: f64, rate: f64, sigma: f64, protocol: Protocol, n_trials: u64, seed: u64) -> Result<McReport> {
    check_trials(n_trials)?;
    check_power(power, rate, sigma)?;
    let tally = run_range(seed, 0..n_trials, |rng| {
        let g1 = sample_g1(rng);
        Ok(open_loop_trial(protocol, power, rate, sigma, g1, rng))
    })?;
    if tally.round2_trials < MIN_CONDITIONED {
        return Err(Error::DegenerateConditioning { survivors: tally.round2_trials, required: MIN_CONDITIONED });
    }
    Ok(tally.report(seed))
}

/// Equal-power retransmission with `g1` drawn directly from `Exp(1)`
/// truncated to the round-1 failure region `[0, theta/P)`. Every trial
/// reaches round 2, so the conditional outage rests on all `n_trials`
/// however small the round-1 failure probability is. Average power in the
/// report is the conditional `2P`.
pub fn run_open_loop_conditioned(power: f64, rate: f64, sigma: f64, protocol: Protocol, n_trials: u64, seed: u64) -> Result<McReport> {
    check_trials(n_trials)?;
    check_power(power, rate, sigma)?;
    let fail_mass = -(-theta(rate) / power).exp_m1();
    let tally = run_range(seed, 0..n_trials, |rng| {
        let u: f64 = rng.gen();
        let g1 = ChannelGain::new(-(-u * fail_mass).ln_1p())?;
        Ok(open_loop_trial(protocol, power, rate, sigma, g1, rng))
    })?;
    Ok(tally.report(seed))
}

/// Single transmission at power `P`.
pub fn run_no_retx(power: f64, rate: f64, n_trials: u64, seed: u64) -> Result<McReport> {
    check_trials(n_trials)?;
    check_power(power, rate, 1.0)?;
    let tally = run_range(seed, 0..n_trials, |rng| {
        let g1 = sample_g1(rng);
        Ok(TrialOutcome {
            round1_ok: (g1.value() * power).ln_1p() >= rate,
            round2_ok: None,
            spent_power: power,
            g1,
            g2: None,
            jensen_fallback: false,
        })
    })?;
    Ok(tally.report(seed))
}

/// Open-loop required power refined against conditioned Monte Carlo.
///
/// Starts from the closed-form answer and bisects `ln P` within +-3 dB on the
/// simulated conditional outage. Every evaluation reuses `seed`, so the
/// comparisons share random numbers.
pub fn open_loop_required_power_mc(
    target: Probability,
    rate: f64,
    sigma: f64,
    protocol: Protocol,
    n_trials: u64,
    seed: u64,
) -> Result<OpenLoopSolution> {
    let start = open_loop_required_power(target, rate, sigma, protocol)?;
    let zeta = |p: f64| -> Result<f64> {
        let r = run_open_loop_conditioned(p, rate, sigma, protocol, n_trials, seed)?;
        Ok(r.conditional_round2_outage.map_or(1.0, Probability::value))
    };
    let span = 3.0 * std::f64::consts::LN_10 / 10.0;
    let (mut lo, mut hi) = (start.power.ln() - span, start.power.ln() + span);
    if zeta(lo.exp())? <= target.value() || zeta(hi.exp())? > target.value() {
        return Err(Error::Bracket(format!("simulated outage does not cross {:e} within 3 dB of the closed form", target.value())));
    }
    while hi - lo > 1e-3 * std::f64::consts::LN_10 / 10.0 {
        let mid = 0.5 * (lo + hi);
        if zeta(mid.exp())? > target.value() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let power = hi.exp();
    Ok(OpenLoopSolution {
        power,
        avg_power: crate::bench::open_loop_avg_power(power, rate),
        outage: Probability::clamped(zeta(power)?),
    })
}
