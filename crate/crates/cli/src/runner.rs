//! Sweep runners. Points are evaluated in parallel; rows come back in grid
//! order. A failing point yields a row with the `error` column set and the
//! sweep carries on.

use pa_harq::alloc::{avg_power_given_p1, optimal_p1_closed_form, optimal_p1_numeric};
use pa_harq::bench::{
    no_retx_outage, no_retx_required_power, open_loop_avg_power, open_loop_required_power,
    open_loop_required_power_exact, zeta_closed, OpenLoopSolution,
};
use pa_harq::channel::sigma_from_geometry;
use pa_harq::harq::theta;
use pa_harq::mc::{run_closed_loop, run_no_retx, run_open_loop, run_open_loop_conditioned};
use pa_harq::{from_db, to_db, HarqConfig, PowerSolution, Probability, Protocol, QuantileMethod, Result};
use rayon::prelude::*;

use crate::config::{Figure, Method, SweepSpec};
use crate::row::ResultRow;

/// Grid coordinates of one row.
#[derive(Debug, Clone, Copy)]
struct Point {
    protocol: Option<Protocol>,
    method: &'static str,
    rate: f64,
    eps: f64,
    sigma: Option<f64>,
    speed_kmh: Option<f64>,
    d_a_m: Option<f64>,
}

impl Point {
    fn row(&self, figure: Figure) -> ResultRow {
        ResultRow {
            figure: figure.label().to_string(),
            protocol: self.protocol.map_or("none", Protocol::label).to_string(),
            method: self.method.to_string(),
            rate: Some(self.rate),
            eps: Some(self.eps),
            sigma: self.sigma,
            speed_kmh: self.speed_kmh,
            d_a_m: self.d_a_m,
            ..Default::default()
        }
    }
}

type Job<'a> = Box<dyn Fn(u64) -> ResultRow + Send + Sync + 'a>;

/// Runs jobs in parallel; row `i` gets seed `base + i`.
fn execute(jobs: Vec<Job<'_>>, base_seed: Option<u64>) -> Vec<ResultRow> {
    let base = base_seed.unwrap_or(0);
    let mut rows: Vec<ResultRow> = jobs.par_iter().enumerate().map(|(i, job)| job(base.wrapping_add(i as u64))).collect();
    for (i, r) in rows.iter_mut().enumerate() {
        r.row = i;
    }
    rows
}

fn fill<T>(row: &mut ResultRow, result: Result<T>, apply: impl FnOnce(&mut ResultRow, T)) {
    match result {
        Ok(v) => apply(row, v),
        Err(e) => row.error = Some(e.to_string()),
    }
}

fn no_retx_row(figure: Figure, point: Point) -> ResultRow {
    let mut row = point.row(figure);
    fill(&mut row, no_retx_required_power(prob(point.eps), point.rate), |r, p| {
        r.p_tx = Some(p);
        r.avg_power = Some(p);
        r.outage = Some(point.eps);
    });
    row
}

fn prob(eps: f64) -> Probability {
    Probability::clamped(eps)
}

fn gain(row: &mut ResultRow, point: &Point) {
    if let (Some(avg), Ok(base)) = (row.avg_power, no_retx_required_power(prob(point.eps), point.rate)) {
        row.gain_db = Some(to_db(base) - to_db(avg));
    }
}

/// Power-optimised two-round scheme at one point.
fn optimum_row(figure: Figure, point: Point, sigma: f64, method: Method, n_trials: u64, seed: u64) -> ResultRow {
    let mut row = point.row(figure);
    let protocol = point.protocol.expect("optimum rows carry a protocol");
    let cfg = match HarqConfig::new(protocol, point.rate, point.eps, 1.0) {
        Ok(c) => c,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let set = |r: &mut ResultRow, s: PowerSolution| {
        r.p1_opt = Some(s.p1_opt);
        r.avg_power = Some(s.avg_power);
        r.outage = Some(point.eps);
        if !s.unimodal {
            log::warn!("{} {protocol} R={} eps={:e}: average power not unimodal in P1", figure.label(), point.rate, point.eps);
        }
    };
    match method {
        Method::Exact => fill(&mut row, optimal_p1_numeric(&cfg, sigma, QuantileMethod::Exact), set),
        Method::Approx => fill(&mut row, optimal_p1_numeric(&cfg, sigma, QuantileMethod::Fitted), set),
        Method::Closed => fill(&mut row, optimal_p1_closed_form(&cfg, sigma), set),
        Method::Mc => {
            let simulated = optimal_p1_numeric(&cfg, sigma, QuantileMethod::Exact).and_then(|s| {
                let report = run_closed_loop(&cfg.with_p1(s.p1_opt), sigma, QuantileMethod::Exact, n_trials, seed)?;
                Ok((s, report))
            });
            fill(&mut row, simulated, |r, (s, m)| {
                r.p1_opt = Some(s.p1_opt);
                r.avg_power = Some(m.avg_power);
                r.avg_power_std_err = Some(m.avg_power_std_err);
                r.outage = m.conditional_round2_outage.map(Probability::value);
                r.outage_std_err = m.conditional_std_err;
                r.reference = Some(s.avg_power);
                r.z_score = Some((m.avg_power - s.avg_power) / m.avg_power_std_err);
                r.n_trials = Some(m.n_trials);
                r.seed = Some(m.seed);
            });
        }
    }
    gain(&mut row, &point);
    row
}

/// Fills `ref_gap_db` of non-exact rows from the exact row at the same point.
fn reference_gaps(rows: &mut [ResultRow]) {
    let key = |r: &ResultRow| {
        (r.protocol.clone(), r.rate.map(f64::to_bits), r.eps.map(f64::to_bits), r.sigma.map(f64::to_bits), r.speed_kmh.map(f64::to_bits), r.d_a_m.map(f64::to_bits))
    };
    let exact: Vec<_> = rows.iter().filter(|r| r.method == "exact").map(|r| (key(r), r.avg_power_db())).collect();
    for r in rows.iter_mut().filter(|r| r.method != "exact" && r.method != "no-retx") {
        let k = key(r);
        if let (Some(own), Some((_, Some(e)))) = (r.avg_power_db(), exact.iter().find(|(ek, _)| *ek == k)) {
            r.ref_gap_db = Some(own - e);
        }
    }
}

fn labelled(method: Method) -> &'static str {
    method.label()
}

/// Minimum average power versus outage target (also used for the headline).
pub fn run_fig3(spec: &SweepSpec) -> Vec<ResultRow> {
    let figure = spec.figure;
    let mut jobs: Vec<Job<'_>> = Vec::new();
    for &eps in &spec.eps {
        for &rate in &spec.rates {
            for &sigma in &spec.sigmas {
                let base = Point { protocol: None, method: "no-retx", rate, eps, sigma: Some(sigma), speed_kmh: None, d_a_m: None };
                jobs.push(Box::new(move |_| no_retx_row(figure, base)));
                for &protocol in &spec.protocols {
                    for &method in &spec.methods {
                        let point = Point { protocol: Some(protocol), method: labelled(method), ..base };
                        let n = spec.n_trials;
                        jobs.push(Box::new(move |seed| optimum_row(figure, point, sigma, method, n, seed)));
                    }
                }
            }
        }
    }
    let mut rows = execute(jobs, spec.seed);
    reference_gaps(&mut rows);
    rows
}

pub fn run_headline(spec: &SweepSpec) -> Vec<ResultRow> {
    run_fig3(spec)
}

/// Equal-power retransmission without power adaptation.
pub fn run_fig4(spec: &SweepSpec) -> Vec<ResultRow> {
    if spec.methods.contains(&Method::Approx) {
        log::warn!("fig4: the fitted approximation has no open-loop counterpart; skipping it");
    }
    let figure = spec.figure;
    let mut jobs: Vec<Job<'_>> = Vec::new();
    for &eps in &spec.eps {
        for &rate in &spec.rates {
            for &sigma in &spec.sigmas {
                let base = Point { protocol: None, method: "no-retx", rate, eps, sigma: Some(sigma), speed_kmh: None, d_a_m: None };
                jobs.push(Box::new(move |_| no_retx_row(figure, base)));
                for &protocol in &spec.protocols {
                    for &method in spec.methods.iter().filter(|&&m| m != Method::Approx) {
                        let point = Point { protocol: Some(protocol), method: labelled(method), ..base };
                        let n = spec.n_trials;
                        jobs.push(Box::new(move |seed| open_loop_row(figure, point, sigma, method, n, seed)));
                    }
                }
            }
        }
    }
    let mut rows = execute(jobs, spec.seed);
    reference_gaps(&mut rows);
    rows
}

fn open_loop_row(figure: Figure, point: Point, sigma: f64, method: Method, n_trials: u64, seed: u64) -> ResultRow {
    let mut row = point.row(figure);
    let protocol = point.protocol.expect("open-loop rows carry a protocol");
    let target = prob(point.eps);
    let set = |r: &mut ResultRow, s: OpenLoopSolution| {
        r.p_tx = Some(s.power);
        r.avg_power = Some(s.avg_power);
        r.outage = Some(s.outage.value());
    };
    match method {
        Method::Exact => fill(&mut row, open_loop_required_power_exact(target, point.rate, sigma, protocol), set),
        Method::Approx => unreachable!("filtered out when building the fig4 grid"),
        Method::Closed => fill(&mut row, open_loop_required_power(target, point.rate, sigma, protocol), set),
        Method::Mc => {
            let simulated = open_loop_required_power(target, point.rate, sigma, protocol).and_then(|s| {
                Ok((s, run_open_loop_conditioned(s.power, point.rate, sigma, protocol, n_trials, seed)?))
            });
            fill(&mut row, simulated, |r, (s, m)| {
                r.p_tx = Some(s.power);
                r.avg_power = Some(s.avg_power);
                let (z, se) = (m.conditional_round2_outage.map_or(f64::NAN, Probability::value), m.conditional_std_err.unwrap_or(f64::NAN));
                r.outage = Some(z);
                r.outage_std_err = Some(se);
                r.reference = Some(point.eps);
                r.z_score = Some((z - point.eps) / se);
                r.n_trials = Some(m.n_trials);
                r.seed = Some(m.seed);
            });
        }
    }
    gain(&mut row, &point);
    row
}

/// Required power versus speed, with `sigma` from the antenna geometry.
pub fn run_fig5(spec: &SweepSpec) -> Vec<ResultRow> {
    let figure = spec.figure;
    let lambda = spec.wavelength();
    let mut jobs: Vec<Job<'_>> = Vec::new();
    for &eps in &spec.eps {
        for &rate in &spec.rates {
            let base = Point { protocol: None, method: "no-retx", rate, eps, sigma: None, speed_kmh: None, d_a_m: None };
            jobs.push(Box::new(move |_| no_retx_row(figure, base)));
            for &multiple in &spec.antenna_separation_wavelengths {
                let d_a = multiple * lambda;
                for &speed in &spec.speeds_kmh {
                    let sigma = match sigma_from_geometry(speed / 3.6, spec.delay_s, spec.carrier_hz, d_a) {
                        Ok(s) => s,
                        Err(e) => {
                            let msg = e.to_string();
                            let point = Point { speed_kmh: Some(speed), d_a_m: Some(d_a), ..base };
                            jobs.push(Box::new(move |_| ResultRow { error: Some(msg.clone()), ..point.row(figure) }));
                            continue;
                        }
                    };
                    for &protocol in &spec.protocols {
                        for &method in &spec.methods {
                            let point = Point {
                                protocol: Some(protocol),
                                method: labelled(method),
                                sigma: Some(sigma),
                                speed_kmh: Some(speed),
                                d_a_m: Some(d_a),
                                ..base
                            };
                            let n = spec.n_trials;
                            jobs.push(Box::new(move |seed| optimum_row(figure, point, sigma, method, n, seed)));
                        }
                    }
                }
            }
        }
    }
    let mut rows = execute(jobs, spec.seed);
    reference_gaps(&mut rows);
    rows
}

/// Every closed-form quantity against its Monte Carlo estimate. Grids are
/// fixed; `n_trials` and `seed` come from the spec.
pub fn run_mc_verify(spec: &SweepSpec) -> Vec<ResultRow> {
    const FIGURE: Figure = Figure::McVerify;
    let n = spec.n_trials;
    let mut jobs: Vec<Job<'_>> = Vec::new();
    let base = Point { protocol: None, method: "", rate: 2.0, eps: 0.0, sigma: None, speed_kmh: None, d_a_m: None };

    // Round-2 outage equals the target by construction.
    for protocol in [Protocol::Rtd, Protocol::Inr] {
        for eps in [1e-3, 1e-2] {
            for sigma in [0.5, 0.8, 1.0] {
                let point = Point { protocol: Some(protocol), method: "closed-loop-outage", eps, sigma: Some(sigma), ..base };
                jobs.push(Box::new(move |seed| {
                    let mut row = point.row(FIGURE);
                    let run = HarqConfig::new(protocol, point.rate, eps, theta(point.rate))
                        .and_then(|c| run_closed_loop(&c, sigma, QuantileMethod::Exact, n, seed));
                    fill(&mut row, run, |r, m| {
                        r.p1_opt = Some(theta(point.rate));
                        r.avg_power = Some(m.avg_power);
                        r.avg_power_std_err = Some(m.avg_power_std_err);
                        let se = m.conditional_std_err.unwrap_or(f64::NAN);
                        let z = m.conditional_round2_outage.map_or(f64::NAN, Probability::value);
                        r.outage = Some(z);
                        r.outage_std_err = Some(se);
                        r.reference = Some(eps);
                        r.z_score = Some((z - eps) / se);
                        r.n_trials = Some(m.n_trials);
                        r.seed = Some(seed);
                    });
                    row
                }));
            }
        }
    }

    // Average power against quadrature.
    for protocol in [Protocol::Rtd, Protocol::Inr] {
        let point = Point { protocol: Some(protocol), method: "closed-loop-power", eps: 1e-3, sigma: Some(0.8), ..base };
        jobs.push(Box::new(move |seed| {
            let mut row = point.row(FIGURE);
            let run = HarqConfig::new(protocol, point.rate, point.eps, 10.0).and_then(|c| {
                let quad = avg_power_given_p1(&c, 0.8, QuantileMethod::Exact)?;
                Ok((quad, run_closed_loop(&c, 0.8, QuantileMethod::Exact, n, seed)?))
            });
            fill(&mut row, run, |r, (quad, m)| {
                r.p1_opt = Some(10.0);
                r.avg_power = Some(m.avg_power);
                r.avg_power_std_err = Some(m.avg_power_std_err);
                r.outage = m.conditional_round2_outage.map(Probability::value);
                r.outage_std_err = m.conditional_std_err;
                r.reference = Some(quad);
                r.z_score = Some((m.avg_power - quad) / m.avg_power_std_err);
                r.n_trials = Some(m.n_trials);
                r.seed = Some(seed);
            });
            row
        }));
    }

    // Open-loop conditional outage against the closed forms.
    for protocol in [Protocol::Rtd, Protocol::Inr] {
        for rate in [0.5, 2.0] {
            for step in 0..=8 {
                let p = from_db(5.0 * step as f64);
                let point = Point { protocol: Some(protocol), method: "open-loop-outage", rate, sigma: Some(0.8), ..base };
                jobs.push(Box::new(move |seed| {
                    let mut row = point.row(FIGURE);
                    row.eps = None;
                    let closed = zeta_closed(protocol, p, rate, 0.8).value();
                    fill(&mut row, run_open_loop_conditioned(p, rate, 0.8, protocol, n, seed), |r, m| {
                        r.p_tx = Some(p);
                        r.avg_power = Some(open_loop_avg_power(p, rate));
                        let se = m.conditional_std_err.unwrap_or(f64::NAN);
                        let z = m.conditional_round2_outage.map_or(f64::NAN, Probability::value);
                        r.outage = Some(z);
                        r.outage_std_err = Some(se);
                        r.reference = Some(closed);
                        r.z_score = Some((z - closed) / se);
                        r.n_trials = Some(m.n_trials);
                        r.seed = Some(seed);
                    });
                    row
                }));
            }
        }
    }

    // Open-loop average power and single-shot outage.
    for p in [1.0, 10.0, 100.0] {
        let point = Point { protocol: Some(Protocol::Rtd), method: "open-loop-power", sigma: Some(0.8), ..base };
        jobs.push(Box::new(move |seed| {
            let mut row = point.row(FIGURE);
            row.eps = None;
            let want = open_loop_avg_power(p, point.rate);
            fill(&mut row, run_open_loop(p, point.rate, 0.8, Protocol::Rtd, n, seed), |r, m| {
                r.p_tx = Some(p);
                r.avg_power = Some(m.avg_power);
                r.avg_power_std_err = Some(m.avg_power_std_err);
                r.reference = Some(want);
                r.z_score = Some((m.avg_power - want) / m.avg_power_std_err);
                r.n_trials = Some(m.n_trials);
                r.seed = Some(seed);
            });
            row
        }));
    }
    for mult in [1.0, 3.0, 10.0] {
        let point = Point { method: "no-retx-outage", ..base };
        jobs.push(Box::new(move |seed| {
            let mut row = point.row(FIGURE);
            row.eps = None;
            let p = mult * theta(point.rate);
            let want = no_retx_outage(p, point.rate).value();
            fill(&mut row, run_no_retx(p, point.rate, n, seed), |r, m| {
                r.p_tx = Some(p);
                r.avg_power = Some(m.avg_power);
                r.outage = Some(m.outage_rate.value());
                r.outage_std_err = Some(m.outage_std_err);
                r.reference = Some(want);
                r.z_score = Some((m.outage_rate.value() - want) / m.outage_std_err);
                r.n_trials = Some(m.n_trials);
                r.seed = Some(seed);
            });
            row
        }));
    }

    let rows = execute(jobs, spec.seed);
    for r in rows.iter().filter(|r| r.z_score.is_some_and(|z| z.abs() > 3.0)) {
        log::warn!("mc-verify row {} ({} {}): z = {:.2}", r.row, r.method, r.protocol, r.z_score.unwrap_or_default());
    }
    rows
}

pub fn run(spec: &SweepSpec) -> Vec<ResultRow> {
    match spec.figure {
        Figure::Fig3 | Figure::Custom => run_fig3(spec),
        Figure::Fig4 => run_fig4(spec),
        Figure::Fig5 => run_fig5(spec),
        Figure::Headline => run_headline(spec),
        Figure::McVerify => run_mc_verify(spec),
    }
}
