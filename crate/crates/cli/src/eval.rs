//! Single-point evaluation: `pa-harq eval <op> key=value ...`.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context};
use pa_harq::alloc::{avg_power_given_p1, closed_form_avg_power, optimal_p1_closed_form, optimal_p1_numeric};
use pa_harq::bench::{
    no_retx_required_power, open_loop_avg_power, open_loop_required_power, open_loop_required_power_exact, zeta_closed,
    zeta_exact,
};
use pa_harq::channel::{cond_cdf_g2, inv_cond_cdf_g2, sigma_from_geometry};
use pa_harq::harq::{theta, theta1, P2Rule};
use pa_harq::specfn::{bessel_i, inv_marcum_q1_rho, lambert_w, marcum_q1, marcum_q1_approx, WBranch};
use pa_harq::{to_db, HarqConfig, Probability, Protocol, QuantileMethod};

pub const OPERATIONS: &[(&str, &str)] = &[
    ("bessel_i", "n x"),
    ("marcum_q1", "s rho"),
    ("marcum_q1_approx", "s rho"),
    ("inv_marcum_q1", "s p"),
    ("lambert_w", "x [branch=0|-1]"),
    ("theta", "rate"),
    ("sigma_geometry", "speed_kmh delay_s carrier_hz d_a_m"),
    ("cond_cdf", "x g1 sigma"),
    ("inv_cond_cdf", "eps g1 sigma [quantile=exact|fitted|asymptotic]"),
    ("p2", "protocol rate eps p1 g1 sigma [quantile]"),
    ("avg_power", "protocol rate eps p1 sigma [quantile|closed]"),
    ("optimum", "protocol rate eps sigma [method=exact|approx|closed]"),
    ("zeta", "protocol p rate sigma [method=closed|exact]"),
    ("open_loop", "protocol eps rate sigma [method=closed|exact]"),
    ("no_retx", "eps rate"),
];

struct Args(BTreeMap<String, String>);

impl Args {
    fn parse(pairs: &[String]) -> anyhow::Result<Self> {
        let mut map = BTreeMap::new();
        for p in pairs {
            let (k, v) = p.split_once('=').ok_or_else(|| anyhow!("expected key=value, got {p:?}"))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Args(map))
    }

    fn num(&self, key: &str) -> anyhow::Result<f64> {
        let v = self.0.get(key).ok_or_else(|| anyhow!("missing {key}="))?;
        v.parse().with_context(|| format!("{key}={v} is not a number"))
    }

    fn text(&self, key: &str, default: &str) -> String {
        self.0.get(key).cloned().unwrap_or_else(|| default.to_string())
    }

    fn protocol(&self) -> anyhow::Result<Protocol> {
        Ok(self.text("protocol", "rtd").parse()?)
    }

    fn quantile(&self) -> anyhow::Result<QuantileMethod> {
        parse_quantile(&self.text("quantile", "exact"))
    }
}

fn parse_quantile(s: &str) -> anyhow::Result<QuantileMethod> {
    match s {
        "exact" => Ok(QuantileMethod::Exact),
        "fitted" | "approx" => Ok(QuantileMethod::Fitted),
        "asymptotic" => Ok(QuantileMethod::Asymptotic),
        other => bail!("unknown quantile method {other:?}"),
    }
}

/// Evaluates `op` and returns `(quantity, value)` pairs.
pub fn evaluate(op: &str, pairs: &[String]) -> anyhow::Result<Vec<(String, f64)>> {
    let a = Args::parse(pairs)?;
    let one = |name: &str, v: f64| Ok(vec![(name.to_string(), v)]);
    match op {
        "bessel_i" => one("bessel_i", bessel_i(a.num("n")? as u32, a.num("x")?)?),
        "marcum_q1" => one("q1", marcum_q1(a.num("s")?, a.num("rho")?).value()),
        "marcum_q1_approx" => one("q1_approx", marcum_q1_approx(a.num("s")?, a.num("rho")?).value()),
        "inv_marcum_q1" => one("rho", inv_marcum_q1_rho(a.num("s")?, Probability::new(a.num("p")?)?)?),
        "lambert_w" => {
            let branch = match a.text("branch", "0").as_str() {
                "0" => WBranch::Principal,
                "-1" => WBranch::MinusOne,
                b => bail!("branch must be 0 or -1, got {b}"),
            };
            one("w", lambert_w(branch, a.num("x")?)?)
        }
        "theta" => {
            let r = a.num("rate")?;
            Ok(vec![("theta".into(), theta(r)), ("theta1".into(), theta1(r))])
        }
        "sigma_geometry" => one(
            "sigma",
            sigma_from_geometry(a.num("speed_kmh")? / 3.6, a.num("delay_s")?, a.num("carrier_hz")?, a.num("d_a_m")?)?,
        ),
        "cond_cdf" => one("cdf", cond_cdf_g2(a.num("x")?, a.num("g1")?, check_sigma(a.num("sigma")?)?).value()),
        "inv_cond_cdf" => one(
            "x",
            inv_cond_cdf_g2(Probability::new(a.num("eps")?)?, a.num("g1")?, a.num("sigma")?, a.quantile()?)?,
        ),
        "p2" => {
            let cfg = HarqConfig::new(a.protocol()?, a.num("rate")?, a.num("eps")?, a.num("p1")?)?;
            let r = P2Rule::new(cfg, a.num("sigma")?, a.quantile()?)?.power(a.num("g1")?)?;
            Ok(vec![("p2".into(), r.power), ("jensen_fallback".into(), f64::from(u8::from(r.jensen_fallback)))])
        }
        "avg_power" => {
            let cfg = HarqConfig::new(a.protocol()?, a.num("rate")?, a.num("eps")?, a.num("p1")?)?;
            let sigma = check_sigma(a.num("sigma")?)?;
            let v = match a.text("quantile", "exact").as_str() {
                "closed" => closed_form_avg_power(&cfg, sigma),
                q => avg_power_given_p1(&cfg, sigma, parse_quantile(q)?)?,
            };
            Ok(vec![("avg_power".into(), v), ("avg_power_db".into(), to_db(v))])
        }
        "optimum" => {
            let cfg = HarqConfig::new(a.protocol()?, a.num("rate")?, a.num("eps")?, 1.0)?;
            let sigma = a.num("sigma")?;
            let s = match a.text("method", "exact").as_str() {
                "closed" => optimal_p1_closed_form(&cfg, sigma)?,
                "approx" => optimal_p1_numeric(&cfg, sigma, QuantileMethod::Fitted)?,
                "exact" => optimal_p1_numeric(&cfg, sigma, QuantileMethod::Exact)?,
                m => bail!("unknown method {m:?}"),
            };
            Ok(vec![
                ("p1_opt".into(), s.p1_opt),
                ("p1_opt_db".into(), to_db(s.p1_opt)),
                ("avg_power".into(), s.avg_power),
                ("avg_power_db".into(), to_db(s.avg_power)),
                ("m".into(), s.m),
                ("c".into(), s.c),
            ])
        }
        "zeta" => {
            let (p, rate, sigma) = (a.num("p")?, a.num("rate")?, check_sigma(a.num("sigma")?)?);
            let z = match a.text("method", "closed").as_str() {
                "closed" => zeta_closed(a.protocol()?, p, rate, sigma).value(),
                "exact" => zeta_exact(a.protocol()?, p, rate, sigma)?.value(),
                m => bail!("unknown method {m:?}"),
            };
            Ok(vec![("zeta".into(), z), ("avg_power".into(), open_loop_avg_power(p, rate))])
        }
        "open_loop" => {
            let (target, rate, sigma) = (Probability::new(a.num("eps")?)?, a.num("rate")?, a.num("sigma")?);
            let s = match a.text("method", "closed").as_str() {
                "closed" => open_loop_required_power(target, rate, sigma, a.protocol()?)?,
                "exact" => open_loop_required_power_exact(target, rate, sigma, a.protocol()?)?,
                m => bail!("unknown method {m:?}"),
            };
            Ok(vec![
                ("p_tx".into(), s.power),
                ("avg_power".into(), s.avg_power),
                ("avg_power_db".into(), to_db(s.avg_power)),
                ("zeta".into(), s.outage.value()),
            ])
        }
        "no_retx" => {
            let p = no_retx_required_power(Probability::new(a.num("eps")?)?, a.num("rate")?)?;
            Ok(vec![("p_tx".into(), p), ("p_tx_db".into(), to_db(p))])
        }
        other => bail!("unknown operation {other:?}; known: {}", OPERATIONS.iter().map(|o| o.0).collect::<Vec<_>>().join(", ")),
    }
}

fn check_sigma(sigma: f64) -> anyhow::Result<f64> {
    if sigma > 0.0 && sigma <= 1.0 {
        Ok(sigma)
    } else {
        bail!("sigma = {sigma} not in (0, 1]")
    }
}
