//! Self-describing CSV rows.

use std::io::Write;

use pa_harq::to_db;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const COLUMNS: [&str; 25] = [
    "figure",
    "row",
    "protocol",
    "method",
    "rate_r",
    "eps",
    "sigma",
    "speed_kmh",
    "d_a_m",
    "p_tx",
    "p1_opt",
    "p1_opt_db",
    "avg_power",
    "avg_power_db",
    "avg_power_std_err",
    "gain_db",
    "ref_gap_db",
    "outage",
    "outage_std_err",
    "reference",
    "z_score",
    "n_trials",
    "seed",
    "version",
    "error",
];

/// One output line. Unset fields are written as empty cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultRow {
    pub figure: String,
    pub row: usize,
    pub protocol: String,
    pub method: String,
    pub rate: Option<f64>,
    pub eps: Option<f64>,
    pub sigma: Option<f64>,
    pub speed_kmh: Option<f64>,
    pub d_a_m: Option<f64>,
    /// Per-round transmit power for equal-power schemes.
    pub p_tx: Option<f64>,
    pub p1_opt: Option<f64>,
    pub avg_power: Option<f64>,
    pub avg_power_std_err: Option<f64>,
    /// No-retransmission power minus this row's average power, in dB.
    pub gain_db: Option<f64>,
    /// This row's average power minus the numeric-exact one, in dB.
    pub ref_gap_db: Option<f64>,
    pub outage: Option<f64>,
    pub outage_std_err: Option<f64>,
    /// Value a Monte Carlo estimate is checked against.
    pub reference: Option<f64>,
    pub z_score: Option<f64>,
    pub n_trials: Option<u64>,
    pub seed: Option<u64>,
    pub error: Option<String>,
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn db(v: Option<f64>) -> Option<f64> {
    v.map(to_db)
}

impl ResultRow {
    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }

    pub fn avg_power_db(&self) -> Option<f64> {
        db(self.avg_power)
    }

    pub fn record(&self) -> Vec<String> {
        vec![
            self.figure.clone(),
            self.row.to_string(),
            self.protocol.clone(),
            self.method.clone(),
            num(self.rate),
            num(self.eps),
            num(self.sigma),
            num(self.speed_kmh),
            num(self.d_a_m),
            num(self.p_tx),
            num(self.p1_opt),
            num(db(self.p1_opt)),
            num(self.avg_power),
            num(db(self.avg_power)),
            num(self.avg_power_std_err),
            num(self.gain_db),
            num(self.ref_gap_db),
            num(self.outage),
            num(self.outage_std_err),
            num(self.reference),
            num(self.z_score),
            self.n_trials.map(|n| n.to_string()).unwrap_or_default(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            VERSION.to_string(),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[ResultRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_matches_header_and_roundtrips() {
        let row = ResultRow {
            figure: "fig3".into(),
            avg_power: Some(1234.5678901234567),
            p1_opt: Some(0.1),
            error: Some("bad, really".into()),
            ..Default::default()
        };
        let rec = row.record();
        assert_eq!(rec.len(), COLUMNS.len());
        assert_eq!(rec[12].parse::<f64>().unwrap(), 1234.5678901234567);
        assert_eq!(rec[13].parse::<f64>().unwrap(), to_db(1234.5678901234567));
        assert_eq!(rec[10].parse::<f64>().unwrap(), 0.1);
        let mut buf = Vec::new();
        write_csv(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"bad, really\""));
        assert_eq!(text.lines().count(), 2);
    }
}
