//! Fixed-format CSV for sweeps.

use std::fmt::Write;

pub const HEADER: &str =
    "swept_value,mi_nats,mi_bits,m,mu1_or_lambda1,mu2_or_lambda2,kkt_passed,max_grid_violation,runtime_s";

/// One sweep point. `None` fields stay empty in the CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub swept_value: f64,
    pub mi_nats: Option<f64>,
    pub m: usize,
    pub multipliers: Option<(f64, f64)>,
    pub kkt_passed: bool,
    pub max_grid_violation: Option<f64>,
    pub runtime_s: Option<f64>,
    /// Why the point has no verified solution, if it does not.
    pub note: Option<String>,
}

/// 12 significant digits in scientific notation, independent of locale.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl Row {
    pub fn to_line(&self) -> String {
        let mut s = String::new();
        let (m1, m2) = match self.multipliers {
            Some((a, b)) => (Some(a), Some(b)),
            None => (None, None),
        };
        write!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            num(self.swept_value),
            opt(self.mi_nats),
            opt(self.mi_nats.map(|v| v / std::f64::consts::LN_2)),
            self.m,
            opt(m1),
            opt(m2),
            self.kkt_passed,
            opt(self.max_grid_violation),
            opt(self.runtime_s),
        )
        .unwrap();
        s
    }
}

pub fn render(rows: &[Row]) -> String {
    let mut s = String::from(HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_line());
        s.push('\n');
    }
    s
}

/// Parses a file written by [`render`].
pub fn parse(text: &str) -> anyhow::Result<Vec<Row>> {
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        anyhow::bail!("unexpected CSV header");
    }
    let f = |s: &str| -> anyhow::Result<Option<f64>> { if s.is_empty() { Ok(None) } else { Ok(Some(s.parse()?)) } };
    lines
        .map(|line| {
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 9 {
                anyhow::bail!("expected 9 columns, got {}", c.len());
            }
            let m1 = f(c[4])?;
            let m2 = f(c[5])?;
            Ok(Row {
                swept_value: c[0].parse()?,
                mi_nats: f(c[1])?,
                m: c[3].parse()?,
                multipliers: m1.zip(m2),
                kkt_passed: c[6].parse()?,
                max_grid_violation: f(c[7])?,
                runtime_s: f(c[8])?,
                note: None,
            })
        })
        .collect()
}
