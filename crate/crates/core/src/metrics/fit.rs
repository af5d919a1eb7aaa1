use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub scale: f64,
    pub error: f64,
    pub stderr: f64,
}

/// Rows with the OLS fit of `ln error` on `ln scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_stderr: f64,
}

pub fn fit_rate(rows: &[RateRow]) -> Result<RateTable> {
    if rows.len() < 3 {
        return Err(Error::Input(format!("a rate fit needs at least 3 rows, got {}", rows.len())));
    }
    for r in rows {
        if !(r.error > 0.0 && r.error.is_finite()) {
            return Err(Error::Input(format!("error must be positive, got {} at scale {}", r.error, r.scale)));
        }
        if !(r.scale > 0.0 && r.scale.is_finite()) {
            return Err(Error::Input(format!("scale must be positive, got {}", r.scale)));
        }
        if r.stderr < 0.0 {
            return Err(Error::Input(format!("stderr must be nonnegative, got {}", r.stderr)));
        }
    }
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| r.scale.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.error.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Input("all rows share one scale".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let sst: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if sst == 0.0 { 1.0 } else { 1.0 - sse / sst };
    let slope_stderr = (sse / (n - 2.0) / sxx).sqrt();
    Ok(RateTable { rows: rows.to_vec(), slope, intercept, r_squared, slope_stderr })
}

/// `scale,error,stderr` with round-trip float formatting.
pub fn rows_to_csv(rows: &[RateRow]) -> String {
    let mut s = String::from("scale,error,stderr\n");
    for r in rows {
        s.push_str(&format!("{},{},{}\n", r.scale, r.error, r.stderr));
    }
    s
}

/// Plot-ready `ln_scale,ln_error`.
pub fn rows_to_loglog_csv(rows: &[RateRow]) -> String {
    let mut s = String::from("ln_scale,ln_error\n");
    for r in rows {
        s.push_str(&format!("{},{}\n", r.scale.ln(), r.error.ln()));
    }
    s
}

impl RateTable {
    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.rows)
    }

    pub fn to_loglog_csv(&self) -> String {
        rows_to_loglog_csv(&self.rows)
    }

    pub fn rows_from_csv(text: &str) -> Result<Vec<RateRow>> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("scale,error,stderr") {
            return Err(Error::Input("rate CSV must start with `scale,error,stderr`".into()));
        }
        lines
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                let f: Vec<&str> = l.split(',').collect();
                let parse = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Input(format!("rate CSV line {}: {e}", i + 2)))
                };
                if f.len() != 3 {
                    return Err(Error::Input(format!("rate CSV line {} needs 3 fields", i + 2)));
                }
                Ok(RateRow { scale: parse(f[0])?, error: parse(f[1])?, stderr: parse(f[2])? })
            })
            .collect()
    }
}
