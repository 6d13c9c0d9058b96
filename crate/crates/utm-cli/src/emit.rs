//! Byte-stable text output: solution CSV, eigenvalue and check JSON.

use serde::Serialize;
use utm_core::identities::Check;
use utm_core::solver::SolutionField;
use utm_core::C64;

/// Seventeen significant digits, enough to round-trip any f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub const SOLUTION_HEADER: &str = "x,t,re_q,im_q";

/// One row per (t, x), times outermost, LF line endings.
pub fn solution_csv(field: &SolutionField) -> String {
    let mut out = String::from(SOLUTION_HEADER);
    out.push('\n');
    for (it, &t) in field.ts.iter().enumerate() {
        for (ix, &x) in field.xs.iter().enumerate() {
            let q = field.q[it][ix];
            out.push_str(&[fmt17(x), fmt17(t), fmt17(q.re), fmt17(q.im)].join(","));
            out.push('\n');
        }
    }
    out
}

/// Parses [`solution_csv`] output back into (x, t, q) rows.
pub fn read_solution_csv(text: &str) -> Result<Vec<(f64, f64, C64)>, String> {
    let mut lines = text.split('\n');
    if lines.next() != Some(SOLUTION_HEADER) {
        return Err("missing header".into());
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(str::parse).collect::<Result<_, _>>().map_err(|e| format!("{l}: {e}"))?;
            match v[..] {
                [x, t, re, im] => Ok((x, t, C64::new(re, im))),
                _ => Err(format!("{l}: expected 4 columns")),
            }
        })
        .collect()
}

/// Solution against a reference, with the pointwise error.
pub fn compare_csv(field: &SolutionField, reference: &[Vec<C64>]) -> String {
    let mut out = String::from("x,t,re_q,im_q,re_ref,im_ref,abs_err\n");
    for (it, &t) in field.ts.iter().enumerate() {
        for (ix, &x) in field.xs.iter().enumerate() {
            let (q, r) = (field.q[it][ix], reference[it][ix]);
            let cells = [x, t, q.re, q.im, r.re, r.im, (q - r).norm()];
            out.push_str(&cells.map(fmt17).join(","));
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenRecord {
    pub m: usize,
    pub kappa_re: f64,
    pub kappa_im: f64,
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub residual: f64,
    /// Δ_N truncation: accumulation levels 0..=2N.
    pub n_truncation: usize,
}

pub fn eigen_json(records: &[EigenRecord]) -> String {
    let mut s = serde_json::to_string_pretty(records).expect("plain records serialise");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct CheckRecord<'a> {
    name: &'a str,
    measured: f64,
    threshold: f64,
    passed: bool,
}

/// JSON array of checks. Non-finite measurements are written as null.
pub fn checks_json(checks: &[Check]) -> String {
    let records: Vec<CheckRecord> = checks
        .iter()
        .map(|c| CheckRecord { name: &c.name, measured: c.measured, threshold: c.threshold, passed: c.passed() })
        .collect();
    let mut s = serde_json::to_string_pretty(&records).expect("plain records serialise");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(xs: Vec<f64>, ts: Vec<f64>, q: Vec<Vec<C64>>) -> SolutionField {
        SolutionField { xs, ts, q, components: None, contour_nodes: 0, k_max: 0.0 }
    }

    #[test]
    fn empty_grid_is_header_only() {
        assert_eq!(solution_csv(&field(vec![], vec![], vec![])), "x,t,re_q,im_q\n");
        assert_eq!(solution_csv(&field(vec![0.5], vec![], vec![])), "x,t,re_q,im_q\n");
    }

    #[test]
    fn single_point() {
        let f = field(vec![0.5], vec![0.1], vec![vec![C64::new(-1.25, 0.0)]]);
        assert_eq!(
            solution_csv(&f),
            "x,t,re_q,im_q\n5.0000000000000000e-1,1.0000000000000001e-1,-1.2500000000000000e0,0.0000000000000000e0\n"
        );
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let xs = vec![0.1, 1.0 / 3.0, std::f64::consts::PI];
        let ts = vec![1e-300, 0.7];
        let q: Vec<Vec<C64>> = ts
            .iter()
            .map(|t| xs.iter().map(|x| C64::new((x * 7.3 + t).sin() / 3.0, -f64::MIN_POSITIVE * x)).collect())
            .collect();
        let f = field(xs.clone(), ts.clone(), q.clone());
        let rows = read_solution_csv(&solution_csv(&f)).unwrap();
        assert_eq!(rows.len(), 6);
        for (i, (x, t, v)) in rows.into_iter().enumerate() {
            let (it, ix) = (i / 3, i % 3);
            assert_eq!(x.to_bits(), xs[ix].to_bits());
            assert_eq!(t.to_bits(), ts[it].to_bits());
            assert_eq!(v.re.to_bits(), q[it][ix].re.to_bits());
            assert_eq!(v.im.to_bits(), q[it][ix].im.to_bits());
        }
    }
}
