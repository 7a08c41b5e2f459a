//! Convergence tables produced by the analysis operations.
//!
//! Every long-running quantity in this crate reports its partial values as a
//! table of (index, value) rows with an optional exact rational per row.
//! Nothing here claims a limit: finite tables only bound limsup-style
//! quantities, and the envelope diagnostic makes that explicit.

use num_rational::Ratio;

use crate::scalar::{ratio_to_f64, ExactInt, QuadExt};

/// One table row. `exact` is present whenever the value is rational.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow<T: ExactInt> {
    pub index: i64,
    pub value: f64,
    pub exact: Option<Ratio<T>>,
}

/// Trailing running maximum of the value column, standing in for a limsup
/// at finite scale. `no_limit_claimed` is always true and is emitted so
/// downstream readers cannot mistake the table for a convergence proof.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeDiagnostic {
    pub window: usize,
    pub running_max: Vec<f64>,
    pub no_limit_claimed: bool,
}

pub const DEFAULT_ENVELOPE_WINDOW: usize = 8;

impl EnvelopeDiagnostic {
    pub fn trailing_max(values: &[f64], window: usize) -> Self {
        assert!(window >= 1, "envelope window must be positive");
        let running_max = (0..values.len())
            .map(|i| {
                let start = (i + 1).saturating_sub(window);
                values[start..=i].iter().copied().fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        Self { window, running_max, no_limit_claimed: true }
    }
}

/// A table of rows, strictly increasing in index, plus enough metadata to
/// reproduce the run.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport<T: ExactInt> {
    /// Name of the computed quantity, e.g. "correlation_average".
    pub quantity: String,
    /// System description string.
    pub system: String,
    /// Free-form description of the strip, events, and parameters.
    pub detail: String,
    pub rows: Vec<ReportRow<T>>,
    pub envelope: Option<EnvelopeDiagnostic>,
}

impl<T: ExactInt> ConvergenceReport<T> {
    pub fn new(
        quantity: impl Into<String>,
        system: impl Into<String>,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            quantity: quantity.into(),
            system: system.into(),
            detail: detail.into(),
            rows: Vec::new(),
            envelope: None,
        }
    }

    fn check_index(&self, index: i64) {
        if let Some(last) = self.rows.last() {
            assert!(index > last.index, "report rows must have strictly increasing indices");
        }
    }

    pub fn push_exact(&mut self, index: i64, value: Ratio<T>) {
        self.check_index(index);
        let decimal = ratio_to_f64(&value);
        self.rows.push(ReportRow { index, value: decimal, exact: Some(value) });
    }

    /// Pushes an exact scalar; the rational column is filled only when the
    /// scalar happens to be rational.
    pub fn push_scalar(&mut self, index: i64, value: QuadExt<T>) {
        self.check_index(index);
        self.rows.push(ReportRow { index, value: value.to_f64(), exact: value.to_ratio() });
    }

    pub fn push_float(&mut self, index: i64, value: f64) {
        self.check_index(index);
        self.rows.push(ReportRow { index, value, exact: None });
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }

    pub fn last_value(&self) -> Option<f64> {
        self.rows.last().map(|r| r.value)
    }

    /// Attaches the trailing-max envelope over the current value column.
    pub fn attach_envelope(&mut self, window: usize) {
        self.envelope = Some(EnvelopeDiagnostic::trailing_max(&self.values(), window));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn rows_keep_exact_and_decimal_in_sync() {
        let mut r: ConvergenceReport<BigInt> = ConvergenceReport::new("q", "sys", "d");
        r.push_exact(1, Ratio::new(BigInt::from(1), BigInt::from(4)));
        r.push_scalar(2, "1/2*sqrt(2)".parse().unwrap());
        assert_eq!(r.rows[0].value, 0.25);
        assert!(r.rows[1].exact.is_none());
        assert!((r.rows[1].value - 0.7071067811865476).abs() < 1e-15);
    }

    #[test]
    #[should_panic(expected = "strictly increasing")]
    fn rejects_non_monotone_indices() {
        let mut r: ConvergenceReport<BigInt> = ConvergenceReport::new("q", "sys", "d");
        r.push_float(2, 0.0);
        r.push_float(2, 0.0);
    }

    #[test]
    fn envelope_tracks_trailing_window() {
        let vals = [1.0, 3.0, 2.0, 0.5, 0.25];
        let env = EnvelopeDiagnostic::trailing_max(&vals, 2);
        assert_eq!(env.running_max, vec![1.0, 3.0, 3.0, 2.0, 0.5]);
        assert!(env.no_limit_claimed);
    }
}
