//! Correlation averages along strips, density-one subsequence extraction,
//! mean ergodic norms, and the Koopman-von Neumann splitting for systems
//! whose invariant algebra along a direction is known in closed form.
//!
//! Every inner sum is accumulated as an exact scalar; floating point enters
//! only when a report row is emitted.

use std::cmp::Ordering;

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::{column_points, DirectionVector, LatticePoint, StripSpec};
use crate::partition::SequencePlan;
use crate::report::ConvergenceReport;
use crate::scalar::{ExactInt, QuadExt};
use crate::systems::{
    joint_measure, measure, measure_ratio, validate_event, EventExpr, SystemSpec,
};

/// A finite rational linear combination of event indicators. All L^2
/// pairings reduce to exact joint measures of event pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableExpr<T: ExactInt> {
    terms: Vec<(Ratio<T>, EventExpr<T>)>,
}

impl<T: ExactInt> ObservableExpr<T> {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn indicator(e: EventExpr<T>) -> Self {
        Self { terms: vec![(Ratio::one(), e)] }
    }

    pub fn constant(sys: &SystemSpec<T>, c: Ratio<T>) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: vec![(c, EventExpr::whole(sys))] }
    }

    /// The mean-zero observable 1_e - mu(e). Requires a rational measure so
    /// the constant stays a rational coefficient.
    pub fn centered(sys: &SystemSpec<T>, e: EventExpr<T>) -> Result<Self> {
        let m = measure_ratio(sys, &e)?;
        let mut out = Self::indicator(e);
        out.terms.push((-m, EventExpr::whole(sys)));
        Ok(out)
    }

    pub fn scale(&self, c: &Ratio<T>) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(a, e)| (a.clone() * c.clone(), e.clone())).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Ratio::one()))
    }

    pub fn terms(&self) -> &[(Ratio<T>, EventExpr<T>)] {
        &self.terms
    }

    pub fn validate(&self, sys: &SystemSpec<T>) -> Result<()> {
        for (_, e) in &self.terms {
            validate_event(sys, e)?;
        }
        Ok(())
    }

    /// Exact integral sum_i c_i mu(E_i).
    pub fn integral(&self, sys: &SystemSpec<T>) -> Result<QuadExt<T>> {
        let mut total = QuadExt::zero();
        for (c, e) in &self.terms {
            total = total + QuadExt::from(c.clone()) * measure(sys, e)?;
        }
        Ok(total)
    }

    pub fn describe(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(c, e)| format!("{c}*1[{e}]"))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// Exact <f, g> = integral of f*g, expanded bilinearly over the event pairs.
pub fn inner_product<T: ExactInt>(
    sys: &SystemSpec<T>,
    f: &ObservableExpr<T>,
    g: &ObservableExpr<T>,
) -> Result<QuadExt<T>> {
    let mut total = QuadExt::zero();
    for (a, e) in f.terms() {
        for (b, h) in g.terms() {
            let coeff = QuadExt::from(a.clone() * b.clone());
            total = total + coeff * measure(sys, &e.intersect(h))?;
        }
    }
    Ok(total)
}

/// Exact <f composed with T^w, g> = sum of joint measures over term pairs.
pub fn translated_inner_product<T: ExactInt>(
    sys: &SystemSpec<T>,
    f: &ObservableExpr<T>,
    w: &LatticePoint,
    g: &ObservableExpr<T>,
) -> Result<QuadExt<T>> {
    let mut total = QuadExt::zero();
    for (a, e) in f.terms() {
        for (b, h) in g.terms() {
            let coeff = QuadExt::from(a.clone() * b.clone());
            total = total + coeff * joint_measure(sys, e, w, h)?;
        }
    }
    Ok(total)
}

fn scalar_over_count<T: ExactInt>(sum: &QuadExt<T>, count: &T) -> QuadExt<T> {
    sum.clone() / QuadExt::from(Ratio::from_integer(count.clone()))
}

/// Rows (k, average over the truncated strip of |mu(T^{-w}B and C) -
/// mu(B)mu(C)|), for k = 1..kmax. Sums are exact; truncations with no strip
/// points are skipped.
pub fn correlation_average<T: ExactInt>(
    sys: &SystemSpec<T>,
    b: &EventExpr<T>,
    c: &EventExpr<T>,
    strip: &StripSpec<T>,
    kmax: i64,
) -> Result<ConvergenceReport<T>> {
    validate_event(sys, b)?;
    validate_event(sys, c)?;
    let target = measure(sys, b)? * measure(sys, c)?;
    let mut report = ConvergenceReport::new(
        "correlation_average",
        sys.describe(),
        format!("B={b}, C={c}, strip {strip}"),
    );
    let mut sum = QuadExt::zero();
    let mut count = T::zero();
    for k in 1..=kmax {
        for w in column_points(strip, k - 1) {
            let dev = (joint_measure(sys, b, &w, c)? - target.clone()).abs();
            sum = sum + dev;
            count = count.clone() + T::one();
        }
        if !count.is_zero() {
            report.push_scalar(k, scalar_over_count(&sum, &count));
        }
    }
    Ok(report)
}

/// Rows (k, average of |<T^{-w}f, g> - (integral f)(integral g)|) over the
/// truncated strip.
pub fn observable_correlation_average<T: ExactInt>(
    sys: &SystemSpec<T>,
    f: &ObservableExpr<T>,
    g: &ObservableExpr<T>,
    strip: &StripSpec<T>,
    kmax: i64,
) -> Result<ConvergenceReport<T>> {
    f.validate(sys)?;
    g.validate(sys)?;
    let target = f.integral(sys)? * g.integral(sys)?;
    let mut report = ConvergenceReport::new(
        "observable_correlation_average",
        sys.describe(),
        format!("f={}, g={}, strip {strip}", f.describe(), g.describe()),
    );
    let mut sum = QuadExt::zero();
    let mut count = T::zero();
    for k in 1..=kmax {
        for w in column_points(strip, k - 1) {
            let dev = (translated_inner_product(sys, f, &w, g)? - target.clone()).abs();
            sum = sum + dev;
            count = count.clone() + T::one();
        }
        if !count.is_zero() {
            report.push_scalar(k, scalar_over_count(&sum, &count));
        }
    }
    Ok(report)
}

/// Rows (k, average of |<T^{-w}f, g>|) over the truncated strip; the
/// averages of a weak-mixing observable decay, and a nonzero almost-periodic
/// one keeps them bounded away from zero.
pub fn wm_average<T: ExactInt>(
    sys: &SystemSpec<T>,
    f: &ObservableExpr<T>,
    g: &ObservableExpr<T>,
    strip: &StripSpec<T>,
    kmax: i64,
) -> Result<ConvergenceReport<T>> {
    f.validate(sys)?;
    g.validate(sys)?;
    let mut report = ConvergenceReport::new(
        "wm_average",
        sys.describe(),
        format!("f={}, g={}, strip {strip}", f.describe(), g.describe()),
    );
    let mut sum = QuadExt::zero();
    let mut count = T::zero();
    for k in 1..=kmax {
        for w in column_points(strip, k - 1) {
            let dev = translated_inner_product(sys, f, &w, g)?.abs();
            sum = sum + dev;
            count = count.clone() + T::one();
        }
        if !count.is_zero() {
            report.push_scalar(k, scalar_over_count(&sum, &count));
        }
    }
    Ok(report)
}

/// A certified deviation threshold: for every window length k with
/// l_p <= k <= verified_through, the points deviating by at least 1/p make
/// up less than 1/(p+1) of the truncated strip.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdCertificate {
    pub p: u32,
    pub l_p: i64,
    pub verified_through: i64,
}

/// The strip minus its excluded bands: membership carries the guarantee
/// that a member with first coordinate at least l_p deviates by less than
/// 1/p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityOneSet {
    thresholds: Vec<ThresholdCertificate>,
    excluded: Vec<LatticePoint>,
    horizon: i64,
}

impl DensityOneSet {
    pub fn thresholds(&self) -> &[ThresholdCertificate] {
        &self.thresholds
    }

    pub fn threshold(&self, p: u32) -> Option<i64> {
        self.thresholds.iter().find(|t| t.p == p).map(|t| t.l_p)
    }

    /// Excluded strip points within the horizon, sorted.
    pub fn excluded(&self) -> &[LatticePoint] {
        &self.excluded
    }

    pub fn horizon(&self) -> i64 {
        self.horizon
    }

    /// Membership for strip points with first coordinate inside the horizon.
    pub fn contains(&self, w: &LatticePoint) -> bool {
        self.excluded.binary_search(w).is_err()
    }

    /// The strongest deviation bound certified at first coordinate `m1`:
    /// members there deviate by less than 1/p for the returned p.
    pub fn guarantee(&self, m1: i64) -> Option<u32> {
        self.thresholds.iter().filter(|t| t.l_p <= m1).map(|t| t.p).max()
    }
}

/// Scans correlation deviations over the strip up to `horizon` and finds,
/// for each p up to pmax, a threshold l_p past which points deviating by at
/// least 1/p stay below a 1/(p+1) fraction of every truncation. Points
/// deviating that much past their threshold are excluded; what remains has
/// the certified small-deviation guarantee.
pub fn extract_density_one_set<T: ExactInt>(
    sys: &SystemSpec<T>,
    b: &EventExpr<T>,
    c: &EventExpr<T>,
    strip: &StripSpec<T>,
    pmax: u32,
    horizon: i64,
) -> Result<DensityOneSet> {
    validate_event(sys, b)?;
    validate_event(sys, c)?;
    if pmax < 1 || horizon < 2 {
        return Err(Error::InvalidSpec("need pmax >= 1 and horizon >= 2".into()));
    }
    let target = measure(sys, b)? * measure(sys, c)?;
    // Deviations per column, plus prefix counts of strip points.
    let mut devs: Vec<Vec<(LatticePoint, QuadExt<T>)>> = Vec::with_capacity(horizon as usize);
    let mut strip_prefix: Vec<i64> = Vec::with_capacity(horizon as usize);
    let mut running = 0i64;
    for m1 in 0..horizon {
        let pts = column_points(strip, m1);
        running += pts.len() as i64;
        strip_prefix.push(running);
        let mut col = Vec::with_capacity(pts.len());
        for w in pts {
            let dev = (joint_measure(sys, b, &w, c)? - target.clone()).abs();
            col.push((w, dev));
        }
        devs.push(col);
    }
    let mut thresholds = Vec::with_capacity(pmax as usize);
    for p in 1..=pmax {
        let cutoff = QuadExt::from_fraction(1, p as i64);
        // Prefix counts of points with deviation >= 1/p.
        let mut bad_prefix = Vec::with_capacity(horizon as usize);
        let mut bad = 0i64;
        for col in &devs {
            bad += col.iter().filter(|(_, d)| d.cmp_exact(&cutoff) != Ordering::Less).count()
                as i64;
            bad_prefix.push(bad);
        }
        // Smallest l so that every truncation k in [l, horizon] has bad
        // fraction strictly below 1/(p+1); empty truncations cannot certify.
        let mut last_fail = 0i64;
        for k in 1..=horizon {
            let total = strip_prefix[(k - 1) as usize];
            let bad_k = bad_prefix[(k - 1) as usize];
            let ok = total > 0 && bad_k * (p as i64 + 1) < total;
            if !ok {
                last_fail = k;
            }
        }
        let l_p = last_fail + 1;
        if 2 * l_p > horizon {
            return Err(Error::HorizonTooSmall {
                requested_p: p,
                certified_p: p - 1,
                horizon,
            });
        }
        thresholds.push(ThresholdCertificate { p, l_p, verified_through: horizon });
    }
    // Band structure: between l_p and the next threshold, points deviating
    // by at least 1/p are excluded.
    let mut excluded = Vec::new();
    for (i, cert) in thresholds.iter().enumerate() {
        let band_end = thresholds.get(i + 1).map(|t| t.l_p).unwrap_or(horizon);
        let cutoff = QuadExt::from_fraction(1, cert.p as i64);
        for col in devs
            .iter()
            .take(band_end.max(cert.l_p) as usize)
            .skip(cert.l_p as usize)
        {
            for (w, d) in col {
                if d.cmp_exact(&cutoff) != Ordering::Less {
                    excluded.push(w.clone());
                }
            }
        }
    }
    excluded.sort();
    excluded.dedup();
    Ok(DensityOneSet { thresholds, excluded, horizon })
}

/// Rows (N, exact squared L^2 distance between the N-term ergodic average of
/// the indicator and its mean), expanded through pair correlations.
pub fn mean_ergodic_norm<T: ExactInt>(
    sys: &SystemSpec<T>,
    b: &EventExpr<T>,
    plan: &SequencePlan<T>,
    nmax: usize,
) -> Result<ConvergenceReport<T>> {
    validate_event(sys, b)?;
    if nmax < 1 || plan.len() < nmax {
        return Err(Error::InvalidSpec(format!(
            "need 1 <= nmax <= plan length, got nmax {nmax} with {} points",
            plan.len()
        )));
    }
    let mean_sq = {
        let m = measure(sys, b)?;
        m.clone() * m
    };
    let mut report = ConvergenceReport::new(
        "mean_ergodic_norm",
        sys.describe(),
        format!("B={b}, strip {}, {} plan points", plan.strip(), plan.len()),
    );
    let mut pair_sum = QuadExt::zero();
    let points = plan.points();
    for n in 1..=nmax {
        let new = &points[n - 1];
        // Add the new diagonal term and both mixed terms per earlier point.
        pair_sum = pair_sum + joint_measure(sys, b, &LatticePoint::pair(0, 0), b)?;
        for old in &points[..n - 1] {
            pair_sum = pair_sum + joint_measure(sys, b, &new.sub(old), b)?;
            pair_sum = pair_sum + joint_measure(sys, b, &old.sub(new), b)?;
        }
        let n_sq = T::from((n * n) as i64);
        let value = scalar_over_count(&pair_sum, &n_sq) - mean_sq.clone();
        report.push_scalar(n as i64, value);
    }
    Ok(report)
}

/// Splits an observable into its almost-periodic and weak-mixing parts
/// along a direction, for the system/direction pairs whose invariant
/// algebra is known exactly:
///
/// * any Bernoulli shift: the algebra is trivial, the projection is the
///   integral;
/// * the skew two-factor system along (1,-1) or (1,1): the algebra is the
///   fixed factor, the projection integrates out the moving one;
/// * any rotation: the whole space is almost periodic.
pub fn kvn_decompose<T: ExactInt>(
    sys: &SystemSpec<T>,
    f: &ObservableExpr<T>,
    direction: &DirectionVector<T>,
) -> Result<(ObservableExpr<T>, ObservableExpr<T>)> {
    f.validate(sys)?;
    if direction.q() != sys.q() {
        return Err(Error::DimensionMismatch { expected: sys.q(), got: direction.q() });
    }
    match sys {
        SystemSpec::Bernoulli2D { .. } => {
            let mean = f.integral(sys)?.to_ratio().ok_or_else(|| {
                Error::MalformedEvent("integral of a shift observable must be rational".into())
            })?;
            let kron = ObservableExpr::constant(sys, mean);
            let wm = f.sub(&kron);
            Ok((kron, wm))
        }
        SystemSpec::Counterexample { weights } => {
            let beta = &direction.betas()[0];
            let minus_one = QuadExt::from_i64(-1);
            let one = QuadExt::one();
            let integrate_left = if *beta == minus_one {
                true
            } else if *beta == one {
                false
            } else {
                return Err(Error::UnsupportedDecomposition {
                    system: sys.describe(),
                    direction: direction.to_string(),
                });
            };
            let kron = integrate_out_factor(sys, weights, f, integrate_left)?;
            let wm = f.sub(&kron);
            Ok((kron, wm))
        }
        SystemSpec::Rotation2D { .. } => Ok((f.clone(), ObservableExpr::zero())),
        SystemSpec::Product(..) => Err(Error::UnsupportedDecomposition {
            system: sys.describe(),
            direction: direction.to_string(),
        }),
    }
}

/// Conditional expectation of a two-factor observable onto the algebra of
/// one factor: each cylinder term keeps its constraints on the kept factor
/// and contributes the exact measure of the dropped ones as a coefficient.
fn integrate_out_factor<T: ExactInt>(
    sys: &SystemSpec<T>,
    weights: &[Ratio<T>],
    f: &ObservableExpr<T>,
    drop_left: bool,
) -> Result<ObservableExpr<T>> {
    use crate::systems::CylinderEvent;
    let mut out = ObservableExpr::zero();
    for (coeff, e) in f.terms() {
        for atom in e.atoms() {
            let CylinderEvent::TwoFactor { left, right } = atom else {
                return Err(Error::MalformedEvent(
                    "two-factor projection needs two-factor events".into(),
                ));
            };
            let (dropped, kept) = if drop_left { (left, right) } else { (right, left) };
            let mut dropped_measure = Ratio::one();
            for s in dropped.values() {
                let w = weights.get(*s).ok_or_else(|| {
                    Error::MalformedEvent(format!(
                        "symbol {s} outside alphabet of size {}",
                        weights.len()
                    ))
                })?;
                dropped_measure = dropped_measure * w.clone();
            }
            let kept_atom = if drop_left {
                CylinderEvent::TwoFactor { left: Default::default(), right: kept.clone() }
            } else {
                CylinderEvent::TwoFactor { left: kept.clone(), right: Default::default() }
            };
            let term = ObservableExpr::indicator(EventExpr::atom(kept_atom))
                .scale(&(coeff.clone() * dropped_measure));
            out = out.add(&term);
        }
    }
    let _ = sys;
    Ok(out)
}
