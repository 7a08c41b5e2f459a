//! Finite partitions, joins, Shannon and conditional entropy, directional
//! sequence entropy tables, and the greedy full-entropy sequence builder.
//!
//! Probabilities stay exact until the final logarithm: every entropy value
//! is a sum of terms -p*log(p) with p an exact scalar, so the only floating
//! error is the evaluation of log at exactly known rationals.

use num_traits::{Float, FromPrimitive};

use crate::error::{Error, Result};
use crate::lattice::{column_points, LatticePoint, StripSpec};
use crate::report::{ConvergenceReport, DEFAULT_ENVELOPE_WINDOW};
use crate::scalar::{ExactInt, QuadExt};
use crate::systems::{measure, translate, validate_event, EventExpr, SystemSpec};

/// Default ceiling on join atom counts; joins grow as the product of the
/// factor sizes, so this caps chains of 2-atom partitions at length 20.
pub const DEFAULT_ATOM_CAP: usize = 1 << 20;

/// Logarithm base for reported entropy values. Internally everything is
/// computed in nats and converted once.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogBase {
    Nats,
    Bits,
}

impl LogBase {
    fn from_nats<F: Float + FromPrimitive>(self, nats: F) -> F {
        match self {
            Self::Nats => nats,
            Self::Bits => nats / F::from_f64(std::f64::consts::LN_2).unwrap(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Nats => "nats",
            Self::Bits => "bits",
        }
    }
}

fn to_float<T: ExactInt, F: Float + FromPrimitive>(x: &QuadExt<T>) -> F {
    F::from_f64(x.to_f64()).expect("exact scalar converts to the float type")
}

/// A finite measurable partition: disjoint events of positive measure
/// summing to the whole space.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition<T: ExactInt> {
    atoms: Vec<EventExpr<T>>,
}

impl<T: ExactInt> Partition<T> {
    /// Validates disjointness and total measure 1; drops empty atoms.
    pub fn new(sys: &SystemSpec<T>, atoms: Vec<EventExpr<T>>) -> Result<Self> {
        let atoms: Vec<EventExpr<T>> = atoms.into_iter().filter(|a| !a.is_empty()).collect();
        let mut total = QuadExt::zero();
        for (i, a) in atoms.iter().enumerate() {
            validate_event(sys, a)?;
            total = total + measure(sys, a)?;
            for b in &atoms[i + 1..] {
                if !a.intersect(b).is_empty() {
                    return Err(Error::InvalidPartition(
                        "partition atoms overlap".into(),
                    ));
                }
            }
        }
        if total != QuadExt::one() {
            return Err(Error::InvalidPartition(format!(
                "partition atom measures sum to {total}, expected 1"
            )));
        }
        Ok(Self { atoms })
    }

    /// The partition {e, complement of e}.
    pub fn binary(sys: &SystemSpec<T>, e: EventExpr<T>) -> Result<Self> {
        let c = e.complement(sys)?;
        Self::new(sys, vec![e, c])
    }

    /// The one-atom partition {X}.
    pub fn trivial(sys: &SystemSpec<T>) -> Self {
        Self { atoms: vec![EventExpr::whole(sys)] }
    }

    pub(crate) fn from_disjoint_atoms(atoms: Vec<EventExpr<T>>) -> Self {
        Self { atoms }
    }

    pub fn atoms(&self) -> &[EventExpr<T>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The partition T^{-w}(alpha), atom by atom.
    pub fn translate(&self, sys: &SystemSpec<T>, w: &LatticePoint) -> Result<Self> {
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            atoms.push(translate(sys, a, w)?);
        }
        Ok(Self { atoms })
    }
}

/// Exact atom probabilities of a partition.
pub fn atom_probabilities<T: ExactInt>(
    sys: &SystemSpec<T>,
    alpha: &Partition<T>,
) -> Result<Vec<QuadExt<T>>> {
    alpha.atoms().iter().map(|a| measure(sys, a)).collect()
}

/// H(alpha) = -sum p log p, with 0 log 0 = 0.
pub fn shannon_entropy<T: ExactInt, F: Float + FromPrimitive>(
    sys: &SystemSpec<T>,
    alpha: &Partition<T>,
    base: LogBase,
) -> Result<F> {
    let mut nats = F::zero();
    for p in atom_probabilities(sys, alpha)? {
        if p.is_positive() {
            let pf: F = to_float(&p);
            nats = nats - pf * pf.ln();
        }
    }
    Ok(base.from_nats(nats))
}

/// H(alpha | eta) = sum_C mu(C) sum_A -(mu(A&C)/mu(C)) log(mu(A&C)/mu(C)).
pub fn conditional_entropy<T: ExactInt, F: Float + FromPrimitive>(
    sys: &SystemSpec<T>,
    alpha: &Partition<T>,
    eta: &Partition<T>,
    base: LogBase,
) -> Result<F> {
    let mut nats = F::zero();
    for c in eta.atoms() {
        let mc = measure(sys, c)?;
        if !mc.is_positive() {
            continue;
        }
        let mc_f: F = to_float(&mc);
        for a in alpha.atoms() {
            let mac = measure(sys, &a.intersect(c))?;
            if !mac.is_positive() {
                continue;
            }
            let r: F = to_float(&(mac / mc.clone()));
            nats = nats - mc_f * r * r.ln();
        }
    }
    Ok(base.from_nats(nats))
}

/// Common refinement of the given partitions; zero-measure intersections are
/// dropped. Errors when an intermediate atom count would exceed `cap`.
pub fn join<T: ExactInt>(
    sys: &SystemSpec<T>,
    parts: &[&Partition<T>],
    cap: usize,
) -> Result<Partition<T>> {
    let mut atoms = vec![EventExpr::whole(sys)];
    for part in parts {
        let attempted = atoms.len().saturating_mul(part.len());
        if attempted > cap {
            return Err(Error::AtomCapExceeded { cap, attempted });
        }
        let mut next = Vec::new();
        for a in &atoms {
            for b in part.atoms() {
                let c = a.intersect(b);
                if !c.is_empty() {
                    next.push(c);
                }
            }
        }
        atoms = next;
    }
    Ok(Partition::from_disjoint_atoms(atoms))
}

/// An ordered list of strip points with strictly monotone first coordinates,
/// the index set of a directional entropy or ergodic average.
#[derive(Clone, Debug, PartialEq)]
pub struct SequencePlan<T: ExactInt> {
    points: Vec<LatticePoint>,
    strip: StripSpec<T>,
}

impl<T: ExactInt> SequencePlan<T> {
    pub fn new(points: Vec<LatticePoint>, strip: StripSpec<T>) -> Result<Self> {
        for p in &points {
            if !crate::lattice::strip_contains(&strip, p)? {
                return Err(Error::PointOutsideStrip { point: p.clone() });
            }
        }
        let firsts: Vec<i64> = points.iter().map(|p| p.first()).collect();
        let increasing = firsts.windows(2).all(|w| w[0] < w[1]);
        let decreasing = firsts.windows(2).all(|w| w[0] > w[1]);
        if !(increasing || decreasing) {
            return Err(Error::InvalidSpec(
                "plan first coordinates must be strictly monotone".into(),
            ));
        }
        Ok(Self { points, strip })
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn strip(&self) -> &StripSpec<T> {
        &self.strip
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Rows (k, (1/k) H(join of the first k translates of alpha)) for
/// k = 1..kmax. The table carries a trailing-max envelope; no limit is
/// claimed at finite k.
pub fn sequence_entropy_partial<T: ExactInt>(
    sys: &SystemSpec<T>,
    alpha: &Partition<T>,
    plan: &SequencePlan<T>,
    kmax: usize,
    cap: usize,
    base: LogBase,
) -> Result<ConvergenceReport<T>> {
    if kmax < 1 || plan.len() < kmax {
        return Err(Error::InvalidSpec(format!(
            "need 1 <= kmax <= plan length, got kmax {kmax} with {} points",
            plan.len()
        )));
    }
    let mut report = ConvergenceReport::new(
        "sequence_entropy_partial",
        sys.describe(),
        format!(
            "{} atoms, strip {}, {} plan points, base {}",
            alpha.len(),
            plan.strip(),
            plan.len(),
            base.name()
        ),
    );
    let mut running = Partition::trivial(sys);
    for (i, w) in plan.points().iter().take(kmax).enumerate() {
        let moved = alpha.translate(sys, w)?;
        running = join(sys, &[&running, &moved], cap)?;
        let h: f64 = entropy_of_atoms(sys, &running, base)?;
        report.push_float((i + 1) as i64, h / (i + 1) as f64);
    }
    report.attach_envelope(DEFAULT_ENVELOPE_WINDOW);
    Ok(report)
}

fn entropy_of_atoms<T: ExactInt>(
    sys: &SystemSpec<T>,
    part: &Partition<T>,
    base: LogBase,
) -> Result<f64> {
    shannon_entropy(sys, part, base)
}

/// The step tolerance used by the greedy full-entropy construction.
pub fn default_tol_schedule(j: usize) -> f64 {
    0.5f64.powi(j as i32)
}

/// Greedily selects strip points with strictly increasing first coordinates
/// so that each new translate of every tracked partition is nearly
/// independent of the join of its predecessors: at step j the conditional
/// entropy must stay within tol(j) of the full entropy, for every partition
/// with index below min(j, #partitions).
///
/// Candidates are scanned in lexicographic order with first coordinates up
/// to `horizon`; exhausting the scan is reported as an error carrying the
/// failing step and the partial plan, which is the expected outcome on a
/// direction with an invariant set.
pub fn construct_full_entropy_sequence<T: ExactInt>(
    sys: &SystemSpec<T>,
    alphas: &[Partition<T>],
    strip: &StripSpec<T>,
    length: usize,
    horizon: i64,
    cap: usize,
    tol_schedule: impl Fn(usize) -> f64,
) -> Result<SequencePlan<T>> {
    const SLACK: f64 = 1e-12;
    let targets: Vec<f64> = alphas
        .iter()
        .map(|a| shannon_entropy(sys, a, LogBase::Nats))
        .collect::<Result<_>>()?;
    let mut joins: Vec<Partition<T>> = alphas.iter().map(|_| Partition::trivial(sys)).collect();
    let mut points: Vec<LatticePoint> = Vec::with_capacity(length);
    let mut next_m1 = 0i64;
    for j in 1..=length {
        let tol = tol_schedule(j);
        let checked = alphas.len().min(j);
        let mut accepted: Option<LatticePoint> = None;
        'scan: for m1 in next_m1..=horizon {
            for candidate in column_points(strip, m1) {
                let mut ok = true;
                for l in 0..checked {
                    let moved = alphas[l].translate(sys, &candidate)?;
                    let cond: f64 = conditional_entropy(sys, &moved, &joins[l], LogBase::Nats)?;
                    if cond < targets[l] - tol - SLACK {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    accepted = Some(candidate);
                    break 'scan;
                }
            }
        }
        let w = accepted.ok_or_else(|| Error::SearchExhausted {
            step: j,
            horizon,
            partial: points.clone(),
        })?;
        for (l, alpha) in alphas.iter().enumerate() {
            let moved = alpha.translate(sys, &w)?;
            joins[l] = join(sys, &[&joins[l], &moved], cap)?;
        }
        next_m1 = w.first() + 1;
        points.push(w);
    }
    SequencePlan::new(points, strip.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::CylinderEvent;
    use num_bigint::BigInt;
    use num_rational::Ratio;

    fn half() -> Ratio<BigInt> {
        Ratio::new(BigInt::from(1), BigInt::from(2))
    }

    fn fair_bernoulli() -> SystemSpec<BigInt> {
        SystemSpec::bernoulli(vec![half(), half()]).unwrap()
    }

    fn fair_counterexample() -> SystemSpec<BigInt> {
        SystemSpec::counterexample(vec![half(), half()]).unwrap()
    }

    fn origin_partition(sys: &SystemSpec<BigInt>) -> Partition<BigInt> {
        Partition::binary(sys, EventExpr::atom(CylinderEvent::bernoulli_site(0, 0, 0))).unwrap()
    }

    fn right_zero_partition(sys: &SystemSpec<BigInt>) -> Partition<BigInt> {
        Partition::binary(sys, EventExpr::atom(CylinderEvent::right_site(0, 0))).unwrap()
    }

    fn diag_strip(beta: &str, width: &str) -> StripSpec<BigInt> {
        StripSpec::planar(beta.parse().unwrap(), width.parse().unwrap()).unwrap()
    }

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn shannon_entropy_matches_closed_forms() {
        let sys = fair_bernoulli();
        let alpha = origin_partition(&sys);
        let h: f64 = shannon_entropy(&sys, &alpha, LogBase::Nats).unwrap();
        assert!((h - LN2).abs() < 1e-15);
        let bits: f64 = shannon_entropy(&sys, &alpha, LogBase::Bits).unwrap();
        assert!((bits - 1.0).abs() < 1e-15);
        let trivial = Partition::trivial(&sys);
        let zero: f64 = shannon_entropy(&sys, &trivial, LogBase::Nats).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn skewed_weights_entropy_matches_precomputed_value() {
        let third = Ratio::new(BigInt::from(1), BigInt::from(3));
        let two_thirds = Ratio::new(BigInt::from(2), BigInt::from(3));
        let sys = SystemSpec::bernoulli(vec![third, two_thirds]).unwrap();
        let alpha = origin_partition(&sys);
        let h: f64 = shannon_entropy(&sys, &alpha, LogBase::Nats).unwrap();
        // (1/3)ln3 + (2/3)ln(3/2), evaluated once at high precision.
        assert!((h - 0.636_514_168_294_813).abs() < 1e-12);
    }

    #[test]
    fn partition_validation_rejects_bad_inputs() {
        let sys = fair_bernoulli();
        let b = EventExpr::atom(CylinderEvent::bernoulli_site(0, 0, 0));
        let overlapping = Partition::new(&sys, vec![b.clone(), EventExpr::whole(&sys)]);
        assert!(matches!(overlapping, Err(Error::InvalidPartition(_))));
        let undersized = Partition::new(&sys, vec![b]);
        assert!(matches!(undersized, Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn join_of_independent_translates_has_product_atoms() {
        let sys = fair_bernoulli();
        let alpha = origin_partition(&sys);
        let a1 = alpha.translate(&sys, &LatticePoint::pair(1, 0)).unwrap();
        let a2 = alpha.translate(&sys, &LatticePoint::pair(0, 1)).unwrap();
        let joined = join(&sys, &[&a1, &a2], DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(joined.len(), 4);
        for p in atom_probabilities(&sys, &joined).unwrap() {
            assert_eq!(p, "1/4".parse().unwrap());
        }
    }

    #[test]
    fn join_is_idempotent_and_capped() {
        let sys = fair_bernoulli();
        let alpha = origin_partition(&sys);
        let same = join(&sys, &[&alpha, &alpha], DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(same.len(), 2);
        let err = join(&sys, &[&alpha, &alpha, &alpha], 3).unwrap_err();
        assert_eq!(err, Error::AtomCapExceeded { cap: 3, attempted: 4 });
    }

    #[test]
    fn diagonal_join_on_the_invariant_direction_stays_small() {
        let sys = fair_counterexample();
        let alpha = right_zero_partition(&sys);
        let mut parts = Vec::new();
        for i in 1..=5i64 {
            parts.push(alpha.translate(&sys, &LatticePoint::pair(i, -i)).unwrap());
        }
        let refs: Vec<&Partition<BigInt>> = parts.iter().collect();
        let joined = join(&sys, &refs, DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(joined.len(), 2);
    }

    #[test]
    fn conditional_entropy_limits() {
        let sys = fair_bernoulli();
        let alpha = origin_partition(&sys);
        let same: f64 = conditional_entropy(&sys, &alpha, &alpha, LogBase::Nats).unwrap();
        assert_eq!(same, 0.0);
        let trivial = Partition::trivial(&sys);
        let full: f64 = conditional_entropy(&sys, &alpha, &trivial, LogBase::Nats).unwrap();
        assert!((full - LN2).abs() < 1e-15);
        let other = alpha.translate(&sys, &LatticePoint::pair(2, 2)).unwrap();
        let indep: f64 = conditional_entropy(&sys, &alpha, &other, LogBase::Nats).unwrap();
        assert!((indep - LN2).abs() < 1e-15);
    }

    #[test]
    fn sequence_entropy_is_constant_log2_for_independent_plans() {
        let sys = fair_bernoulli();
        let alpha = origin_partition(&sys);
        let strip = diag_strip("1/2", "2");
        let points: Vec<LatticePoint> =
            (0..8).map(|i| LatticePoint::pair(i, (i as f64 / 2.0).floor() as i64)).collect();
        let plan = SequencePlan::new(points, strip).unwrap();
        let report = sequence_entropy_partial(&sys, &alpha, &plan, 8, DEFAULT_ATOM_CAP, LogBase::Nats)
            .unwrap();
        for row in &report.rows {
            assert!((row.value - LN2).abs() < 1e-12, "row {} was {}", row.index, row.value);
        }
        let env = report.envelope.as_ref().unwrap();
        assert!(env.no_limit_claimed);
        assert_eq!(env.running_max.len(), 8);
    }

    #[test]
    fn sequence_entropy_decays_on_the_invariant_direction() {
        let sys = fair_counterexample();
        let alpha = right_zero_partition(&sys);
        let strip = diag_strip("-1", "1");
        let points: Vec<LatticePoint> = (0..6).map(|i| LatticePoint::pair(i, -i)).collect();
        let plan = SequencePlan::new(points, strip).unwrap();
        let report = sequence_entropy_partial(&sys, &alpha, &plan, 6, DEFAULT_ATOM_CAP, LogBase::Nats)
            .unwrap();
        for (i, row) in report.rows.iter().enumerate() {
            let k = (i + 1) as f64;
            assert!((row.value - LN2 / k).abs() < 1e-12);
        }
    }

    #[test]
    fn plan_validation_rejects_bad_points() {
        let strip = diag_strip("1", "0");
        let outside = SequencePlan::new(vec![LatticePoint::pair(0, 1)], strip.clone());
        assert!(matches!(outside, Err(Error::PointOutsideStrip { .. })));
        let not_monotone = SequencePlan::new(
            vec![
                LatticePoint::pair(0, 0),
                LatticePoint::pair(2, 2),
                LatticePoint::pair(1, 1),
            ],
            strip,
        );
        assert!(not_monotone.is_err());
    }

    #[test]
    fn greedy_construction_achieves_full_entropy_on_bernoulli() {
        let sys = fair_bernoulli();
        let alpha = origin_partition(&sys);
        let strip = diag_strip("1/2", "2");
        let plan = construct_full_entropy_sequence(
            &sys,
            &[alpha.clone()],
            &strip,
            6,
            100,
            DEFAULT_ATOM_CAP,
            default_tol_schedule,
        )
        .unwrap();
        assert_eq!(plan.len(), 6);
        let report = sequence_entropy_partial(&sys, &alpha, &plan, 6, DEFAULT_ATOM_CAP, LogBase::Nats)
            .unwrap();
        assert!((report.last_value().unwrap() - LN2).abs() < 1e-12);
    }

    #[test]
    fn greedy_construction_exhausts_on_the_invariant_direction() {
        let sys = fair_counterexample();
        let alpha = right_zero_partition(&sys);
        let strip = diag_strip("-1", "1");
        let err = construct_full_entropy_sequence(
            &sys,
            &[alpha],
            &strip,
            4,
            50,
            DEFAULT_ATOM_CAP,
            default_tol_schedule,
        )
        .unwrap_err();
        match err {
            Error::SearchExhausted { step, horizon, partial } => {
                assert_eq!(step, 2);
                assert_eq!(horizon, 50);
                assert_eq!(partial.len(), 1);
            }
            other => panic!("expected search exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn greedy_construction_degenerates_gracefully_on_trivial_partitions() {
        let sys = fair_bernoulli();
        let trivial = Partition::trivial(&sys);
        let strip = diag_strip("1", "0");
        let plan = construct_full_entropy_sequence(
            &sys,
            &[trivial],
            &strip,
            5,
            20,
            DEFAULT_ATOM_CAP,
            default_tol_schedule,
        )
        .unwrap();
        let firsts: Vec<i64> = plan.points().iter().map(|p| p.first()).collect();
        assert_eq!(firsts, vec![0, 1, 2, 3, 4]);
    }
}
