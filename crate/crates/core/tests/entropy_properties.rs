//! Randomized entropy invariants: subadditivity and the chain rule for
//! joins, translation invariance, per-step bounds on sequence entropy, and
//! the continuity envelope tying conditional entropy to partition distance.

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use proptest::prelude::*;

use dirmix_core::lattice::{LatticePoint, StripSpec};
use dirmix_core::partition::{
    conditional_entropy, join, sequence_entropy_partial, shannon_entropy, LogBase, Partition,
    SequencePlan, DEFAULT_ATOM_CAP,
};
use dirmix_core::systems::{measure, CylinderEvent, EventExpr, SystemSpec};
use dirmix_core::QuadExt;

type S = QuadExt<BigInt>;

fn fair_bernoulli() -> SystemSpec<BigInt> {
    let half = Ratio::new(BigInt::from(1), BigInt::from(2));
    SystemSpec::bernoulli(vec![half.clone(), half]).unwrap()
}

fn cylinder(sites: &[((i64, i64), usize)]) -> EventExpr<BigInt> {
    let mut dedup: std::collections::BTreeMap<(i64, i64), usize> = Default::default();
    for ((m, n), s) in sites {
        dedup.insert((*m, *n), s % 2);
    }
    let entries: Vec<((i64, i64), usize)> = dedup.into_iter().collect();
    EventExpr::atom(CylinderEvent::bernoulli_sites(&entries).unwrap())
}

fn site_data() -> impl Strategy<Value = Vec<((i64, i64), usize)>> {
    prop::collection::vec(((-2i64..=2, -2i64..=2), 0usize..2), 1..4)
}

/// The sixteen cylinders fixing symbols on a 2x2 block, each of measure
/// 1/16 under the fair coin.
fn block_atoms() -> Vec<CylinderEvent<BigInt>> {
    (0usize..16)
        .map(|i| {
            let entries = [
                ((0i64, 0i64), i & 1),
                ((0, 1), (i >> 1) & 1),
                ((1, 0), (i >> 2) & 1),
                ((1, 1), (i >> 3) & 1),
            ];
            CylinderEvent::bernoulli_sites(&entries).unwrap()
        })
        .collect()
}

/// Groups the sixteen block cylinders by an assignment vector into four
/// partition atoms; `None` when a group is empty.
fn grouped_partition(
    sys: &SystemSpec<BigInt>,
    assign: &[usize; 16],
) -> Option<Partition<BigInt>> {
    let blocks = block_atoms();
    let mut groups: Vec<Vec<CylinderEvent<BigInt>>> = vec![Vec::new(); 4];
    for (i, g) in assign.iter().enumerate() {
        groups[*g].push(blocks[i].clone());
    }
    if groups.iter().any(|g| g.is_empty()) {
        return None;
    }
    let atoms: Vec<EventExpr<BigInt>> =
        groups.into_iter().map(|g| EventExpr::union(g).unwrap()).collect();
    Some(Partition::new(sys, atoms).unwrap())
}

fn assignment() -> impl Strategy<Value = [usize; 16]> {
    prop::array::uniform16(0usize..4)
        .prop_filter("all four groups nonempty", |a| (0..4).all(|g| a.contains(&g)))
}

fn symmetric_difference_mass(
    sys: &SystemSpec<BigInt>,
    a: &EventExpr<BigInt>,
    c: &EventExpr<BigInt>,
) -> S {
    let two = S::from_i64(2);
    measure(sys, a).unwrap() + measure(sys, c).unwrap()
        - two * measure(sys, &a.intersect(c)).unwrap()
}

proptest! {
    /// Joins are subadditive and refine both factors.
    #[test]
    fn join_entropy_is_subadditive(
        sites_a in site_data(),
        sites_b in site_data(),
    ) {
        let sys = fair_bernoulli();
        let alpha = Partition::binary(&sys, cylinder(&sites_a)).unwrap();
        let eta = Partition::binary(&sys, cylinder(&sites_b)).unwrap();
        let joined = join(&sys, &[&alpha, &eta], DEFAULT_ATOM_CAP).unwrap();
        let ha: f64 = shannon_entropy(&sys, &alpha, LogBase::Nats).unwrap();
        let he: f64 = shannon_entropy(&sys, &eta, LogBase::Nats).unwrap();
        let hj: f64 = shannon_entropy(&sys, &joined, LogBase::Nats).unwrap();
        prop_assert!(hj <= ha + he + 1e-9, "H(join) = {hj} > {ha} + {he}");
        prop_assert!(hj >= ha.max(he) - 1e-9);
    }

    /// Chain rule: H(join) = H(eta) + H(alpha | eta).
    #[test]
    fn chain_rule_holds(
        sites_a in site_data(),
        sites_b in site_data(),
    ) {
        let sys = fair_bernoulli();
        let alpha = Partition::binary(&sys, cylinder(&sites_a)).unwrap();
        let eta = Partition::binary(&sys, cylinder(&sites_b)).unwrap();
        let joined = join(&sys, &[&alpha, &eta], DEFAULT_ATOM_CAP).unwrap();
        let hj: f64 = shannon_entropy(&sys, &joined, LogBase::Nats).unwrap();
        let he: f64 = shannon_entropy(&sys, &eta, LogBase::Nats).unwrap();
        let cond: f64 = conditional_entropy(&sys, &alpha, &eta, LogBase::Nats).unwrap();
        prop_assert!((hj - he - cond).abs() < 1e-9);
        prop_assert!(cond >= -1e-12);
    }

    /// Entropy is invariant under lattice translation of the partition.
    #[test]
    fn entropy_is_translation_invariant(
        sites in site_data(),
        m in -20i64..=20,
        n in -20i64..=20,
    ) {
        let sys = fair_bernoulli();
        let alpha = Partition::binary(&sys, cylinder(&sites)).unwrap();
        let moved = alpha.translate(&sys, &LatticePoint::pair(m, n)).unwrap();
        let h: f64 = shannon_entropy(&sys, &alpha, LogBase::Nats).unwrap();
        let hm: f64 = shannon_entropy(&sys, &moved, LogBase::Nats).unwrap();
        prop_assert!((h - hm).abs() < 1e-12);
    }

    /// Normalized sequence entropy never exceeds the single-partition
    /// entropy, for any admissible plan.
    #[test]
    fn sequence_entropy_respects_the_ceiling(
        sites in site_data(),
        steps in prop::collection::vec((1i64..=4, 0u8..=255), 2..7),
    ) {
        let sys = fair_bernoulli();
        let alpha = Partition::binary(&sys, cylinder(&sites)).unwrap();
        let strip = StripSpec::planar(S::from_fraction(1, 2), S::from_i64(2)).unwrap();
        let mut m = 0i64;
        let mut points = Vec::new();
        for (dm, pick) in &steps {
            let (lo, hi) = strip.column_range(0, m).unwrap();
            let span = (hi - lo + 1) as i64;
            points.push(LatticePoint::pair(m, lo + (*pick as i64) % span));
            m += dm;
        }
        let kmax = points.len();
        let plan = SequencePlan::new(points, strip).unwrap();
        let report =
            sequence_entropy_partial(&sys, &alpha, &plan, kmax, DEFAULT_ATOM_CAP, LogBase::Nats)
                .unwrap();
        let h: f64 = shannon_entropy(&sys, &alpha, LogBase::Nats).unwrap();
        for row in &report.rows {
            prop_assert!(row.value <= h + 1e-12, "row {} = {} > {}", row.index, row.value, h);
            prop_assert!(row.value >= -1e-12);
        }
    }

    /// Partitions close in symmetric-difference distance have small mutual
    /// conditional entropies: H(a|c) + H(c|a) <= -4 d ln(d/4) + 2 d ln r
    /// for matched four-atom partitions at distance d.
    #[test]
    fn conditional_entropy_obeys_the_distance_envelope(
        assign in assignment(),
        flips in prop::collection::vec((0usize..16, 0usize..4), 0..4),
    ) {
        let sys = fair_bernoulli();
        let mut mutated = assign;
        for (pos, grp) in &flips {
            mutated[*pos] = *grp;
        }
        let (Some(alpha), Some(eta)) =
            (grouped_partition(&sys, &assign), grouped_partition(&sys, &mutated))
        else {
            return Ok(());
        };
        let mut delta = S::zero();
        for (a, c) in alpha.atoms().iter().zip(eta.atoms()) {
            delta = delta + symmetric_difference_mass(&sys, a, c);
        }
        let sum: f64 = conditional_entropy::<BigInt, f64>(&sys, &alpha, &eta, LogBase::Nats)
            .unwrap()
            + conditional_entropy::<BigInt, f64>(&sys, &eta, &alpha, LogBase::Nats).unwrap();
        if delta.is_zero() {
            prop_assert!(sum < 1e-9);
        } else {
            let d = delta.to_ratio().unwrap().to_f64().unwrap();
            let envelope = -4.0 * d * (d / 4.0).ln() + 2.0 * d * 4.0f64.ln();
            prop_assert!(sum <= envelope + 1e-9, "sum {sum} > envelope {envelope} at d = {d}");
        }
    }
}
