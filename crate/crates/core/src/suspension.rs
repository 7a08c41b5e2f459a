//! A two-parameter flow suspended over a planar lattice action: the base
//! system times the unit square, with real time (s, t) advancing the square
//! coordinates mod 1 and handing the integer carries to the lattice action.
//!
//! Sampling the flow at times (n, n*beta) gives a single transformation
//! whose correlation behaviour along n mirrors the directional behaviour of
//! the base action along slope beta. Pullbacks of rectangle events stay
//! exact: each axis contributes at most two arc pieces, each carrying its
//! own lattice translate of the base event.

use crate::error::{Error, Result};
use crate::lattice::LatticePoint;
use crate::report::ConvergenceReport;
use crate::scalar::{ExactInt, QuadExt};
use crate::systems::{
    collect_system_radicands, measure, translate, validate_event, Arc, EventExpr, RadicandSet,
    SystemSpec,
};

/// A point of the suspended space, with the base point tracked as the
/// accumulated lattice shift applied to an abstract origin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuspensionPoint<T: ExactInt> {
    base_shift: LatticePoint,
    u: QuadExt<T>,
    v: QuadExt<T>,
}

impl<T: ExactInt> SuspensionPoint<T> {
    pub fn new(base_shift: LatticePoint, u: QuadExt<T>, v: QuadExt<T>) -> Result<Self> {
        for coord in [&u, &v] {
            if coord.is_negative() || !coord.floor_int().is_zero() {
                return Err(Error::InvalidSpec(format!(
                    "square coordinate {coord} outside [0, 1)"
                )));
            }
        }
        Ok(Self { base_shift, u, v })
    }

    pub fn origin() -> Self {
        Self { base_shift: LatticePoint::pair(0, 0), u: QuadExt::zero(), v: QuadExt::zero() }
    }

    pub fn base_shift(&self) -> &LatticePoint {
        &self.base_shift
    }

    pub fn u(&self) -> &QuadExt<T> {
        &self.u
    }

    pub fn v(&self) -> &QuadExt<T> {
        &self.v
    }
}

fn carry_of<T: ExactInt>(total: &QuadExt<T>) -> i64 {
    total
        .floor_int()
        .to_i64()
        .expect("suspension carries stay within machine integers")
}

/// Advances a point by real time (s, t): square coordinates move mod 1 and
/// the integer parts shift the base point through the lattice action.
pub fn flow_step<T: ExactInt>(
    p: &SuspensionPoint<T>,
    s: &QuadExt<T>,
    t: &QuadExt<T>,
) -> SuspensionPoint<T> {
    let total_u = p.u.clone() + s.clone();
    let total_v = p.v.clone() + t.clone();
    let carry = LatticePoint::pair(carry_of(&total_u), carry_of(&total_v));
    SuspensionPoint {
        base_shift: p.base_shift.add(&carry),
        u: total_u.fract(),
        v: total_v.fract(),
    }
}

/// The time-(n, n*beta) sample of the flow.
pub fn suspension_step<T: ExactInt>(
    p: &SuspensionPoint<T>,
    n: i64,
    beta: &QuadExt<T>,
) -> SuspensionPoint<T> {
    flow_step(p, &QuadExt::from_i64(n), &beta.scale_int(n))
}

/// A measurable rectangle of the suspended space: a base event times an arc
/// on each square axis.
#[derive(Clone, Debug, PartialEq)]
pub struct RectangleEvent<T: ExactInt> {
    base: EventExpr<T>,
    u_arc: Arc<T>,
    v_arc: Arc<T>,
}

impl<T: ExactInt> RectangleEvent<T> {
    pub fn new(base: EventExpr<T>, u_arc: Arc<T>, v_arc: Arc<T>) -> Self {
        Self { base, u_arc, v_arc }
    }

    /// The base event with the full square attached.
    pub fn cylinder(base: EventExpr<T>) -> Self {
        Self { base, u_arc: Arc::full(), v_arc: Arc::full() }
    }

    pub fn base(&self) -> &EventExpr<T> {
        &self.base
    }

    pub fn u_arc(&self) -> &Arc<T> {
        &self.u_arc
    }

    pub fn v_arc(&self) -> &Arc<T> {
        &self.v_arc
    }

    pub fn measure(&self, sys: &SystemSpec<T>) -> Result<QuadExt<T>> {
        Ok(measure(sys, &self.base)? * self.u_arc.length() * self.v_arc.length())
    }

    fn validate(&self, sys: &SystemSpec<T>) -> Result<()> {
        validate_event(sys, &self.base)?;
        let mut set = RadicandSet::new();
        collect_system_radicands(sys, &mut set)?;
        for end in [self.u_arc.lo(), self.u_arc.hi(), self.v_arc.lo(), self.v_arc.hi()] {
            set.insert(end)?;
        }
        Ok(())
    }
}

/// Pullback pieces of one arc under a time shift: the window that keeps the
/// fractional part below 1 carries floor(time), the window that wraps
/// carries floor(time) + 1.
fn axis_pullback<T: ExactInt>(arc: &Arc<T>, time: &QuadExt<T>) -> Result<Vec<(i64, Arc<T>)>> {
    let frac = time.fract();
    let floor = carry_of(time);
    if frac.is_zero() {
        return Ok(vec![(floor, arc.clone())]);
    }
    let mut pieces = Vec::new();
    let lo1 = std::cmp::max(arc.lo().clone() - frac.clone(), QuadExt::zero());
    let hi1 = arc.hi().clone() - frac.clone();
    if lo1 < hi1 {
        pieces.push((floor, Arc::new(lo1, hi1)?));
    }
    let lo2 = arc.lo().clone() - frac.clone() + QuadExt::one();
    let hi2 = std::cmp::min(arc.hi().clone() - frac + QuadExt::one(), QuadExt::one());
    if lo2 < hi2 {
        pieces.push((floor + 1, Arc::new(lo2, hi2)?));
    }
    Ok(pieces)
}

/// Preimage of a rectangle under the time-(s, t) flow step, as disjoint
/// rectangles. Each axis splits into at most two pieces, so at most four
/// rectangles come back, and their measures sum to the original measure.
pub fn flow_pullback<T: ExactInt>(
    sys: &SystemSpec<T>,
    e: &RectangleEvent<T>,
    s: &QuadExt<T>,
    t: &QuadExt<T>,
) -> Result<Vec<RectangleEvent<T>>> {
    e.validate(sys)?;
    let mut out = Vec::new();
    for (carry_u, u_arc) in axis_pullback(&e.u_arc, s)? {
        for (carry_v, v_arc) in axis_pullback(&e.v_arc, t)? {
            let base = translate(sys, &e.base, &LatticePoint::pair(carry_u, carry_v))?;
            out.push(RectangleEvent { base, u_arc: u_arc.clone(), v_arc });
        }
    }
    Ok(out)
}

/// Preimage of a rectangle under the time-ated (n, n*beta) sample. The first
/// axis shifts by the integer n, so only the second axis can split: at most
/// two pieces, exactly one when n*beta is an integer.
pub fn suspension_pullback<T: ExactInt>(
    sys: &SystemSpec<T>,
    e: &RectangleEvent<T>,
    n: i64,
    beta: &QuadExt<T>,
) -> Result<Vec<RectangleEvent<T>>> {
    flow_pullback(sys, e, &QuadExt::from_i64(n), &beta.scale_int(n))
}

/// Exact measure of the intersection of two rectangles.
pub fn rectangle_correlation<T: ExactInt>(
    sys: &SystemSpec<T>,
    a: &RectangleEvent<T>,
    b: &RectangleEvent<T>,
) -> Result<QuadExt<T>> {
    let base = measure(sys, &a.base.intersect(&b.base))?;
    let u = a.u_arc.intersect(&b.u_arc).map(|x| x.length()).unwrap_or_else(QuadExt::zero);
    let v = a.v_arc.intersect(&b.v_arc).map(|x| x.length()).unwrap_or_else(QuadExt::zero);
    Ok(base * u * v)
}

/// Rows (n, measure of the time-n preimage of `b` intersected with `c`) for
/// n = 1..nmax, all exact.
pub fn suspension_correlation<T: ExactInt>(
    sys: &SystemSpec<T>,
    b: &RectangleEvent<T>,
    c: &RectangleEvent<T>,
    beta: &QuadExt<T>,
    nmax: i64,
) -> Result<ConvergenceReport<T>> {
    b.validate(sys)?;
    c.validate(sys)?;
    let mut set = RadicandSet::new();
    set.insert(beta)?;
    let mut report = ConvergenceReport::new(
        "suspension_correlation",
        sys.describe(),
        format!("slope {beta}, B base {}, C base {}", b.base, c.base),
    );
    for n in 1..=nmax {
        let mut total = QuadExt::zero();
        for piece in suspension_pullback(sys, b, n, beta)? {
            total = total + rectangle_correlation(sys, &piece, c)?;
        }
        report.push_scalar(n, total);
    }
    Ok(report)
}
