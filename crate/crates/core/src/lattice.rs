//! Directional strips of lattice points in Z^q.
//!
//! A strip collects the integer points within half a width of the line
//! through the origin with direction (1, beta_2, ..., beta_q): all w with
//! beta_i*w_1 - b_i/2 <= w_i <= beta_i*w_1 + b_i/2 on every trailing axis,
//! bounds inclusive. Truncations keep the first coordinate in [0, k-1].
//!
//! Bound computations never mix radicands: the inequality n >= beta*m - b/2
//! is decided as n + b/2 >= beta*m, which keeps each side inside a single
//! quadratic field even when the slope and the width come from different
//! ones.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::scalar::{ExactInt, QuadExt};

/// A point of Z^q, ordered lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    coords: Vec<i64>,
}

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Self {
        assert!(!coords.is_empty(), "lattice points need at least one coordinate");
        Self { coords }
    }

    pub fn pair(m: i64, n: i64) -> Self {
        Self { coords: vec![m, n] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn first(&self) -> i64 {
        self.coords[0]
    }

    /// Componentwise difference, used for pair-correlation expansions.
    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in point difference");
        Self { coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in point sum");
        Self { coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect() }
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Direction (1, beta_2, ..., beta_q) through Z^q; `betas` holds the q-1
/// trailing slopes. The leading coordinate is always 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectionVector<T: ExactInt> {
    betas: Vec<QuadExt<T>>,
}

impl<T: ExactInt> DirectionVector<T> {
    pub fn new(betas: Vec<QuadExt<T>>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::InvalidSpec("a direction needs q >= 2 components".into()));
        }
        Ok(Self { betas })
    }

    /// The planar direction (1, beta).
    pub fn planar(beta: QuadExt<T>) -> Self {
        Self { betas: vec![beta] }
    }

    pub fn q(&self) -> usize {
        self.betas.len() + 1
    }

    pub fn betas(&self) -> &[QuadExt<T>] {
        &self.betas
    }
}

impl<T: ExactInt> fmt::Display for DirectionVector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(1")?;
        for b in &self.betas {
            write!(f, ", {b}")?;
        }
        write!(f, ")")
    }
}

/// A strip around a direction: one width per trailing axis.
///
/// Widths may be zero, degenerating the strip to exact lattice hits of the
/// line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StripSpec<T: ExactInt> {
    direction: DirectionVector<T>,
    widths: Vec<QuadExt<T>>,
}

impl<T: ExactInt> StripSpec<T> {
    pub fn new(direction: DirectionVector<T>, widths: Vec<QuadExt<T>>) -> Result<Self> {
        if widths.len() != direction.q() - 1 {
            return Err(Error::InvalidSpec(format!(
                "need {} widths for a direction with q = {}, got {}",
                direction.q() - 1,
                direction.q(),
                widths.len()
            )));
        }
        if widths.iter().any(|w| w.is_negative()) {
            return Err(Error::InvalidSpec("strip widths must be nonnegative".into()));
        }
        Ok(Self { direction, widths })
    }

    /// Planar strip of width `b` around (1, beta).
    pub fn planar(beta: QuadExt<T>, width: QuadExt<T>) -> Result<Self> {
        Self::new(DirectionVector::planar(beta), vec![width])
    }

    pub fn q(&self) -> usize {
        self.direction.q()
    }

    pub fn direction(&self) -> &DirectionVector<T> {
        &self.direction
    }

    pub fn widths(&self) -> &[QuadExt<T>] {
        &self.widths
    }

    fn half_width(&self, axis: usize) -> QuadExt<T> {
        self.widths[axis].clone() / QuadExt::from_i64(2)
    }

    /// Admissible values of trailing axis `axis` over first coordinate `m1`:
    /// the integers n in [ceil(beta*m1 - b/2), floor(beta*m1 + b/2)], or
    /// `None` when the interval holds no integer.
    pub fn column_range(&self, axis: usize, m1: i64) -> Option<(i64, i64)> {
        let target = self.direction.betas()[axis].scale_int(m1);
        let half = self.half_width(axis);
        let lo = least_int_within(&target, &half);
        let hi = greatest_int_within(&target, &half);
        if lo <= hi {
            Some((lo, hi))
        } else {
            None
        }
    }

    /// Number of strip points with first coordinate exactly `m1`.
    pub fn column_cardinality(&self, m1: i64) -> T {
        let mut count = T::one();
        for axis in 0..self.q() - 1 {
            match self.column_range(axis, m1) {
                Some((lo, hi)) => count = count * T::from(hi - lo + 1),
                None => return T::zero(),
            }
        }
        count
    }
}

impl<T: ExactInt> fmt::Display for StripSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "strip[v={}, b=(", self.direction)?;
        for (i, w) in self.widths.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, ")]")
    }
}

/// Least integer n with n >= target - half, decided as n + half >= target.
fn least_int_within<T: ExactInt>(target: &QuadExt<T>, half: &QuadExt<T>) -> i64 {
    let ok = |n: i64| (QuadExt::from_i64(n) + half.clone()).cmp_exact(target) != Ordering::Less;
    let mut n = (target.to_f64() - half.to_f64()).ceil() as i64;
    while !ok(n) {
        n += 1;
    }
    while ok(n - 1) {
        n -= 1;
    }
    n
}

/// Greatest integer n with n <= target + half, decided as n - half <= target.
fn greatest_int_within<T: ExactInt>(target: &QuadExt<T>, half: &QuadExt<T>) -> i64 {
    let ok = |n: i64| (QuadExt::from_i64(n) - half.clone()).cmp_exact(target) != Ordering::Greater;
    let mut n = (target.to_f64() + half.to_f64()).floor() as i64;
    while !ok(n) {
        n -= 1;
    }
    while ok(n + 1) {
        n += 1;
    }
    n
}

/// Exact strip membership, inclusive bounds on every trailing axis.
pub fn strip_contains<T: ExactInt>(spec: &StripSpec<T>, p: &LatticePoint) -> Result<bool> {
    if p.dim() != spec.q() {
        return Err(Error::DimensionMismatch { expected: spec.q(), got: p.dim() });
    }
    let m1 = p.first();
    for axis in 0..spec.q() - 1 {
        let target = spec.direction().betas()[axis].scale_int(m1);
        let half = spec.half_width(axis);
        let mi = QuadExt::from_i64(p.coords()[axis + 1]);
        if (mi.clone() + half.clone()).cmp_exact(&target) == Ordering::Less {
            return Ok(false);
        }
        if (mi - half).cmp_exact(&target) == Ordering::Greater {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Strip points in the column with first coordinate `m1`, in lexicographic
/// order over the trailing axes.
pub fn column_points<T: ExactInt>(spec: &StripSpec<T>, m1: i64) -> Vec<LatticePoint> {
    let axes = spec.q() - 1;
    let mut ranges = Vec::with_capacity(axes);
    for axis in 0..axes {
        match spec.column_range(axis, m1) {
            Some(r) => ranges.push(r),
            None => return Vec::new(),
        }
    }
    let mut out = Vec::new();
    let mut current: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        let mut coords = Vec::with_capacity(axes + 1);
        coords.push(m1);
        coords.extend_from_slice(&current);
        out.push(LatticePoint::new(coords));
        // Odometer step in lexicographic order, last axis fastest.
        let mut axis = axes;
        loop {
            if axis == 0 {
                break;
            }
            let i = axis - 1;
            if current[i] < ranges[i].1 {
                current[i] += 1;
                for j in i + 1..axes {
                    current[j] = ranges[j].0;
                }
                break;
            }
            axis -= 1;
        }
        if axis == 0 {
            break;
        }
    }
    out
}

/// All strip points with first coordinate in [0, k-1], sorted
/// lexicographically.
pub fn enumerate_strip<T: ExactInt>(spec: &StripSpec<T>, k: i64) -> Result<Vec<LatticePoint>> {
    if k < 0 {
        return Err(Error::InvalidSpec(format!("window length k = {k} is negative")));
    }
    let mut out = Vec::new();
    for m1 in 0..k {
        out.extend(column_points(spec, m1));
    }
    Ok(out)
}

/// Number of strip points with first coordinate in [0, k-1], computed per
/// column without materializing the list.
pub fn strip_cardinality<T: ExactInt>(spec: &StripSpec<T>, k: i64) -> Result<T> {
    if k < 0 {
        return Err(Error::InvalidSpec(format!("window length k = {k} is negative")));
    }
    let mut total = T::zero();
    for m1 in 0..k {
        total = total + spec.column_cardinality(m1);
    }
    Ok(total)
}

/// Cardinality over k as an exact rational.
pub fn strip_density<T: ExactInt>(spec: &StripSpec<T>, k: i64) -> Result<Ratio<T>> {
    if k < 1 {
        return Err(Error::InvalidSpec(format!("density needs k >= 1, got {k}")));
    }
    Ok(Ratio::new(strip_cardinality(spec, k)?, T::from(k)))
}

/// Fraction of the truncated strip covered by `points`; every input point
/// must lie in the strip.
pub fn relative_density<T: ExactInt>(
    points: &[LatticePoint],
    spec: &StripSpec<T>,
    k: i64,
) -> Result<Ratio<T>> {
    let set: BTreeSet<&LatticePoint> = points.iter().collect();
    for p in &set {
        if !strip_contains(spec, p)? {
            return Err(Error::PointOutsideStrip { point: (*p).clone() });
        }
    }
    let denom = strip_cardinality(spec, k)?;
    if denom.is_zero() {
        return Err(Error::InvalidSpec(format!("strip window [0,{}) holds no points", k)));
    }
    let count = set.iter().filter(|p| p.first() >= 0 && p.first() < k).count();
    Ok(Ratio::new(T::from(count as i64), denom))
}

/// Result of a bounded sumset coverage search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumsetCheck {
    pub covers: bool,
    pub window: i64,
    /// First-coordinate radius scanned for the left summand; reported so a
    /// negative verdict is distinguishable from an undersized search.
    pub search_bound: i64,
    /// A target no bounded pair reached, when `covers` is false.
    pub first_uncovered: Option<LatticePoint>,
    /// Equal slopes short-circuit to non-covering: the sum of two parallel
    /// strips stays inside a wider parallel strip.
    pub parallel_directions: bool,
}

/// Checks whether every point of [-window, window]^2 decomposes as p1 + p2
/// with p1 in the first strip and p2 in the second (both untruncated).
///
/// The first summand's first coordinate is searched over [-C, C] with
/// C = ceil(window * (2 + |beta_1| + |beta_2|) / |beta_1 - beta_2|), rounded
/// outward per term so the bound never undershoots the formula.
pub fn sumset_covers_window<T: ExactInt>(
    spec_v: &StripSpec<T>,
    spec_w: &StripSpec<T>,
    window: i64,
) -> Result<SumsetCheck> {
    for spec in [spec_v, spec_w] {
        if spec.q() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: spec.q() });
        }
    }
    if window < 0 {
        return Err(Error::InvalidSpec(format!("window {window} is negative")));
    }
    let beta1 = &spec_v.direction().betas()[0];
    let beta2 = &spec_w.direction().betas()[0];
    if beta1 == beta2 {
        return Ok(SumsetCheck {
            covers: false,
            window,
            search_bound: 0,
            first_uncovered: None,
            parallel_directions: true,
        });
    }
    let bound = search_bound(beta1, beta2, window);
    let v_cols: Vec<Option<(i64, i64)>> =
        (-bound..=bound).map(|m| spec_v.column_range(0, m)).collect();
    let w_lo = -bound - window;
    let w_cols: Vec<Option<(i64, i64)>> =
        (w_lo..=bound + window).map(|m| spec_w.column_range(0, m)).collect();
    for x in -window..=window {
        for y in -window..=window {
            let mut hit = false;
            for (idx, col) in v_cols.iter().enumerate() {
                let Some((lo1, hi1)) = col else { continue };
                let m2 = x - (idx as i64 - bound);
                let Some((lo2, hi2)) = w_cols[(m2 - w_lo) as usize] else { continue };
                // Need n1 in [lo1, hi1] with y - n1 in [lo2, hi2].
                if (*lo1).max(y - hi2) <= (*hi1).min(y - lo2) {
                    hit = true;
                    break;
                }
            }
            if !hit {
                return Ok(SumsetCheck {
                    covers: false,
                    window,
                    search_bound: bound,
                    first_uncovered: Some(LatticePoint::pair(x, y)),
                    parallel_directions: false,
                });
            }
        }
    }
    Ok(SumsetCheck {
        covers: true,
        window,
        search_bound: bound,
        first_uncovered: None,
        parallel_directions: false,
    })
}

fn search_bound<T: ExactInt>(beta1: &QuadExt<T>, beta2: &QuadExt<T>, window: i64) -> i64 {
    let magnitudes = beta1.abs().ceil_int() + beta2.abs().ceil_int() + T::from(2);
    let numerator = magnitudes.to_i64().expect("slope magnitudes fit in i64");
    // Largest 2^-s <= |beta1 - beta2|, found without cross-field subtraction.
    let mut s = 0u32;
    loop {
        let eps = QuadExt::from_fraction(1, 1i64 << s);
        let gap_right = beta1.cmp_exact(&(beta2.clone() + eps.clone())) != Ordering::Less;
        let gap_left = beta2.cmp_exact(&(beta1.clone() + eps)) != Ordering::Less;
        if gap_right || gap_left {
            break;
        }
        s += 1;
        assert!(s < 62, "slope gap below 2^-62; widen the slopes or use equal ones");
    }
    window.saturating_mul(numerator).saturating_mul(1i64 << s)
}
