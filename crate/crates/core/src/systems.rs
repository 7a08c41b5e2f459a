//! Model measure-preserving Z^2-actions with exact event measures.
//!
//! Four system kinds are provided: the full two-dimensional Bernoulli shift,
//! a product of two one-dimensional Bernoulli shifts driven by skewed
//! generators (the standard source of a direction with invariant sets),
//! direct products, and a product of two circle rotations. Events are
//! finite disjoint unions of cylinder events; all measures come out as exact
//! scalars.
//!
//! The shift convention is fixed once: `T^w` moves configurations so that
//! `(T^w x)_u = x_{u+w}`, hence the preimage of the constraint `[x_u = s]`
//! under `T^w` is `[x_{u+w} = s]`.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lattice::LatticePoint;
use crate::scalar::{ExactInt, QuadExt};

/// A measure-preserving Z^2-action with exactly computable event measures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SystemSpec<T: ExactInt> {
    /// Bernoulli shift on `{0..weights.len()-1}^(Z^2)` with i.i.d. site
    /// distribution `weights`.
    Bernoulli2D { weights: Vec<Ratio<T>> },
    /// Product of two copies of the one-dimensional Bernoulli shift over
    /// `weights`, acted on through the skewed generators `Id x T` and
    /// `T x Id`: the lattice point (m,n) shifts left-factor indices by m-n
    /// and right-factor indices by m+n.
    Counterexample { weights: Vec<Ratio<T>> },
    /// Direct product acting diagonally: (m,n) moves both factors by (m,n).
    Product(Box<SystemSpec<T>>, Box<SystemSpec<T>>),
    /// Product of two circle rotations: (m,n) moves the first circle by
    /// m*alphas[0] and the second by n*alphas[1], mod 1.
    Rotation2D { alphas: [QuadExt<T>; 2] },
}

fn validate_weights<T: ExactInt>(weights: &[Ratio<T>]) -> Result<()> {
    if weights.len() < 2 {
        return Err(Error::InvalidSpec("need at least two symbol weights".into()));
    }
    if weights.iter().any(|w| !w.is_positive()) {
        return Err(Error::InvalidSpec("symbol weights must be positive".into()));
    }
    let total: Ratio<T> = weights.iter().cloned().fold(Ratio::zero(), |a, b| a + b);
    if !total.is_one() {
        return Err(Error::InvalidSpec(format!("symbol weights sum to {total}, expected 1")));
    }
    Ok(())
}

impl<T: ExactInt> SystemSpec<T> {
    pub fn bernoulli(weights: Vec<Ratio<T>>) -> Result<Self> {
        validate_weights(&weights)?;
        Ok(Self::Bernoulli2D { weights })
    }

    pub fn counterexample(weights: Vec<Ratio<T>>) -> Result<Self> {
        validate_weights(&weights)?;
        Ok(Self::Counterexample { weights })
    }

    pub fn rotation(alpha1: QuadExt<T>, alpha2: QuadExt<T>) -> Result<Self> {
        let mut radicands = RadicandSet::new();
        radicands.insert(&alpha1)?;
        radicands.insert(&alpha2)?;
        Ok(Self::Rotation2D { alphas: [alpha1, alpha2] })
    }

    /// All built-in systems act through Z^2.
    pub fn q(&self) -> usize {
        2
    }

    /// One-line description used in report metadata and error messages.
    pub fn describe(&self) -> String {
        match self {
            Self::Bernoulli2D { weights } => format!("bernoulli2d({})", join_weights(weights)),
            Self::Counterexample { weights } => {
                format!("counterexample({})", join_weights(weights))
            }
            Self::Product(a, b) => format!("product({}, {})", a.describe(), b.describe()),
            Self::Rotation2D { alphas } => format!("rotation2d({}, {})", alphas[0], alphas[1]),
        }
    }
}

fn join_weights<T: ExactInt>(weights: &[Ratio<T>]) -> String {
    weights.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",")
}

/// The direct product of two systems, acting diagonally.
pub fn product_system<T: ExactInt>(a: SystemSpec<T>, b: SystemSpec<T>) -> SystemSpec<T> {
    SystemSpec::Product(Box::new(a), Box::new(b))
}

/// Half-open arc [lo, hi) inside the unit circle, with exact endpoints.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Arc<T: ExactInt> {
    lo: QuadExt<T>,
    hi: QuadExt<T>,
}

impl<T: ExactInt> Arc<T> {
    pub fn new(lo: QuadExt<T>, hi: QuadExt<T>) -> Result<Self> {
        if lo.is_negative() || hi > QuadExt::one() || lo >= hi {
            return Err(Error::MalformedEvent(format!(
                "arc [{lo}, {hi}) must satisfy 0 <= lo < hi <= 1"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// The whole circle [0, 1).
    pub fn full() -> Self {
        Self { lo: QuadExt::zero(), hi: QuadExt::one() }
    }

    pub fn lo(&self) -> &QuadExt<T> {
        &self.lo
    }

    pub fn hi(&self) -> &QuadExt<T> {
        &self.hi
    }

    pub fn length(&self) -> QuadExt<T> {
        self.hi.clone() - self.lo.clone()
    }

    pub fn contains(&self, x: &QuadExt<T>) -> bool {
        *x >= self.lo && *x < self.hi
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let lo = if self.lo >= other.lo { self.lo.clone() } else { other.lo.clone() };
        let hi = if self.hi <= other.hi { self.hi.clone() } else { other.hi.clone() };
        if lo < hi {
            Some(Self { lo, hi })
        } else {
            None
        }
    }

    /// Complement within [0, 1): zero, one, or two arcs.
    pub fn complement(&self) -> Vec<Self> {
        let mut out = Vec::new();
        if self.lo.is_positive() {
            out.push(Self { lo: QuadExt::zero(), hi: self.lo.clone() });
        }
        if self.hi < QuadExt::one() {
            out.push(Self { lo: self.hi.clone(), hi: QuadExt::one() });
        }
        out
    }

    /// Rotation by `delta` mod 1: one arc, or two when the image wraps.
    pub fn shift_mod1(&self, delta: &QuadExt<T>) -> Vec<Self> {
        let d = delta.fract();
        let lo = self.lo.clone() + d.clone();
        let hi = self.hi.clone() + d;
        let one = QuadExt::one();
        if hi <= one {
            vec![Self { lo, hi }]
        } else if lo >= one {
            vec![Self { lo: lo - one.clone(), hi: hi - one }]
        } else {
            vec![
                Self { lo: lo.clone(), hi: one.clone() },
                Self { lo: QuadExt::zero(), hi: hi - one },
            ]
        }
    }
}

impl<T: ExactInt> fmt::Display for Arc<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

/// A single cylinder event, shaped like one of the system kinds. The empty
/// event has no representation here; intersections return `None` instead.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CylinderEvent<T: ExactInt> {
    /// Finitely many site constraints on a 2-D shift configuration; the
    /// empty map is the whole space.
    Bernoulli { constraints: BTreeMap<(i64, i64), usize> },
    /// Site constraints on the two one-dimensional factors.
    TwoFactor { left: BTreeMap<i64, usize>, right: BTreeMap<i64, usize> },
    /// Rectangle of events in a direct product.
    ProductRect { left: Box<CylinderEvent<T>>, right: Box<CylinderEvent<T>> },
    /// Product of one arc per circle axis.
    Torus { arcs: [Arc<T>; 2] },
}

impl<T: ExactInt> CylinderEvent<T> {
    /// The whole space, shaped for `sys`.
    pub fn whole(sys: &SystemSpec<T>) -> Self {
        match sys {
            SystemSpec::Bernoulli2D { .. } => Self::Bernoulli { constraints: BTreeMap::new() },
            SystemSpec::Counterexample { .. } => {
                Self::TwoFactor { left: BTreeMap::new(), right: BTreeMap::new() }
            }
            SystemSpec::Product(a, b) => Self::ProductRect {
                left: Box::new(Self::whole(a)),
                right: Box::new(Self::whole(b)),
            },
            SystemSpec::Rotation2D { .. } => Self::Torus { arcs: [Arc::full(), Arc::full()] },
        }
    }

    /// Single-site constraint on a 2-D shift.
    pub fn bernoulli_site(m: i64, n: i64, symbol: usize) -> Self {
        Self::Bernoulli { constraints: BTreeMap::from([((m, n), symbol)]) }
    }

    /// Multi-site constraint; `None` when two entries contradict each other.
    pub fn bernoulli_sites(entries: &[((i64, i64), usize)]) -> Option<Self> {
        let mut constraints = BTreeMap::new();
        for ((m, n), s) in entries {
            if *constraints.entry((*m, *n)).or_insert(*s) != *s {
                return None;
            }
        }
        Some(Self::Bernoulli { constraints })
    }

    /// Constraint on the right one-dimensional factor only.
    pub fn right_site(index: i64, symbol: usize) -> Self {
        Self::TwoFactor { left: BTreeMap::new(), right: BTreeMap::from([(index, symbol)]) }
    }

    /// Constraint on the left one-dimensional factor only.
    pub fn left_site(index: i64, symbol: usize) -> Self {
        Self::TwoFactor { left: BTreeMap::from([(index, symbol)]), right: BTreeMap::new() }
    }

    /// Two-factor constraint from explicit index lists; `None` on conflict.
    pub fn two_factor(left: &[(i64, usize)], right: &[(i64, usize)]) -> Option<Self> {
        let mut l = BTreeMap::new();
        for (i, s) in left {
            if *l.entry(*i).or_insert(*s) != *s {
                return None;
            }
        }
        let mut r = BTreeMap::new();
        for (i, s) in right {
            if *r.entry(*i).or_insert(*s) != *s {
                return None;
            }
        }
        Some(Self::TwoFactor { left: l, right: r })
    }

    pub fn product_rect(left: Self, right: Self) -> Self {
        Self::ProductRect { left: Box::new(left), right: Box::new(right) }
    }

    pub fn torus_rect(axis1: Arc<T>, axis2: Arc<T>) -> Self {
        Self::Torus { arcs: [axis1, axis2] }
    }

    /// Exact intersection; `None` means the events are disjoint.
    ///
    /// Panics when the two events are shaped for different system kinds:
    /// events only meet through a common system.
    pub fn intersect(&self, other: &Self) -> Option<Self> {
        match (self, other) {
            (Self::Bernoulli { constraints: a }, Self::Bernoulli { constraints: b }) => {
                let mut merged = a.clone();
                for (site, s) in b {
                    if *merged.entry(*site).or_insert(*s) != *s {
                        return None;
                    }
                }
                Some(Self::Bernoulli { constraints: merged })
            }
            (
                Self::TwoFactor { left: la, right: ra },
                Self::TwoFactor { left: lb, right: rb },
            ) => {
                let mut left = la.clone();
                for (i, s) in lb {
                    if *left.entry(*i).or_insert(*s) != *s {
                        return None;
                    }
                }
                let mut right = ra.clone();
                for (i, s) in rb {
                    if *right.entry(*i).or_insert(*s) != *s {
                        return None;
                    }
                }
                Some(Self::TwoFactor { left, right })
            }
            (
                Self::ProductRect { left: la, right: ra },
                Self::ProductRect { left: lb, right: rb },
            ) => {
                let left = la.intersect(lb)?;
                let right = ra.intersect(rb)?;
                Some(Self::product_rect(left, right))
            }
            (Self::Torus { arcs: a }, Self::Torus { arcs: b }) => {
                let axis1 = a[0].intersect(&b[0])?;
                let axis2 = a[1].intersect(&b[1])?;
                Some(Self::Torus { arcs: [axis1, axis2] })
            }
            _ => panic!("intersected events shaped for different system kinds"),
        }
    }

    fn atom_measure(&self, sys: &SystemSpec<T>) -> Result<QuadExt<T>> {
        match (sys, self) {
            (SystemSpec::Bernoulli2D { weights }, Self::Bernoulli { constraints }) => {
                let mut m = Ratio::one();
                for (site, s) in constraints {
                    let w = weights.get(*s).ok_or_else(|| symbol_error(*s, weights.len()))?;
                    let _ = site;
                    m = m * w.clone();
                }
                Ok(QuadExt::from(m))
            }
            (SystemSpec::Counterexample { weights }, Self::TwoFactor { left, right }) => {
                let mut m = Ratio::one();
                for s in left.values().chain(right.values()) {
                    let w = weights.get(*s).ok_or_else(|| symbol_error(*s, weights.len()))?;
                    m = m * w.clone();
                }
                Ok(QuadExt::from(m))
            }
            (SystemSpec::Product(a, b), Self::ProductRect { left, right }) => {
                Ok(left.atom_measure(a)? * right.atom_measure(b)?)
            }
            (SystemSpec::Rotation2D { .. }, Self::Torus { arcs }) => {
                Ok(arcs[0].length() * arcs[1].length())
            }
            _ => Err(Error::MalformedEvent(format!(
                "event shape does not match system {}",
                sys.describe()
            ))),
        }
    }

    /// Preimage under T^w, which for shift constraints moves every index
    /// forward. Rotations can split arcs, so the result is a union.
    fn translate(&self, sys: &SystemSpec<T>, w: &LatticePoint) -> Result<Vec<Self>> {
        let (m, n) = (w.coords()[0], w.coords()[1]);
        match (sys, self) {
            (SystemSpec::Bernoulli2D { .. }, Self::Bernoulli { constraints }) => {
                let moved = constraints.iter().map(|((a, b), s)| ((a + m, b + n), *s)).collect();
                Ok(vec![Self::Bernoulli { constraints: moved }])
            }
            (SystemSpec::Counterexample { .. }, Self::TwoFactor { left, right }) => {
                let moved_left = left.iter().map(|(i, s)| (i + (m - n), *s)).collect();
                let moved_right = right.iter().map(|(i, s)| (i + (m + n), *s)).collect();
                Ok(vec![Self::TwoFactor { left: moved_left, right: moved_right }])
            }
            (SystemSpec::Product(a, b), Self::ProductRect { left, right }) => {
                let lefts = left.translate(a, w)?;
                let rights = right.translate(b, w)?;
                let mut out = Vec::with_capacity(lefts.len() * rights.len());
                for l in &lefts {
                    for r in &rights {
                        out.push(Self::product_rect(l.clone(), r.clone()));
                    }
                }
                Ok(out)
            }
            (SystemSpec::Rotation2D { alphas }, Self::Torus { arcs }) => {
                let d1 = -alphas[0].scale_int(m);
                let d2 = -alphas[1].scale_int(n);
                let pieces1 = arcs[0].shift_mod1(&d1);
                let pieces2 = arcs[1].shift_mod1(&d2);
                let mut out = Vec::with_capacity(pieces1.len() * pieces2.len());
                for p1 in &pieces1 {
                    for p2 in &pieces2 {
                        out.push(Self::Torus { arcs: [p1.clone(), p2.clone()] });
                    }
                }
                Ok(out)
            }
            _ => Err(Error::MalformedEvent(format!(
                "event shape does not match system {}",
                sys.describe()
            ))),
        }
    }

    /// Complement as a disjoint list of cylinder events.
    fn complement_pieces(&self, sys: &SystemSpec<T>) -> Result<Vec<Self>> {
        match (sys, self) {
            (SystemSpec::Bernoulli2D { weights }, Self::Bernoulli { constraints }) => {
                let entries: Vec<(&(i64, i64), &usize)> = constraints.iter().collect();
                let mut out = Vec::new();
                for j in 0..entries.len() {
                    let (site_j, sym_j) = entries[j];
                    if *sym_j >= weights.len() {
                        return Err(symbol_error(*sym_j, weights.len()));
                    }
                    for s in 0..weights.len() {
                        if s == *sym_j {
                            continue;
                        }
                        let mut c: BTreeMap<(i64, i64), usize> =
                            entries[..j].iter().map(|(k, v)| (**k, **v)).collect();
                        c.insert(*site_j, s);
                        out.push(Self::Bernoulli { constraints: c });
                    }
                }
                Ok(out)
            }
            (SystemSpec::Counterexample { weights }, Self::TwoFactor { left, right }) => {
                // Flatten to an ordered constraint list over both factors and
                // peel one prefix at a time, as in the Bernoulli case.
                #[derive(Clone, Copy, PartialEq, Eq)]
                enum Side {
                    L,
                    R,
                }
                let entries: Vec<(Side, i64, usize)> = left
                    .iter()
                    .map(|(i, s)| (Side::L, *i, *s))
                    .chain(right.iter().map(|(i, s)| (Side::R, *i, *s)))
                    .collect();
                let mut out = Vec::new();
                for j in 0..entries.len() {
                    let (side_j, idx_j, sym_j) = entries[j];
                    if sym_j >= weights.len() {
                        return Err(symbol_error(sym_j, weights.len()));
                    }
                    for s in 0..weights.len() {
                        if s == sym_j {
                            continue;
                        }
                        let mut l = BTreeMap::new();
                        let mut r = BTreeMap::new();
                        for &(side, idx, sym) in &entries[..j] {
                            match side {
                                Side::L => l.insert(idx, sym),
                                Side::R => r.insert(idx, sym),
                            };
                        }
                        match side_j {
                            Side::L => l.insert(idx_j, s),
                            Side::R => r.insert(idx_j, s),
                        };
                        out.push(Self::TwoFactor { left: l, right: r });
                    }
                }
                Ok(out)
            }
            (SystemSpec::Product(a, b), Self::ProductRect { left, right }) => {
                let mut out = Vec::new();
                for lc in left.complement_pieces(a)? {
                    out.push(Self::product_rect(lc, Self::whole(b)));
                }
                for rc in right.complement_pieces(b)? {
                    out.push(Self::product_rect((**left).clone(), rc));
                }
                Ok(out)
            }
            (SystemSpec::Rotation2D { .. }, Self::Torus { arcs }) => {
                let mut out = Vec::new();
                for c1 in arcs[0].complement() {
                    out.push(Self::Torus { arcs: [c1, Arc::full()] });
                }
                for c2 in arcs[1].complement() {
                    out.push(Self::Torus { arcs: [arcs[0].clone(), c2] });
                }
                Ok(out)
            }
            _ => Err(Error::MalformedEvent(format!(
                "event shape does not match system {}",
                sys.describe()
            ))),
        }
    }

    fn collect_radicands(&self, set: &mut RadicandSet<T>) -> Result<()> {
        match self {
            Self::Bernoulli { .. } | Self::TwoFactor { .. } => Ok(()),
            Self::ProductRect { left, right } => {
                left.collect_radicands(set)?;
                right.collect_radicands(set)
            }
            Self::Torus { arcs } => {
                for arc in arcs {
                    set.insert(arc.lo())?;
                    set.insert(arc.hi())?;
                }
                Ok(())
            }
        }
    }

    fn check_symbols(&self, sys: &SystemSpec<T>) -> Result<()> {
        match (sys, self) {
            (SystemSpec::Bernoulli2D { weights }, Self::Bernoulli { constraints }) => {
                for s in constraints.values() {
                    if *s >= weights.len() {
                        return Err(symbol_error(*s, weights.len()));
                    }
                }
                Ok(())
            }
            (SystemSpec::Counterexample { weights }, Self::TwoFactor { left, right }) => {
                for s in left.values().chain(right.values()) {
                    if *s >= weights.len() {
                        return Err(symbol_error(*s, weights.len()));
                    }
                }
                Ok(())
            }
            (SystemSpec::Product(a, b), Self::ProductRect { left, right }) => {
                left.check_symbols(a)?;
                right.check_symbols(b)
            }
            (SystemSpec::Rotation2D { .. }, Self::Torus { .. }) => Ok(()),
            _ => Err(Error::MalformedEvent(format!(
                "event shape does not match system {}",
                sys.describe()
            ))),
        }
    }
}

impl<T: ExactInt> fmt::Display for CylinderEvent<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bernoulli { constraints } if constraints.is_empty() => write!(f, "X"),
            Self::Bernoulli { constraints } => {
                write!(f, "[")?;
                for (i, ((m, n), s)) in constraints.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    write!(f, "x({m},{n})={s}")?;
                }
                write!(f, "]")
            }
            Self::TwoFactor { left, right } if left.is_empty() && right.is_empty() => {
                write!(f, "X")
            }
            Self::TwoFactor { left, right } => {
                write!(f, "[")?;
                let mut first = true;
                for (i, s) in left {
                    if !first {
                        write!(f, " & ")?;
                    }
                    write!(f, "L{i}={s}")?;
                    first = false;
                }
                for (i, s) in right {
                    if !first {
                        write!(f, " & ")?;
                    }
                    write!(f, "R{i}={s}")?;
                    first = false;
                }
                write!(f, "]")
            }
            Self::ProductRect { left, right } => write!(f, "({left} x {right})"),
            Self::Torus { arcs } => write!(f, "{} x {}", arcs[0], arcs[1]),
        }
    }
}

impl<T: ExactInt> fmt::Display for EventExpr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return write!(f, "(empty)");
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

fn symbol_error(symbol: usize, alphabet: usize) -> Error {
    Error::MalformedEvent(format!("symbol {symbol} outside alphabet of size {alphabet}"))
}

/// Tracks the quadratic fields seen across a system's scalars; everything
/// must fit one field so measures and arc shifts stay representable.
pub(crate) struct RadicandSet<T: ExactInt> {
    radicand: Option<T>,
}

impl<T: ExactInt> RadicandSet<T> {
    pub(crate) fn new() -> Self {
        Self { radicand: None }
    }

    pub(crate) fn insert(&mut self, value: &QuadExt<T>) -> Result<()> {
        if value.is_rational() {
            return Ok(());
        }
        let d = value.radicand().clone();
        match &self.radicand {
            None => {
                self.radicand = Some(d);
                Ok(())
            }
            Some(existing) if *existing == d => Ok(()),
            Some(existing) => Err(Error::MalformedEvent(format!(
                "scalars mix sqrt({existing}) and sqrt({d}); a single quadratic field is required"
            ))),
        }
    }
}

/// A finite disjoint union of cylinder events in sorted normal form. The
/// empty union is the empty event.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventExpr<T: ExactInt> {
    atoms: Vec<CylinderEvent<T>>,
}

impl<T: ExactInt> EventExpr<T> {
    pub fn empty() -> Self {
        Self { atoms: Vec::new() }
    }

    pub fn atom(e: CylinderEvent<T>) -> Self {
        Self { atoms: vec![e] }
    }

    pub fn whole(sys: &SystemSpec<T>) -> Self {
        Self::atom(CylinderEvent::whole(sys))
    }

    /// Builds a union after verifying the atoms are pairwise disjoint.
    pub fn union(atoms: Vec<CylinderEvent<T>>) -> Result<Self> {
        for (i, a) in atoms.iter().enumerate() {
            for b in &atoms[i + 1..] {
                if a.intersect(b).is_some() {
                    return Err(Error::MalformedEvent(
                        "union atoms overlap; events must be disjoint".into(),
                    ));
                }
            }
        }
        let mut atoms = atoms;
        atoms.sort();
        Ok(Self { atoms })
    }

    fn from_disjoint(mut atoms: Vec<CylinderEvent<T>>) -> Self {
        atoms.sort();
        Self { atoms }
    }

    pub fn atoms(&self) -> &[CylinderEvent<T>] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Exact intersection; stays in normal form.
    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for a in &self.atoms {
            for b in &other.atoms {
                if let Some(c) = a.intersect(b) {
                    out.push(c);
                }
            }
        }
        Self::from_disjoint(out)
    }

    /// Complement within the space of `sys`.
    pub fn complement(&self, sys: &SystemSpec<T>) -> Result<Self> {
        let mut acc = Self::whole(sys);
        for atom in &self.atoms {
            let pieces = Self::from_disjoint(atom.complement_pieces(sys)?);
            acc = acc.intersect(&pieces);
        }
        Ok(acc)
    }
}

/// Exact measure of an event under the system's invariant measure.
pub fn measure<T: ExactInt>(sys: &SystemSpec<T>, e: &EventExpr<T>) -> Result<QuadExt<T>> {
    let mut total = QuadExt::zero();
    for atom in e.atoms() {
        total = total + atom.atom_measure(sys)?;
    }
    Ok(total)
}

/// Measure as a rational, available whenever no rotation is involved.
pub fn measure_ratio<T: ExactInt>(sys: &SystemSpec<T>, e: &EventExpr<T>) -> Result<Ratio<T>> {
    let m = measure(sys, e)?;
    m.to_ratio().ok_or_else(|| {
        Error::MalformedEvent("event measure is irrational; no rational form exists".into())
    })
}

/// The event T^{-w}e.
pub fn translate<T: ExactInt>(
    sys: &SystemSpec<T>,
    e: &EventExpr<T>,
    w: &LatticePoint,
) -> Result<EventExpr<T>> {
    if w.dim() != sys.q() {
        return Err(Error::DimensionMismatch { expected: sys.q(), got: w.dim() });
    }
    let mut out = Vec::new();
    for atom in e.atoms() {
        out.extend(atom.translate(sys, w)?);
    }
    Ok(EventExpr::from_disjoint(out))
}

/// Exact mu(T^{-w} e1 intersected with e2).
pub fn joint_measure<T: ExactInt>(
    sys: &SystemSpec<T>,
    e1: &EventExpr<T>,
    w: &LatticePoint,
    e2: &EventExpr<T>,
) -> Result<QuadExt<T>> {
    let moved = translate(sys, e1, w)?;
    measure(sys, &moved.intersect(e2))
}

/// Structural validation: event shape matches the system, symbols lie in the
/// alphabet, and all scalars across the system and event fit one quadratic
/// field.
pub fn validate_event<T: ExactInt>(sys: &SystemSpec<T>, e: &EventExpr<T>) -> Result<()> {
    let mut radicands = RadicandSet::new();
    collect_system_radicands(sys, &mut radicands)?;
    for atom in e.atoms() {
        atom.check_symbols(sys)?;
        atom.collect_radicands(&mut radicands)?;
    }
    Ok(())
}

pub(crate) fn collect_system_radicands<T: ExactInt>(
    sys: &SystemSpec<T>,
    set: &mut RadicandSet<T>,
) -> Result<()> {
    match sys {
        SystemSpec::Bernoulli2D { .. } | SystemSpec::Counterexample { .. } => Ok(()),
        SystemSpec::Product(a, b) => {
            collect_system_radicands(a, set)?;
            collect_system_radicands(b, set)
        }
        SystemSpec::Rotation2D { alphas } => {
            set.insert(&alphas[0])?;
            set.insert(&alphas[1])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    type S = QuadExt<BigInt>;

    fn half() -> Ratio<BigInt> {
        Ratio::new(BigInt::from(1), BigInt::from(2))
    }

    fn fair_bernoulli() -> SystemSpec<BigInt> {
        SystemSpec::bernoulli(vec![half(), half()]).unwrap()
    }

    fn fair_counterexample() -> SystemSpec<BigInt> {
        SystemSpec::counterexample(vec![half(), half()]).unwrap()
    }

    fn scalar(s: &str) -> S {
        s.parse().unwrap()
    }

    fn arc(lo: &str, hi: &str) -> Arc<BigInt> {
        Arc::new(scalar(lo), scalar(hi)).unwrap()
    }

    #[test]
    fn weights_must_be_a_distribution() {
        let third = Ratio::new(BigInt::from(1), BigInt::from(3));
        assert!(SystemSpec::bernoulli(vec![third.clone(), third.clone(), third.clone()]).is_ok());
        assert!(SystemSpec::bernoulli(vec![third.clone(), third]).is_err());
        assert!(SystemSpec::bernoulli(vec![half(), -half() + Ratio::one()]).is_ok());
        assert!(SystemSpec::<BigInt>::bernoulli(vec![Ratio::zero(), Ratio::one()]).is_err());
    }

    #[test]
    fn bernoulli_cylinder_measures_multiply() {
        let sys = fair_bernoulli();
        let b = EventExpr::atom(CylinderEvent::bernoulli_site(0, 0, 0));
        assert_eq!(measure(&sys, &b).unwrap(), scalar("1/2"));
        let two = EventExpr::atom(
            CylinderEvent::bernoulli_sites(&[((0, 0), 0), ((3, 5), 1)]).unwrap(),
        );
        assert_eq!(measure(&sys, &two).unwrap(), scalar("1/4"));
        assert!(CylinderEvent::<BigInt>::bernoulli_sites(&[((0, 0), 0), ((0, 0), 1)]).is_none());
    }

    #[test]
    fn counterexample_right_cylinder_has_weight_measure() {
        let sys = fair_counterexample();
        let e = EventExpr::atom(CylinderEvent::right_site(0, 0));
        assert_eq!(measure(&sys, &e).unwrap(), scalar("1/2"));
        let both = EventExpr::atom(CylinderEvent::two_factor(&[(2, 1)], &[(0, 0)]).unwrap());
        assert_eq!(measure(&sys, &both).unwrap(), scalar("1/4"));
    }

    #[test]
    fn translation_moves_bernoulli_sites() {
        let sys = fair_bernoulli();
        let e = EventExpr::atom(CylinderEvent::bernoulli_site(0, 0, 0));
        let moved = translate(&sys, &e, &LatticePoint::pair(2, 3)).unwrap();
        assert_eq!(moved, EventExpr::atom(CylinderEvent::bernoulli_site(2, 3, 0)));
    }

    #[test]
    fn translation_composes_like_the_group() {
        let sys = fair_bernoulli();
        let e = EventExpr::atom(
            CylinderEvent::bernoulli_sites(&[((0, 0), 0), ((1, -2), 1)]).unwrap(),
        );
        let w1 = LatticePoint::pair(2, -1);
        let w2 = LatticePoint::pair(-5, 4);
        let lhs = translate(&sys, &translate(&sys, &e, &w1).unwrap(), &w2).unwrap();
        let rhs = translate(&sys, &e, &w1.add(&w2)).unwrap();
        assert_eq!(lhs, rhs);
        assert_eq!(translate(&sys, &e, &LatticePoint::pair(0, 0)).unwrap(), e);
    }

    #[test]
    fn counterexample_moves_factors_through_skewed_generators() {
        let sys = fair_counterexample();
        // Diagonal steps fix the right factor.
        let b = EventExpr::atom(CylinderEvent::right_site(0, 0));
        for n in [-3i64, 1, 7] {
            let moved = translate(&sys, &b, &LatticePoint::pair(n, -n)).unwrap();
            assert_eq!(moved, b);
        }
        // A unit step right moves the left factor by 1 and the right by 1.
        let e = EventExpr::atom(CylinderEvent::two_factor(&[(0, 0)], &[(2, 1)]).unwrap());
        let moved = translate(&sys, &e, &LatticePoint::pair(1, 0)).unwrap();
        assert_eq!(
            moved,
            EventExpr::atom(CylinderEvent::two_factor(&[(1, 0)], &[(3, 1)]).unwrap())
        );
        // The anti-diagonal fixes the left factor instead.
        let a = EventExpr::atom(CylinderEvent::left_site(0, 1));
        for n in [-2i64, 5] {
            assert_eq!(translate(&sys, &a, &LatticePoint::pair(n, n)).unwrap(), a);
        }
    }

    #[test]
    fn joint_measures_match_hand_values() {
        let sys = fair_bernoulli();
        let b = EventExpr::atom(CylinderEvent::bernoulli_site(0, 0, 0));
        assert_eq!(
            joint_measure(&sys, &b, &LatticePoint::pair(1, 0), &b).unwrap(),
            scalar("1/4")
        );
        assert_eq!(
            joint_measure(&sys, &b, &LatticePoint::pair(0, 0), &b).unwrap(),
            scalar("1/2")
        );
        let ce = fair_counterexample();
        let xb = EventExpr::atom(CylinderEvent::right_site(0, 0));
        for n in [0i64, 4, -9] {
            assert_eq!(
                joint_measure(&ce, &xb, &LatticePoint::pair(n, -n), &xb).unwrap(),
                scalar("1/2")
            );
        }
    }

    #[test]
    fn complement_splits_into_disjoint_pieces() {
        let sys = fair_bernoulli();
        let e = EventExpr::atom(
            CylinderEvent::bernoulli_sites(&[((0, 0), 0), ((1, 1), 0)]).unwrap(),
        );
        let c = e.complement(&sys).unwrap();
        assert_eq!(c.atoms().len(), 2);
        assert_eq!(measure(&sys, &c).unwrap(), scalar("3/4"));
        assert!(e.intersect(&c).is_empty());
        let back = c.complement(&sys).unwrap();
        assert_eq!(measure(&sys, &back).unwrap(), scalar("1/4"));
    }

    #[test]
    fn unions_must_be_disjoint() {
        let a = CylinderEvent::<BigInt>::bernoulli_site(0, 0, 0);
        let b = CylinderEvent::<BigInt>::bernoulli_site(1, 1, 0);
        assert!(EventExpr::union(vec![a.clone(), b]).is_err());
        let c = CylinderEvent::<BigInt>::bernoulli_site(0, 0, 1);
        let u = EventExpr::union(vec![a, c]).unwrap();
        assert_eq!(measure(&fair_bernoulli(), &u).unwrap(), scalar("1"));
    }

    #[test]
    fn rotation_measures_are_arc_length_products() {
        let sys = SystemSpec::rotation(scalar("sqrt(2)"), scalar("1/3")).unwrap();
        let e = EventExpr::atom(CylinderEvent::torus_rect(arc("0", "1/2"), arc("1/4", "1")));
        assert_eq!(measure(&sys, &e).unwrap(), scalar("3/8"));
    }

    #[test]
    fn rotation_translation_wraps_and_preserves_measure() {
        let sys = SystemSpec::rotation(scalar("1/3"), scalar("0")).unwrap();
        let e = EventExpr::atom(CylinderEvent::torus_rect(arc("1/2", "1"), Arc::full()));
        // One step back rotates axis 1 by -1/3, i.e. by 2/3 mod 1: the image
        // [7/6, 5/3) lies past 1 and wraps whole, into [1/6, 2/3).
        let moved = translate(&sys, &e, &LatticePoint::pair(1, 0)).unwrap();
        assert_eq!(
            moved,
            EventExpr::atom(CylinderEvent::torus_rect(arc("1/6", "2/3"), Arc::full()))
        );
        // Two steps back rotate by 1/3 mod 1: [5/6, 4/3) straddles 1 and
        // splits into two pieces.
        let split = translate(&sys, &e, &LatticePoint::pair(2, 0)).unwrap();
        assert_eq!(split.atoms().len(), 2);
        assert_eq!(measure(&sys, &split).unwrap(), scalar("1/2"));
        // Surd angle: exact endpoints survive the wrap.
        let surd = SystemSpec::rotation(scalar("sqrt(2)"), scalar("0")).unwrap();
        let e2 = EventExpr::atom(CylinderEvent::torus_rect(arc("0", "1/2"), Arc::full()));
        let moved2 = translate(&surd, &e2, &LatticePoint::pair(1, 0)).unwrap();
        assert_eq!(measure(&surd, &moved2).unwrap(), scalar("1/2"));
        let lengths: Vec<S> = moved2
            .atoms()
            .iter()
            .map(|a| match a {
                CylinderEvent::Torus { arcs } => arcs[0].length(),
                _ => unreachable!(),
            })
            .collect();
        assert!(lengths.contains(&scalar("sqrt(2) - 1")));
        assert!(lengths.contains(&scalar("3/2 - sqrt(2)")));
    }

    #[test]
    fn product_rectangles_factor() {
        let sys = product_system(fair_bernoulli(), fair_bernoulli());
        let e = EventExpr::atom(CylinderEvent::product_rect(
            CylinderEvent::bernoulli_site(0, 0, 0),
            CylinderEvent::bernoulli_site(0, 0, 1),
        ));
        assert_eq!(measure(&sys, &e).unwrap(), scalar("1/4"));
        let moved = translate(&sys, &e, &LatticePoint::pair(3, -2)).unwrap();
        assert_eq!(
            moved,
            EventExpr::atom(CylinderEvent::product_rect(
                CylinderEvent::bernoulli_site(3, -2, 0),
                CylinderEvent::bernoulli_site(3, -2, 1),
            ))
        );
        let c = e.complement(&sys).unwrap();
        assert_eq!(measure(&sys, &c).unwrap(), scalar("3/4"));
    }

    #[test]
    fn validation_rejects_mismatched_events() {
        let sys = fair_bernoulli();
        let wrong = EventExpr::atom(CylinderEvent::<BigInt>::right_site(0, 0));
        assert!(validate_event(&sys, &wrong).is_err());
        let big_symbol = EventExpr::atom(CylinderEvent::bernoulli_site(0, 0, 7));
        assert!(validate_event(&sys, &big_symbol).is_err());
        assert!(measure(&sys, &big_symbol).is_err());
    }

    #[test]
    fn validation_rejects_mixed_quadratic_fields() {
        let sys = SystemSpec::rotation(scalar("sqrt(2)"), scalar("1/5")).unwrap();
        let ok = EventExpr::atom(CylinderEvent::torus_rect(
            arc("0", "1/2 + 1/4*sqrt(2)"),
            arc("0", "1/3"),
        ));
        assert!(validate_event(&sys, &ok).is_ok());
        let mixed = EventExpr::atom(CylinderEvent::torus_rect(arc("0", "1/2*sqrt(3)"), arc("0", "1/3")));
        assert!(validate_event(&sys, &mixed).is_err());
        assert!(SystemSpec::rotation(scalar("sqrt(2)"), scalar("sqrt(3)")).is_err());
    }

    #[test]
    fn measure_is_translation_invariant() {
        let sys = fair_counterexample();
        let e = EventExpr::atom(CylinderEvent::two_factor(&[(0, 0), (3, 1)], &[(1, 1)]).unwrap());
        for w in [LatticePoint::pair(2, 5), LatticePoint::pair(-4, 1)] {
            let moved = translate(&sys, &e, &w).unwrap();
            assert_eq!(measure(&sys, &moved).unwrap(), measure(&sys, &e).unwrap());
        }
        let rot = SystemSpec::rotation(scalar("sqrt(2)"), scalar("sqrt(2)")).unwrap();
        let re = EventExpr::atom(CylinderEvent::torus_rect(arc("1/4", "3/4"), arc("0", "1/8")));
        for w in [LatticePoint::pair(1, 2), LatticePoint::pair(-3, 7)] {
            let moved = translate(&rot, &re, &w).unwrap();
            assert_eq!(measure(&rot, &moved).unwrap(), measure(&rot, &re).unwrap());
        }
    }

    #[test]
    fn measure_ratio_rejects_irrational_measures() {
        let rot = SystemSpec::rotation(scalar("sqrt(2)"), scalar("0")).unwrap();
        let e = EventExpr::atom(CylinderEvent::torus_rect(arc("0", "1/2*sqrt(2)"), Arc::full()));
        assert!(measure_ratio(&rot, &e).is_err());
        assert_eq!(measure(&rot, &e).unwrap(), scalar("1/2*sqrt(2)"));
    }
}
