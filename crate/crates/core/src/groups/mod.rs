//! Exact arithmetic in the concrete groups used throughout the crate.
//!
//! Every group is handled in a coordinate system identifying it with a subset
//! of `Z^s`. For the torsion-free nilpotent kinds the coordinates are
//! triangular: coordinate `i` of a product depends only on coordinates `< i`
//! of the factors beyond the additive part, so squaring has the form
//!
//! ```text
//! t_i(x^2) = 2 t_i(x) + p_i(t_1(x), ..., t_{i-1}(x))
//! ```
//!
//! with integer polynomials `p_i` that are derived symbolically from the group
//! law when a [`GroupDescriptor`] is built.

mod poly;
mod squaring;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};
use smallvec::SmallVec;
use thiserror::Error;

use crate::int::Int;

pub use poly::Polynomial;
pub use squaring::{
    doubling_subgroup_index, verify_square_injectivity, DoublingIndex, InjectivityReport,
};

pub type Coords = SmallVec<[Int; 4]>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("element of {found} used where {expected} was expected")]
    GroupMismatch { expected: GroupKind, found: GroupKind },
    #[error("{kind} has {expected} coordinates, got {found}")]
    WrongArity {
        kind: GroupKind,
        expected: usize,
        found: usize,
    },
    #[error("coordinate {index} = {value} is outside [0, {p})")]
    OutOfRange { index: usize, value: Int, p: u64 },
    #[error("invalid group descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("{0} is not abelian")]
    NotAbelian(GroupKind),
    #[error("{0} is not a torsion-free nilpotent group")]
    NotTorsionFree(GroupKind),
    #[error("squaring coordinate {coordinate} depends on later coordinates; the coordinate order is not triangular")]
    NonTriangular { coordinate: usize },
}

/// The concrete group families the crate knows how to compute in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GroupKind {
    /// `Z^dim` under addition.
    Lattice { dim: usize },
    /// The discrete Heisenberg group with law
    /// `ab = (a1+b1, a2+b2, a3+b3+a1*b2)`.
    Heisenberg3,
    /// Upper unitriangular `n x n` integer matrices.
    Unitriangular { n: usize },
    /// `(Z/pZ)^n` under addition, `p` an odd prime.
    FiniteVector { p: u64, n: usize },
}

impl GroupKind {
    pub fn is_abelian(&self) -> bool {
        match self {
            GroupKind::Lattice { .. } | GroupKind::FiniteVector { .. } => true,
            GroupKind::Unitriangular { n } => *n <= 2,
            GroupKind::Heisenberg3 => false,
        }
    }

    pub fn is_torsion_free(&self) -> bool {
        !matches!(self, GroupKind::FiniteVector { .. })
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::Lattice { dim } => write!(f, "lattice:{dim}"),
            GroupKind::Heisenberg3 => f.write_str("h3"),
            GroupKind::Unitriangular { n } => write!(f, "ut:{n}"),
            GroupKind::FiniteVector { p, n } => write!(f, "fv:{p}:{n}"),
        }
    }
}

/// Compact textual form: `lattice:D` (or `zD`), `h3`, `ut:N`, `fv:P:N`.
impl FromStr for GroupKind {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, GroupError> {
        let bad = || GroupError::InvalidDescriptor(format!("unrecognised group spec `{s}`"));
        let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
        let parts: Vec<&str> = s.trim().split(':').collect();
        let kind = match parts.as_slice() {
            ["h3"] | ["heisenberg3"] | ["heisenberg"] => GroupKind::Heisenberg3,
            ["lattice", d] => GroupKind::Lattice { dim: num(d)? as usize },
            ["ut", n] | ["unitriangular", n] => GroupKind::Unitriangular { n: num(n)? as usize },
            ["fv", p, n] | ["finite-vector", p, n] => GroupKind::FiniteVector {
                p: num(p)?,
                n: num(n)? as usize,
            },
            [z] if z.starts_with('z') && z.len() > 1 => GroupKind::Lattice {
                dim: num(&z[1..])? as usize,
            },
            _ => return Err(bad()),
        };
        Ok(kind)
    }
}

/// Coordinate layout for `UT(n)`: strictly-upper entries ordered by
/// superdiagonal, then by row. This order makes the squaring map triangular.
#[derive(Clone, Debug)]
struct UtLayout {
    entries: Vec<(usize, usize)>,
    index: Vec<Vec<usize>>,
}

impl UtLayout {
    fn new(n: usize) -> Self {
        let mut entries = Vec::new();
        let mut index = vec![vec![usize::MAX; n]; n];
        for level in 1..n {
            for i in 0..n - level {
                index[i][i + level] = entries.len();
                entries.push((i, i + level));
            }
        }
        UtLayout { entries, index }
    }
}

/// Minimal ring interface so the group law can be evaluated both on integers
/// and symbolically on polynomials.
trait Ring: Clone {
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
}

impl Ring for Int {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
}

impl Ring for Polynomial {
    fn add(&self, o: &Self) -> Self {
        Polynomial::add(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Polynomial::mul(self, o)
    }
}

/// A concrete group together with its coordinate data.
#[derive(Clone, Debug)]
pub struct GroupDescriptor {
    kind: GroupKind,
    dim: usize,
    square_polys: Vec<Polynomial>,
    ut: Option<Arc<UtLayout>>,
}

impl PartialEq for GroupDescriptor {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for GroupDescriptor {}

impl Serialize for GroupDescriptor {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.kind.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupDescriptor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let kind = GroupKind::deserialize(d)?;
        GroupDescriptor::new(kind).map_err(serde::de::Error::custom)
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl GroupDescriptor {
    pub fn new(kind: GroupKind) -> Result<Self, GroupError> {
        let invalid = |m: &str| Err(GroupError::InvalidDescriptor(m.to_string()));
        let (dim, ut) = match kind {
            GroupKind::Lattice { dim } => {
                if dim == 0 {
                    return invalid("lattice dimension must be positive");
                }
                (dim, None)
            }
            GroupKind::Heisenberg3 => (3, None),
            GroupKind::Unitriangular { n } => {
                if n < 2 {
                    return invalid("unitriangular matrix size must be at least 2");
                }
                (n * (n - 1) / 2, Some(Arc::new(UtLayout::new(n))))
            }
            GroupKind::FiniteVector { p, n } => {
                if n == 0 {
                    return invalid("finite vector dimension must be positive");
                }
                if p == 2 || !is_prime(p) {
                    return invalid("finite vector modulus must be an odd prime");
                }
                if p > i64::MAX as u64 {
                    return invalid("finite vector modulus is too large");
                }
                (n, None)
            }
        };
        let mut g = GroupDescriptor {
            kind,
            dim,
            square_polys: Vec::new(),
            ut,
        };
        g.square_polys = g.derive_square_polys()?;
        Ok(g)
    }

    pub fn lattice(dim: usize) -> Self {
        Self::new(GroupKind::Lattice { dim }).expect("positive dimension")
    }

    pub fn heisenberg() -> Self {
        Self::new(GroupKind::Heisenberg3).expect("heisenberg descriptor")
    }

    pub fn unitriangular(n: usize) -> Result<Self, GroupError> {
        Self::new(GroupKind::Unitriangular { n })
    }

    pub fn finite_vector(p: u64, n: usize) -> Result<Self, GroupError> {
        Self::new(GroupKind::FiniteVector { p, n })
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    /// Number of coordinates (the Mal'cev dimension for nilpotent kinds).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_abelian(&self) -> bool {
        self.kind.is_abelian()
    }

    /// The correction polynomials `p_i` of the squaring map; `p_i` has arity
    /// `i` (zero-based), i.e. it only sees the earlier coordinates.
    ///
    /// For finite vector groups the polynomials are zero and the identity holds
    /// modulo `p`.
    pub fn square_polys(&self) -> &[Polynomial] {
        &self.square_polys
    }

    /// For `UT(n)`, the matrix position `(row, col)` (zero-based) stored at each
    /// coordinate.
    pub fn matrix_positions(&self) -> Option<&[(usize, usize)]> {
        self.ut.as_deref().map(|u| u.entries.as_slice())
    }

    fn derive_square_polys(&self) -> Result<Vec<Polynomial>, GroupError> {
        let s = self.dim;
        if !self.kind.is_torsion_free() {
            return Ok((0..s).map(Polynomial::zero).collect());
        }
        let vars: Vec<Polynomial> = (0..s).map(|i| Polynomial::variable(s, i)).collect();
        let sq = self.law(&vars, &vars);
        let mut out = Vec::with_capacity(s);
        for (i, (q, x)) in sq.iter().zip(&vars).enumerate() {
            let corr = q.sub(&x.scale(&Int::from(2)));
            let p = corr
                .truncate_arity(i)
                .ok_or(GroupError::NonTriangular { coordinate: i })?;
            out.push(p);
        }
        Ok(out)
    }

    /// Group law for the torsion-free kinds, generic over the coefficient ring.
    fn law<R: Ring>(&self, a: &[R], b: &[R]) -> Vec<R> {
        match self.kind {
            GroupKind::Lattice { .. } => a.iter().zip(b).map(|(x, y)| x.add(y)).collect(),
            GroupKind::Heisenberg3 => vec![
                a[0].add(&b[0]),
                a[1].add(&b[1]),
                a[2].add(&b[2]).add(&a[0].mul(&b[1])),
            ],
            GroupKind::Unitriangular { .. } => {
                let ut = self.ut.as_ref().expect("layout");
                ut.entries
                    .iter()
                    .enumerate()
                    .map(|(k, &(i, j))| {
                        let mut v = a[k].add(&b[k]);
                        for m in i + 1..j {
                            v = v.add(&a[ut.index[i][m]].mul(&b[ut.index[m][j]]));
                        }
                        v
                    })
                    .collect()
            }
            GroupKind::FiniteVector { .. } => unreachable!("finite vector law is modular"),
        }
    }

    pub(crate) fn check(&self, a: &GroupElement) -> Result<(), GroupError> {
        if a.kind != self.kind {
            return Err(GroupError::GroupMismatch {
                expected: self.kind,
                found: a.kind,
            });
        }
        Ok(())
    }

    pub(crate) fn modulus(&self) -> Option<Int> {
        match self.kind {
            GroupKind::FiniteVector { p, .. } => Some(Int::from(p)),
            _ => None,
        }
    }

    /// Builds an element, validating arity and (for finite vector groups) range.
    pub fn element<I, T>(&self, coords: I) -> Result<GroupElement, GroupError>
    where
        I: IntoIterator<Item = T>,
        T: Into<Int>,
    {
        let coords: Coords = coords.into_iter().map(Into::into).collect();
        if coords.len() != self.dim {
            return Err(GroupError::WrongArity {
                kind: self.kind,
                expected: self.dim,
                found: coords.len(),
            });
        }
        if let GroupKind::FiniteVector { p, .. } = self.kind {
            let m = Int::from(p);
            for (index, c) in coords.iter().enumerate() {
                if c.is_negative() || *c >= m {
                    return Err(GroupError::OutOfRange {
                        index,
                        value: c.clone(),
                        p,
                    });
                }
            }
        }
        Ok(GroupElement {
            kind: self.kind,
            coords,
        })
    }

    /// Like [`element`](Self::element) but reduces finite-vector coordinates
    /// modulo `p` instead of rejecting them.
    pub fn element_reduced<I, T>(&self, coords: I) -> Result<GroupElement, GroupError>
    where
        I: IntoIterator<Item = T>,
        T: Into<Int>,
    {
        match self.modulus() {
            Some(m) => self.element(coords.into_iter().map(|c| c.into().rem_euclid(&m))),
            None => self.element(coords),
        }
    }

    pub(crate) fn element_unchecked(&self, coords: Coords) -> GroupElement {
        debug_assert_eq!(coords.len(), self.dim);
        GroupElement::from_parts(self.kind, coords)
    }

    pub fn identity(&self) -> GroupElement {
        self.element_unchecked(std::iter::repeat_n(Int::ZERO, self.dim).collect())
    }

    /// `e_i`: the element with coordinate `i` equal to one and zeros elsewhere.
    pub fn basis(&self, i: usize) -> GroupElement {
        let mut c: Coords = std::iter::repeat_n(Int::ZERO, self.dim).collect();
        c[i] = Int::ONE;
        self.element_unchecked(c)
    }

    pub(crate) fn mul_coords(&self, a: &[Int], b: &[Int]) -> Coords {
        match self.kind {
            GroupKind::Lattice { .. } => a.iter().zip(b).map(|(x, y)| x + y).collect(),
            GroupKind::Heisenberg3 => smallvec::smallvec![
                &a[0] + &b[0],
                &a[1] + &b[1],
                &a[2] + &b[2] + &a[0] * &b[1],
            ],
            GroupKind::FiniteVector { p, .. } => {
                let m = Int::from(p);
                a.iter().zip(b).map(|(x, y)| (x + y).rem_euclid(&m)).collect()
            }
            GroupKind::Unitriangular { .. } => self.law(a, b).into_iter().collect(),
        }
    }

    pub(crate) fn inv_coords(&self, a: &[Int]) -> Coords {
        match self.kind {
            GroupKind::Lattice { .. } => a.iter().map(|x| -x).collect(),
            GroupKind::Heisenberg3 => {
                smallvec::smallvec![-&a[0], -&a[1], &a[0] * &a[1] - &a[2]]
            }
            GroupKind::FiniteVector { p, .. } => {
                let m = Int::from(p);
                a.iter().map(|x| (-x).rem_euclid(&m)).collect()
            }
            GroupKind::Unitriangular { .. } => {
                // solve a*y = e level by level
                let ut = self.ut.as_ref().expect("layout");
                let mut y: Coords = std::iter::repeat_n(Int::ZERO, self.dim).collect();
                for (k, &(i, j)) in ut.entries.iter().enumerate() {
                    let mut v = -&a[k];
                    for m in i + 1..j {
                        v -= &a[ut.index[i][m]] * &y[ut.index[m][j]];
                    }
                    y[k] = v;
                }
                y
            }
        }
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.element_unchecked(self.mul_coords(&a.coords, &b.coords)))
    }

    pub fn inv(&self, a: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(a)?;
        Ok(self.element_unchecked(self.inv_coords(&a.coords)))
    }

    pub fn square(&self, a: &GroupElement) -> Result<GroupElement, GroupError> {
        self.mul(a, a)
    }

    /// `t * b * t^-1`.
    pub fn conjugate(&self, t: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
        let tb = self.mul(t, b)?;
        self.mul(&tb, &self.inv(t)?)
    }

    /// Product of a non-empty list of elements, left to right.
    pub fn product<'a>(
        &self,
        elems: impl IntoIterator<Item = &'a GroupElement>,
    ) -> Result<GroupElement, GroupError> {
        let mut acc = self.identity();
        for e in elems {
            acc = self.mul(&acc, e)?;
        }
        Ok(acc)
    }

    /// Evaluates `2 t_i(x) + p_i(t_1(x), .., t_{i-1}(x))` coordinatewise; for
    /// torsion-free kinds this equals `square(x)`.
    pub fn square_via_polys(&self, a: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(a)?;
        let mut c: Coords = a
            .coords
            .iter()
            .zip(&self.square_polys)
            .enumerate()
            .map(|(i, (x, p))| x * 2 + p.eval(&a.coords[..i]))
            .collect();
        if let Some(m) = self.modulus() {
            for x in c.iter_mut() {
                *x = x.rem_euclid(&m);
            }
        }
        Ok(self.element_unchecked(c))
    }
}

/// A group element: exact coordinates tagged with the group kind they belong to.
///
/// Elements order lexicographically by coordinates.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GroupElement {
    kind: GroupKind,
    coords: Coords,
}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupElement {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.coords
            .cmp(&other.coords)
            .then_with(|| self.kind.cmp(&other.kind))
    }
}

impl GroupElement {
    pub(crate) fn from_parts(kind: GroupKind, coords: Coords) -> Self {
        GroupElement { kind, coords }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn coords(&self) -> &[Int] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> &Int {
        &self.coords[i]
    }

    pub fn into_coords(self) -> Coords {
        self.coords
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(Int::is_zero)
    }

    /// Largest absolute coordinate.
    pub fn linf_norm(&self) -> Int {
        self.coords.iter().map(Int::abs).max().unwrap_or(Int::ZERO)
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// Elements are emitted as plain integer tuples; the group is carried by the
/// enclosing record.
impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coords.serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h3(c: [i64; 3]) -> GroupElement {
        GroupDescriptor::heisenberg().element(c).unwrap()
    }

    #[test]
    fn heisenberg_products() {
        let g = GroupDescriptor::heisenberg();
        assert_eq!(g.mul(&h3([1, 0, 0]), &h3([0, 1, 0])).unwrap(), h3([1, 1, 1]));
        assert_eq!(g.mul(&h3([0, 0, 0]), &h3([5, -2, 7])).unwrap(), h3([5, -2, 7]));
        assert_eq!(g.inv(&h3([1, 2, 3])).unwrap(), h3([-1, -2, -1]));
        assert_eq!(g.inv(&g.identity()).unwrap(), g.identity());
        assert_eq!(g.square(&h3([1, 2, 3])).unwrap(), h3([2, 4, 8]));
        assert_eq!(g.square(&h3([0, 0, 0])).unwrap(), h3([0, 0, 0]));
    }

    #[test]
    fn lattice_products() {
        let g = GroupDescriptor::lattice(2);
        let a = g.element([3, 4]).unwrap();
        let b = g.element([1, -1]).unwrap();
        assert_eq!(g.mul(&a, &b).unwrap(), g.element([4, 3]).unwrap());
        assert_eq!(g.inv(&a).unwrap(), g.element([-3, -4]).unwrap());
        assert!(g.square_polys().iter().all(Polynomial::is_zero));
    }

    #[test]
    fn heisenberg_square_polys() {
        let g = GroupDescriptor::heisenberg();
        let p = g.square_polys();
        assert!(p[0].is_zero() && p[1].is_zero());
        assert_eq!(p[2], Polynomial::from_terms(2, [(Int::ONE, vec![1, 1])]));
        assert_eq!(p[2].term_count(), 1);
    }

    #[test]
    fn ut3_matches_heisenberg() {
        // superdiagonal-first layout puts (0,1), (1,2), (0,2) in that order,
        // which is exactly the Heisenberg coordinate system
        let u = GroupDescriptor::unitriangular(3).unwrap();
        assert_eq!(u.matrix_positions().unwrap(), &[(0, 1), (1, 2), (0, 2)]);
        let h = GroupDescriptor::heisenberg();
        assert_eq!(u.square_polys(), h.square_polys());
        let a = u.element([2, -3, 5]).unwrap();
        let b = u.element([-1, 4, 7]).unwrap();
        let hp = h.mul(&h3([2, -3, 5]), &h3([-1, 4, 7])).unwrap();
        assert_eq!(u.mul(&a, &b).unwrap().coords(), hp.coords());
    }

    #[test]
    fn ut4_square_polys_are_triangular() {
        let u = GroupDescriptor::unitriangular(4).unwrap();
        assert_eq!(u.dim(), 6);
        for (i, p) in u.square_polys().iter().enumerate() {
            assert_eq!(p.arity(), i);
        }
        // first superdiagonal squares linearly
        assert!(u.square_polys()[..3].iter().all(Polynomial::is_zero));
        assert!(!u.square_polys()[5].is_zero());
    }

    #[test]
    fn mismatch_and_arity_errors() {
        let h = GroupDescriptor::heisenberg();
        let z = GroupDescriptor::lattice(3);
        let a = z.element([1, 2, 3]).unwrap();
        assert!(matches!(
            h.mul(&h3([0, 0, 0]), &a),
            Err(GroupError::GroupMismatch { .. })
        ));
        assert!(matches!(
            h.element([1, 2]),
            Err(GroupError::WrongArity { expected: 3, found: 2, .. })
        ));
    }

    #[test]
    fn finite_vector_range_and_law() {
        let f = GroupDescriptor::finite_vector(5, 2).unwrap();
        assert!(f.element([5, 0]).is_err());
        let a = f.element([3, 4]).unwrap();
        assert_eq!(f.square(&a).unwrap(), f.element([1, 3]).unwrap());
        assert_eq!(f.mul(&a, &f.inv(&a).unwrap()).unwrap(), f.identity());
        assert!(GroupDescriptor::finite_vector(2, 1).is_err());
        assert!(GroupDescriptor::finite_vector(9, 1).is_err());
    }

    #[test]
    fn kind_parsing() {
        for s in ["lattice:2", "h3", "ut:4", "fv:3:2"] {
            let k: GroupKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert_eq!("z3".parse::<GroupKind>().unwrap(), GroupKind::Lattice { dim: 3 });
        assert!("heis".parse::<GroupKind>().is_err());
        let json = serde_json::to_string(&GroupKind::FiniteVector { p: 3, n: 2 }).unwrap();
        assert_eq!(json, r#"{"kind":"finite-vector","p":3,"n":2}"#);
    }

    #[test]
    fn descriptor_serde_round_trip() {
        let g = GroupDescriptor::unitriangular(4).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: GroupDescriptor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.square_polys(), g.square_polys());
    }
}
