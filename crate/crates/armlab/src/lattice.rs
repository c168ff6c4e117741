//! Geometry of the square lattice, its matching (*) lattice, the triangular
//! lattice, centered boxes, annuli and boundary rings.
//!
//! Distances are always measured in the L-infinity norm. The box of radius
//! `n` is `B_n = [-n, n]^2`; the annulus `A(n1, n2) = B_{n2} \ B_{n1 - 1}`
//! is the set of sites with norm in `[n1, n2]` (all of `B_{n2}` when
//! `n1 = 0`). Sites inside a box are addressed by a row-major flat index so
//! configurations can live in packed bit arrays.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice vertex with integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }

    /// L-infinity norm, the distance functional used throughout.
    pub fn norm(self) -> i32 {
        self.x.abs().max(self.y.abs())
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Site::new(self.x + dx, self.y + dy)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Site colors: open vertices carry a 1 bit, closed vertices a 0 bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Open,
    Closed,
}

impl Color {
    pub fn flip(self) -> Self {
        match self {
            Color::Open => Color::Closed,
            Color::Closed => Color::Open,
        }
    }
}

/// Neighborhood structure. `Star` is the matching lattice of `Orthogonal`;
/// `Triangular` is self-matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Adjacency {
    Orthogonal,
    Star,
    Triangular,
}

const ORTHOGONAL_OFFSETS: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const STAR_OFFSETS: [(i32, i32); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (-1, -1),
    (1, -1),
    (-1, 1),
];
// The triangular lattice is realized as Z^2 plus the same (+1,+1)/(-1,-1)
// diagonal on every face.
const TRIANGULAR_OFFSETS: [(i32, i32); 6] =
    [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)];

impl Adjacency {
    pub fn offsets(self) -> &'static [(i32, i32)] {
        match self {
            Adjacency::Orthogonal => &ORTHOGONAL_OFFSETS,
            Adjacency::Star => &STAR_OFFSETS,
            Adjacency::Triangular => &TRIANGULAR_OFFSETS,
        }
    }

    /// The adjacency used by the matching lattice. Closed-path connectivity
    /// on a lattice uses the matching adjacency of its open-path one.
    pub fn matching(self) -> Adjacency {
        match self {
            Adjacency::Orthogonal => Adjacency::Star,
            Adjacency::Star => Adjacency::Orthogonal,
            Adjacency::Triangular => Adjacency::Triangular,
        }
    }

    pub fn degree(self) -> usize {
        self.offsets().len()
    }
}

/// The two lattices the lab runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Square,
    Triangular,
}

impl LatticeKind {
    /// Adjacency used by paths of the given color.
    pub fn adjacency(self, color: Color) -> Adjacency {
        match (self, color) {
            (LatticeKind::Square, Color::Open) => Adjacency::Orthogonal,
            (LatticeKind::Square, Color::Closed) => Adjacency::Star,
            (LatticeKind::Triangular, _) => Adjacency::Triangular,
        }
    }

    /// Default critical point. The triangular value is exact; the square
    /// value is a literature estimate and is treated as a run parameter,
    /// never as ground truth.
    pub fn default_pc(self) -> f64 {
        match self {
            LatticeKind::Square => 0.59274605,
            LatticeKind::Triangular => 0.5,
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeKind::Square => write!(f, "square"),
            LatticeKind::Triangular => write!(f, "triangular"),
        }
    }
}

impl std::str::FromStr for LatticeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(LatticeKind::Square),
            "triangular" => Ok(LatticeKind::Triangular),
            other => Err(Error::Parse(format!("unknown lattice {other:?}"))),
        }
    }
}

/// Unclipped neighbors of `v` under the given adjacency.
pub fn neighbors(v: Site, adj: Adjacency) -> Vec<Site> {
    adj.offsets().iter().map(|&(dx, dy)| v.offset(dx, dy)).collect()
}

/// Neighbors of `v` restricted to the box.
pub fn neighbors_in_box(v: Site, adj: Adjacency, b: BoxSpec) -> Vec<Site> {
    adj.offsets()
        .iter()
        .map(|&(dx, dy)| v.offset(dx, dy))
        .filter(|&u| b.contains(u))
        .collect()
}

/// The centered box `B_n = [-n, n]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxSpec {
    radius: i32,
}

impl BoxSpec {
    pub fn new(radius: i32) -> Result<Self> {
        if radius < 0 {
            return Err(Error::invalid(format!("box radius must be >= 0, got {radius}")));
        }
        // Keep (2n+1)^2 comfortably inside usize/i32 index arithmetic.
        if radius > ((1 << 14) - 1) {
            return Err(Error::invalid(format!("box radius {radius} too large")));
        }
        Ok(BoxSpec { radius })
    }

    pub fn radius(self) -> i32 {
        self.radius
    }

    /// Side length `2n + 1`.
    pub fn side(self) -> i32 {
        2 * self.radius + 1
    }

    pub fn site_count(self) -> usize {
        (self.side() as usize) * (self.side() as usize)
    }

    pub fn contains(self, v: Site) -> bool {
        v.norm() <= self.radius
    }

    /// Row-major flat index of a site; rows ordered by increasing `y`.
    pub fn index(self, v: Site) -> usize {
        debug_assert!(self.contains(v));
        let w = self.side() as usize;
        (v.y + self.radius) as usize * w + (v.x + self.radius) as usize
    }

    pub fn site_at(self, idx: usize) -> Site {
        let w = self.side() as usize;
        let y = (idx / w) as i32 - self.radius;
        let x = (idx % w) as i32 - self.radius;
        Site::new(x, y)
    }

    /// All sites of the box in row-major order.
    pub fn iter(self) -> impl Iterator<Item = Site> {
        let n = self.radius;
        (-n..=n).flat_map(move |y| (-n..=n).map(move |x| Site::new(x, y)))
    }

    /// Inner vertex boundary of the box: the sites at norm exactly `n`,
    /// listed counterclockwise starting at the lower-right corner `(n, -n)`.
    /// `B_0` has the single boundary site `(0, 0)`.
    pub fn inner_boundary(self) -> Vec<Site> {
        let n = self.radius;
        if n == 0 {
            return vec![Site::new(0, 0)];
        }
        let mut ring = Vec::with_capacity(8 * n as usize);
        for y in -n..=n {
            ring.push(Site::new(n, y));
        }
        for x in (-n..n).rev() {
            ring.push(Site::new(x, n));
        }
        for y in (-n..n).rev() {
            ring.push(Site::new(-n, y));
        }
        for x in -n + 1..n {
            ring.push(Site::new(x, -n));
        }
        ring
    }
}

/// Sites of the annulus `A(n1, n2) = B_{n2} \ B_{n1-1}`, i.e. norms in
/// `[n1, n2]`, in row-major order.
pub fn annulus_sites(n1: i32, n2: i32) -> Result<Vec<Site>> {
    if n1 < 0 || n1 >= n2 {
        return Err(Error::invalid(format!(
            "annulus radii must satisfy 0 <= n1 < n2, got ({n1}, {n2})"
        )));
    }
    let outer = BoxSpec::new(n2)?;
    Ok(outer.iter().filter(|v| v.norm() >= n1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn orthogonal_neighbors_of_origin() {
        let got: HashSet<_> = neighbors(Site::new(0, 0), Adjacency::Orthogonal)
            .into_iter()
            .collect();
        let want: HashSet<_> = [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .iter()
            .map(|&(x, y)| Site::new(x, y))
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn star_neighbors_are_the_linf_sphere() {
        let got: HashSet<_> = neighbors(Site::new(0, 0), Adjacency::Star)
            .into_iter()
            .collect();
        let want: HashSet<_> = (-1..=1)
            .flat_map(|x| (-1..=1).map(move |y| Site::new(x, y)))
            .filter(|v| v.norm() == 1)
            .collect();
        assert_eq!(got.len(), 8);
        assert_eq!(got, want);
    }

    #[test]
    fn triangular_neighbors_fixed_diagonal() {
        let got: HashSet<_> = neighbors(Site::new(0, 0), Adjacency::Triangular)
            .into_iter()
            .collect();
        let mut want: HashSet<_> = neighbors(Site::new(0, 0), Adjacency::Orthogonal)
            .into_iter()
            .collect();
        want.insert(Site::new(1, 1));
        want.insert(Site::new(-1, -1));
        assert_eq!(got, want);
    }

    #[test]
    fn star_contains_orthogonal() {
        for v in BoxSpec::new(3).unwrap().iter() {
            let star: HashSet<_> = neighbors(v, Adjacency::Star).into_iter().collect();
            for u in neighbors(v, Adjacency::Orthogonal) {
                assert!(star.contains(&u));
            }
        }
    }

    #[test]
    fn triangular_is_self_matching() {
        assert_eq!(Adjacency::Triangular.matching(), Adjacency::Triangular);
        assert_eq!(Adjacency::Orthogonal.matching(), Adjacency::Star);
        assert_eq!(Adjacency::Star.matching(), Adjacency::Orthogonal);
    }

    #[test]
    fn adjacency_is_symmetric() {
        for adj in [Adjacency::Orthogonal, Adjacency::Star, Adjacency::Triangular] {
            for v in BoxSpec::new(2).unwrap().iter() {
                for u in neighbors(v, adj) {
                    assert!(neighbors(u, adj).contains(&v));
                }
            }
        }
    }

    #[test]
    fn boundary_of_b0_is_origin() {
        assert_eq!(BoxSpec::new(0).unwrap().inner_boundary(), vec![Site::new(0, 0)]);
    }

    #[test]
    fn boundary_counts_are_8n() {
        for n in 1..=20 {
            let ring = BoxSpec::new(n).unwrap().inner_boundary();
            assert_eq!(ring.len(), 8 * n as usize, "n = {n}");
            let distinct: HashSet<_> = ring.iter().copied().collect();
            assert_eq!(distinct.len(), ring.len());
            assert!(ring.iter().all(|v| v.norm() == n));
        }
    }

    #[test]
    fn boundary_of_b1_is_the_norm_one_sphere() {
        let ring: HashSet<_> = BoxSpec::new(1).unwrap().inner_boundary().into_iter().collect();
        let want: HashSet<_> = BoxSpec::new(1)
            .unwrap()
            .iter()
            .filter(|v| v.norm() == 1)
            .collect();
        assert_eq!(ring, want);
    }

    #[test]
    fn boundary_order_is_ccw_from_lower_right() {
        let ring = BoxSpec::new(2).unwrap().inner_boundary();
        assert_eq!(ring[0], Site::new(2, -2));
        assert_eq!(ring[1], Site::new(2, -1));
        // Consecutive ring sites are orthogonal neighbors (the ring is a cycle).
        for w in ring.windows(2) {
            let (a, b) = (w[0], w[1]);
            assert_eq!((a.x - b.x).abs() + (a.y - b.y).abs(), 1);
        }
        let (first, last) = (ring[0], *ring.last().unwrap());
        assert_eq!((first.x - last.x).abs() + (first.y - last.y).abs(), 1);
    }

    #[test]
    fn annulus_examples() {
        assert_eq!(annulus_sites(1, 2).unwrap().len(), 24);
        assert_eq!(annulus_sites(0, 1).unwrap().len(), 9);
        assert_eq!(annulus_sites(2, 4).unwrap().len(), 72);
        assert!(annulus_sites(2, 2).is_err());
        assert!(annulus_sites(3, 2).is_err());
    }

    #[test]
    fn box_indexing_round_trips() {
        let b = BoxSpec::new(5).unwrap();
        for (i, v) in b.iter().enumerate() {
            assert_eq!(b.index(v), i);
            assert_eq!(b.site_at(i), v);
        }
        assert_eq!(b.site_count(), 121);
    }
}
