//! Union-find cluster labeling, crossing-cluster counts `Z`, and rectangle
//! crossing events.
//!
//! Two counting modes exist because they measure different things:
//! `count_crossing_clusters` restricts connectivity to the sub-box
//! `B_{n2}` (the |C_{n1,n2}| of the correlator pipeline), while
//! `count_annulus_crossing_clusters` restricts it to the annulus
//! `A(n1, n2)` (arm events live inside the annulus and may not use the
//! hole).

use serde::{Deserialize, Serialize};

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::lattice::{Adjacency, BoxSpec, Color, Site};

#[inline]
fn uf_find(parent: &mut [u32], mut i: u32) -> u32 {
    while parent[i as usize] != i {
        let grand = parent[parent[i as usize] as usize];
        parent[i as usize] = grand;
        i = grand;
    }
    i
}

#[inline]
fn uf_union(parent: &mut [u32], size: &mut [u32], a: u32, b: u32) -> u32 {
    let (ra, rb) = (uf_find(parent, a), uf_find(parent, b));
    if ra == rb {
        return ra;
    }
    let (big, small) = if size[ra as usize] >= size[rb as usize] {
        (ra, rb)
    } else {
        (rb, ra)
    };
    parent[small as usize] = big;
    size[big as usize] += size[small as usize];
    big
}

/// Offsets of already-scanned neighbors in a row-major sweep.
fn backward_offsets(adj: Adjacency) -> &'static [(i32, i32)] {
    match adj {
        Adjacency::Orthogonal => &[(-1, 0), (0, -1)],
        Adjacency::Star => &[(-1, 0), (0, -1), (-1, -1), (1, -1)],
        Adjacency::Triangular => &[(-1, 0), (0, -1), (-1, -1)],
    }
}

/// Reusable scratch space for region-restricted crossing counts; the hot
/// loops (exact enumeration, per-site pivotality scans) call it millions
/// of times.
#[derive(Debug, Default)]
pub(crate) struct RegionCounter {
    parent: Vec<u32>,
    size: Vec<u32>,
    tags: Vec<u8>,
}

impl RegionCounter {
    pub(crate) fn new() -> Self {
        RegionCounter::default()
    }

    fn reset(&mut self, len: usize) {
        self.parent.clear();
        self.parent.extend(0..len as u32);
        self.size.clear();
        self.size.resize(len, 1);
        self.tags.clear();
        self.tags.resize(len, 0);
    }

    /// Number of distinct clusters of the given color meeting both site
    /// predicates, with connectivity restricted to a region.
    fn count(
        &mut self,
        cfg: &Configuration,
        n2: i32,
        color: Color,
        member: impl Fn(Site) -> bool,
        inner: impl Fn(Site) -> bool,
        outer: impl Fn(Site) -> bool,
    ) -> u32 {
        let region = BoxSpec::new(n2).expect("validated by caller");
        let len = region.site_count();
        let adj = cfg.lattice().adjacency(color);
        let back = backward_offsets(adj);
        let open_wanted = color == Color::Open;
        self.reset(len);

        // Bit 0: member of the colored region, bit 1: touches inner
        // target, bit 2: touches outer target. Flags live on roots after
        // the sweep.
        let side = region.side();
        for y in -n2..=n2 {
            for x in -n2..=n2 {
                let v = Site::new(x, y);
                if !member(v) || cfg.is_open(v) != open_wanted {
                    continue;
                }
                let idx = ((y + n2) * side + (x + n2)) as u32;
                self.tags[idx as usize] |= 1;
                let mut root = idx;
                for &(dx, dy) in back {
                    let (ux, uy) = (x + dx, y + dy);
                    if ux < -n2 || ux > n2 || uy < -n2 || uy > n2 {
                        continue;
                    }
                    let u = Site::new(ux, uy);
                    if !member(u) || cfg.is_open(u) != open_wanted {
                        continue;
                    }
                    let uidx = ((uy + n2) * side + (ux + n2)) as u32;
                    root = uf_union(&mut self.parent, &mut self.size, root, uidx);
                }
            }
        }
        for idx in 0..len {
            if self.tags[idx] & 1 == 0 {
                continue;
            }
            let v = region.site_at(idx);
            let mut t = 0u8;
            if inner(v) {
                t |= 2;
            }
            if outer(v) {
                t |= 4;
            }
            if t != 0 {
                let r = uf_find(&mut self.parent, idx as u32) as usize;
                self.tags[r] |= t;
            }
        }
        let mut crossing = 0;
        for idx in 0..len {
            if self.parent[idx] == idx as u32 && self.tags[idx] & 7 == 7 {
                crossing += 1;
            }
        }
        crossing
    }

    /// `Z = |C_{n1,n2}|` without validation; callers check radii.
    pub(crate) fn crossing_clusters(
        &mut self,
        cfg: &Configuration,
        n1: i32,
        n2: i32,
        color: Color,
    ) -> u32 {
        self.count(
            cfg,
            n2,
            color,
            |_| true,
            |v| v.norm() <= n1,
            |v| v.norm() == n2,
        )
    }

    pub(crate) fn annulus_crossings(
        &mut self,
        cfg: &Configuration,
        n1: i32,
        n2: i32,
        color: Color,
    ) -> u32 {
        self.count(
            cfg,
            n2,
            color,
            |v| v.norm() >= n1,
            |v| v.norm() == n1,
            |v| v.norm() == n2,
        )
    }
}

/// The number of crossing clusters of an annulus pair, `z = |C_{n1,n2}|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingCount {
    pub z: u32,
    pub n1: i32,
    pub n2: i32,
}

fn check_radii(cfg: &Configuration, n1: i32, n2: i32) -> Result<()> {
    if n1 < 0 || n1 > n2 {
        return Err(Error::invalid(format!(
            "radii must satisfy 0 <= n1 <= n2, got ({n1}, {n2})"
        )));
    }
    if cfg.box_spec().radius() < n2 {
        return Err(Error::invalid(format!(
            "configuration box B_{} does not cover B_{n2}",
            cfg.box_spec().radius()
        )));
    }
    Ok(())
}

/// Distinct clusters of `color` inside `B_{n2}` meeting both `B_{n1}` and
/// the inner boundary of `B_{n2}`. Connectivity is restricted to `B_{n2}`.
pub fn count_crossing_clusters(
    cfg: &Configuration,
    n1: i32,
    n2: i32,
    color: Color,
) -> Result<CrossingCount> {
    check_radii(cfg, n1, n2)?;
    let z = RegionCounter::new().crossing_clusters(cfg, n1, n2, color);
    Ok(CrossingCount { z, n1, n2 })
}

/// Distinct clusters of `color` crossing the annulus `A(n1, n2)`, with
/// connectivity restricted to the annulus. This is the count arm events
/// are built from.
pub fn count_annulus_crossing_clusters(
    cfg: &Configuration,
    n1: i32,
    n2: i32,
    color: Color,
) -> Result<u32> {
    check_radii(cfg, n1, n2)?;
    if n1 == n2 {
        return Err(Error::invalid("annulus needs n1 < n2"));
    }
    Ok(RegionCounter::new().annulus_crossings(cfg, n1, n2, color))
}

impl RegionCounter {
    /// Crossing clusters of the annulus `center + A(1, r)` (the center
    /// site is excluded). With `require_attach`, a cluster only counts if
    /// it contains a site at one of the given offsets from the center;
    /// the four-arm-at-site detector uses the open adjacency there so that
    /// open arms attach to the center under the color's own neighborhood.
    pub(crate) fn punctured_annulus_crossings(
        &mut self,
        cfg: &Configuration,
        center: Site,
        r: i32,
        color: Color,
        require_attach: Option<Adjacency>,
    ) -> Result<u32> {
        if r < 1 {
            return Err(Error::invalid("annulus outer radius must be >= 1"));
        }
        let b = cfg.box_spec();
        if center.norm() + r > b.radius() {
            return Err(Error::invalid(format!(
                "annulus of radius {r} at {center} does not fit in B_{}",
                b.radius()
            )));
        }
        let region = BoxSpec::new(r).expect("radius checked");
        let len = region.site_count();
        let adj = cfg.lattice().adjacency(color);
        let back = backward_offsets(adj);
        let open_wanted = color == Color::Open;
        let attach = require_attach.unwrap_or(Adjacency::Star);
        self.reset(len);

        let side = region.side();
        for dy in -r..=r {
            for dx in -r..=r {
                let d = Site::new(dx, dy);
                if d.norm() < 1 {
                    continue;
                }
                let v = center.offset(dx, dy);
                if cfg.is_open(v) != open_wanted {
                    continue;
                }
                let idx = ((dy + r) * side + (dx + r)) as u32;
                self.tags[idx as usize] |= 1;
                let mut root = idx;
                for &(bx, by) in back {
                    let (ex, ey) = (dx + bx, dy + by);
                    if ex < -r || ex > r || ey < -r || ey > r || Site::new(ex, ey).norm() < 1 {
                        continue;
                    }
                    let u = center.offset(ex, ey);
                    if cfg.is_open(u) != open_wanted {
                        continue;
                    }
                    let uidx = ((ey + r) * side + (ex + r)) as u32;
                    root = uf_union(&mut self.parent, &mut self.size, root, uidx);
                }
            }
        }
        for idx in 0..len {
            if self.tags[idx] & 1 == 0 {
                continue;
            }
            let d = region.site_at(idx);
            let mut t = 0u8;
            if d.norm() == 1
                && attach
                    .offsets()
                    .iter()
                    .any(|&(ox, oy)| ox == d.x && oy == d.y)
            {
                t |= 2;
            }
            if d.norm() == r {
                t |= 4;
            }
            if t != 0 {
                let root = uf_find(&mut self.parent, idx as u32) as usize;
                self.tags[root] |= t;
            }
        }
        let mut crossing = 0;
        for idx in 0..len {
            if self.parent[idx] == idx as u32 && self.tags[idx] & 7 == 7 {
                crossing += 1;
            }
        }
        Ok(crossing)
    }
}

/// An axis-aligned rectangle of sites `[x1, x2] x [y1, y2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x1: i32,
    pub x2: i32,
    pub y1: i32,
    pub y2: i32,
}

impl Rect {
    pub fn new(x1: i32, x2: i32, y1: i32, y2: i32) -> Result<Self> {
        if x1 > x2 || y1 > y2 {
            return Err(Error::invalid(format!(
                "degenerate rectangle [{x1},{x2}]x[{y1},{y2}]"
            )));
        }
        Ok(Rect { x1, x2, y1, y2 })
    }
}

/// True iff a monochromatic path of `color` (under the color's adjacency)
/// joins the left side `x = x1` to the right side `x = x2` inside the
/// rectangle.
pub fn crossing_event(cfg: &Configuration, rect: Rect, color: Color) -> Result<bool> {
    let b = cfg.box_spec();
    let n = b.radius();
    if rect.x1 < -n || rect.x2 > n || rect.y1 < -n || rect.y2 > n {
        return Err(Error::invalid("rectangle not contained in the box"));
    }
    Ok(directed_crossing(cfg, rect, color, false))
}

/// Left-right (`transpose = false`) or top-bottom (`transpose = true`)
/// crossing inside the rectangle.
pub fn directed_crossing(cfg: &Configuration, rect: Rect, color: Color, transpose: bool) -> bool {
    let w = (rect.x2 - rect.x1 + 1) as usize;
    let h = (rect.y2 - rect.y1 + 1) as usize;
    let len = w * h;
    let adj = cfg.lattice().adjacency(color);
    let back = backward_offsets(adj);
    let open_wanted = color == Color::Open;

    let mut parent: Vec<u32> = (0..len as u32).collect();
    let mut size = vec![1u32; len];
    let mut tags = vec![0u8; len];
    for y in rect.y1..=rect.y2 {
        for x in rect.x1..=rect.x2 {
            let v = Site::new(x, y);
            if cfg.is_open(v) != open_wanted {
                continue;
            }
            let idx = ((y - rect.y1) as usize * w + (x - rect.x1) as usize) as u32;
            tags[idx as usize] |= 1;
            let mut root = idx;
            for &(dx, dy) in back {
                let (ux, uy) = (x + dx, y + dy);
                if ux < rect.x1 || ux > rect.x2 || uy < rect.y1 || uy > rect.y2 {
                    continue;
                }
                if cfg.is_open(Site::new(ux, uy)) != open_wanted {
                    continue;
                }
                let uidx = ((uy - rect.y1) as usize * w + (ux - rect.x1) as usize) as u32;
                root = uf_union(&mut parent, &mut size, root, uidx);
            }
        }
    }
    for idx in 0..len {
        if tags[idx] & 1 == 0 {
            continue;
        }
        let (col, row) = (idx % w, idx / w);
        let (lo, hi) = if transpose { (row, row) } else { (col, col) };
        let (end_lo, end_hi) = if transpose { (0, h - 1) } else { (0, w - 1) };
        let mut t = 0u8;
        if lo == end_lo {
            t |= 2;
        }
        if hi == end_hi {
            t |= 4;
        }
        if t != 0 {
            let r = uf_find(&mut parent, idx as u32) as usize;
            tags[r] |= t;
        }
    }
    (0..len).any(|i| parent[i] == i as u32 && tags[i] & 6 == 6)
}

/// A full labeling of one color class of the box.
#[derive(Debug, Clone)]
pub struct ClusterLabeling {
    box_spec: BoxSpec,
    color: Color,
    adjacency: Adjacency,
    parent: Vec<u32>,
    member: Vec<bool>,
    cluster_count: usize,
}

impl ClusterLabeling {
    pub fn color(&self) -> Color {
        self.color
    }

    pub fn adjacency(&self) -> Adjacency {
        self.adjacency
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    /// Root label of the cluster containing `v`, or None if `v` is not of
    /// the labeled color.
    pub fn label_of(&self, v: Site) -> Option<u32> {
        let idx = self.box_spec.index(v);
        if !self.member[idx] {
            return None;
        }
        // Parents are fully compressed at construction time.
        Some(self.parent[idx])
    }

    pub fn same_cluster(&self, a: Site, b: Site) -> bool {
        match (self.label_of(a), self.label_of(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut counts = std::collections::HashMap::new();
        for idx in 0..self.parent.len() {
            if self.member[idx] {
                *counts.entry(self.parent[idx]).or_insert(0usize) += 1;
            }
        }
        let mut sizes: Vec<usize> = counts.into_values().collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }
}

/// Label the clusters of one color over the whole box. The adjacency must
/// be the one the lattice prescribes for that color.
pub fn label(cfg: &Configuration, color: Color, adj: Adjacency) -> Result<ClusterLabeling> {
    let expected = cfg.lattice().adjacency(color);
    if adj != expected {
        return Err(Error::invalid(format!(
            "adjacency {adj:?} inconsistent with color {color:?} on the {} lattice",
            cfg.lattice()
        )));
    }
    let b = cfg.box_spec();
    let len = b.site_count();
    let back = backward_offsets(adj);
    let open_wanted = color == Color::Open;
    let n = b.radius();
    let side = b.side();

    let mut parent: Vec<u32> = (0..len as u32).collect();
    let mut size = vec![1u32; len];
    let mut member = vec![false; len];
    for y in -n..=n {
        for x in -n..=n {
            let v = Site::new(x, y);
            if cfg.is_open(v) != open_wanted {
                continue;
            }
            let idx = ((y + n) * side + (x + n)) as u32;
            member[idx as usize] = true;
            let mut root = idx;
            for &(dx, dy) in back {
                let (ux, uy) = (x + dx, y + dy);
                if ux < -n || ux > n || uy < -n || uy > n {
                    continue;
                }
                if cfg.is_open(Site::new(ux, uy)) != open_wanted {
                    continue;
                }
                let uidx = ((uy + n) * side + (ux + n)) as u32;
                root = uf_union(&mut parent, &mut size, root, uidx);
            }
        }
    }
    let mut cluster_count = 0;
    for idx in 0..len {
        if member[idx] {
            let r = uf_find(&mut parent, idx as u32);
            parent[idx] = r;
            if r == idx as u32 {
                cluster_count += 1;
            }
        }
    }
    Ok(ClusterLabeling {
        box_spec: b,
        color,
        adjacency: adj,
        parent,
        member,
        cluster_count,
    })
}
