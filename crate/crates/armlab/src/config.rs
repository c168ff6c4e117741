//! Percolation configurations: seeded Bernoulli sampling over a box,
//! single-site flips, the centered increment `C_j`, and an access-tracking
//! view used by the exploration process.

use std::io::{BufRead, Write};

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, Color, LatticeKind, Site};
use crate::rng;

/// A site configuration over a centered box, one bit per site (1 = open).
///
/// Configurations are immutable in normal use; `toggle` exists for the
/// single-owner mutation pattern of the enumeration and flip tests. Trailing
/// bits of the last word are kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    lattice: LatticeKind,
    box_spec: BoxSpec,
    p: f64,
    seed: u64,
    words: Vec<u64>,
}

impl Configuration {
    /// i.i.d. Bernoulli(p) states, bit-exact reproducible from
    /// `(master_seed, stream, box, p)`. The degenerate parameters `p = 0`
    /// and `p = 1` produce deterministic all-closed / all-open boxes.
    pub fn sample(
        lattice: LatticeKind,
        box_spec: BoxSpec,
        p: f64,
        master_seed: u64,
        stream: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("p must lie in [0, 1], got {p}")));
        }
        let n_sites = box_spec.site_count();
        let n_words = n_sites.div_ceil(64);
        let mut cfg = Configuration {
            lattice,
            box_spec,
            p,
            seed: stream,
            words: vec![0; n_words],
        };
        if p == 0.0 {
            return Ok(cfg);
        }
        if p == 1.0 {
            cfg.fill_open();
            return Ok(cfg);
        }
        let mut rng = rng::stream_rng(master_seed, stream);
        // P(draw < threshold) = round(p * 2^64) / 2^64.
        let threshold = (p * (u64::MAX as f64 + 1.0)).round() as u64;
        for idx in 0..n_sites {
            if rng.next_u64() < threshold {
                cfg.words[idx >> 6] |= 1u64 << (idx & 63);
            }
        }
        Ok(cfg)
    }

    /// All-open box at parameter `p` (used by degenerate examples).
    pub fn all_open(lattice: LatticeKind, box_spec: BoxSpec, p: f64) -> Self {
        let mut cfg = Configuration::all_closed(lattice, box_spec, p);
        cfg.fill_open();
        cfg
    }

    pub fn all_closed(lattice: LatticeKind, box_spec: BoxSpec, p: f64) -> Self {
        let n_words = box_spec.site_count().div_ceil(64);
        Configuration {
            lattice,
            box_spec,
            p,
            seed: 0,
            words: vec![0; n_words],
        }
    }

    /// Build from an explicit open-site list.
    pub fn from_open_sites(
        lattice: LatticeKind,
        box_spec: BoxSpec,
        p: f64,
        open: &[Site],
    ) -> Result<Self> {
        let mut cfg = Configuration::all_closed(lattice, box_spec, p);
        for &v in open {
            if !box_spec.contains(v) {
                return Err(Error::SiteOutsideBox(v.x, v.y));
            }
            let idx = box_spec.index(v);
            cfg.words[idx >> 6] |= 1u64 << (idx & 63);
        }
        Ok(cfg)
    }

    fn fill_open(&mut self) {
        let n_sites = self.box_spec.site_count();
        for w in self.words.iter_mut() {
            *w = u64::MAX;
        }
        let tail = n_sites & 63;
        if tail != 0 {
            *self.words.last_mut().unwrap() = (1u64 << tail) - 1;
        }
    }

    pub fn lattice(&self) -> LatticeKind {
        self.lattice
    }

    pub fn box_spec(&self) -> BoxSpec {
        self.box_spec
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn is_open_idx(&self, idx: usize) -> bool {
        (self.words[idx >> 6] >> (idx & 63)) & 1 == 1
    }

    #[inline]
    pub fn is_open(&self, v: Site) -> bool {
        self.is_open_idx(self.box_spec.index(v))
    }

    pub fn color(&self, v: Site) -> Color {
        if self.is_open(v) {
            Color::Open
        } else {
            Color::Closed
        }
    }

    pub fn open_count(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// The flipped configuration `omega^(v)`; all other sites unchanged.
    pub fn flip(&self, v: Site) -> Result<Self> {
        if !self.box_spec.contains(v) {
            return Err(Error::SiteOutsideBox(v.x, v.y));
        }
        let mut out = self.clone();
        out.toggle(v);
        Ok(out)
    }

    /// In-place flip for single-owner loops (enumeration, pivotality scans).
    pub fn toggle(&mut self, v: Site) {
        let idx = self.box_spec.index(v);
        self.words[idx >> 6] ^= 1u64 << (idx & 63);
    }

    /// Overwrite the low bits from a raw word; used by the exact enumerator
    /// where the configuration index is the configuration. Only valid for
    /// boxes with at most 64 sites.
    pub fn set_bits_from_u64(&mut self, bits: u64) {
        debug_assert!(self.box_spec.site_count() <= 64);
        let tail = self.box_spec.site_count();
        let mask = if tail == 64 { u64::MAX } else { (1u64 << tail) - 1 };
        self.words[0] = bits & mask;
    }

    /// Centered increment of site `v`: `-(1-p)` if open, `p` if closed.
    /// Mean zero under the recorded `p`, and `|C_j| <= 1` always.
    pub fn increment_c(&self, v: Site) -> Result<f64> {
        if !self.box_spec.contains(v) {
            return Err(Error::SiteOutsideBox(v.x, v.y));
        }
        Ok(if self.is_open(v) { -(1.0 - self.p) } else { self.p })
    }

    /// Dump in the `perc-cfg v1` text format: a one-line header followed by
    /// row-major 0/1 characters, one row per line. Round-trips bit-exactly.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "perc-cfg v1 {} {} {} {}",
            self.lattice,
            self.box_spec.radius(),
            self.p,
            self.seed
        )?;
        let side = self.box_spec.side() as usize;
        let mut row = String::with_capacity(side);
        for (i, v) in self.box_spec.iter().enumerate() {
            row.push(if self.is_open(v) { '1' } else { '0' });
            if (i + 1) % side == 0 {
                writeln!(w, "{row}")?;
                row.clear();
            }
        }
        Ok(())
    }

    pub fn parse<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty configuration dump".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != "perc-cfg" || fields[1] != "v1" {
            return Err(Error::Parse(format!("bad header {header:?}")));
        }
        let lattice: LatticeKind = fields[2].parse()?;
        let radius: i32 = fields[3]
            .parse()
            .map_err(|e| Error::Parse(format!("bad radius: {e}")))?;
        let p: f64 = fields[4]
            .parse()
            .map_err(|e| Error::Parse(format!("bad p: {e}")))?;
        let seed: u64 = fields[5]
            .parse()
            .map_err(|e| Error::Parse(format!("bad seed: {e}")))?;
        let box_spec = BoxSpec::new(radius)?;
        let mut cfg = Configuration::all_closed(lattice, box_spec, p);
        cfg.seed = seed;
        let side = box_spec.side() as usize;
        for row in 0..side {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {row}")))??;
            if line.len() != side {
                return Err(Error::Parse(format!(
                    "row {row} has {} characters, expected {side}",
                    line.len()
                )));
            }
            for (col, ch) in line.chars().enumerate() {
                let idx = row * side + col;
                match ch {
                    '1' => cfg.words[idx >> 6] |= 1u64 << (idx & 63),
                    '0' => {}
                    other => return Err(Error::Parse(format!("bad state char {other:?}"))),
                }
            }
        }
        Ok(cfg)
    }
}

/// A configuration plus a record of which sites have been queried.
///
/// Reads mark the accessed bit and never mutate states; this is the
/// revealment semantics the exploration process is audited against.
#[derive(Debug, Clone)]
pub struct TrackedConfiguration {
    inner: Configuration,
    accessed: Vec<u64>,
    accessed_count: usize,
}

impl TrackedConfiguration {
    pub fn new(inner: Configuration) -> Self {
        let n_words = inner.box_spec().site_count().div_ceil(64);
        TrackedConfiguration {
            inner,
            accessed: vec![0; n_words],
            accessed_count: 0,
        }
    }

    pub fn inner(&self) -> &Configuration {
        &self.inner
    }

    pub fn into_inner(self) -> Configuration {
        self.inner
    }

    /// Owner-side access to the wrapped configuration, for enumeration
    /// loops that rewrite states between runs. Reads through `read` are
    /// still the only thing that marks accesses.
    pub fn inner_mut(&mut self) -> &mut Configuration {
        &mut self.inner
    }

    /// Clear the access log, keeping the states.
    pub fn reset_accessed(&mut self) {
        for w in &mut self.accessed {
            *w = 0;
        }
        self.accessed_count = 0;
    }

    /// Query the state of `v`, marking it accessed.
    pub fn read(&mut self, v: Site) -> Color {
        let idx = self.inner.box_spec().index(v);
        let (w, b) = (idx >> 6, idx & 63);
        if (self.accessed[w] >> b) & 1 == 0 {
            self.accessed[w] |= 1u64 << b;
            self.accessed_count += 1;
        }
        if self.inner.is_open_idx(idx) {
            Color::Open
        } else {
            Color::Closed
        }
    }

    pub fn was_accessed(&self, v: Site) -> bool {
        let idx = self.inner.box_spec().index(v);
        (self.accessed[idx >> 6] >> (idx & 63)) & 1 == 1
    }

    pub fn accessed_count(&self) -> usize {
        self.accessed_count
    }

    /// Raw accessed bitmask, indexed like the configuration words.
    pub fn accessed_words(&self) -> &[u64] {
        &self.accessed
    }

    pub fn accessed_sites(&self) -> Vec<Site> {
        let b = self.inner.box_spec();
        (0..b.site_count())
            .filter(|&i| (self.accessed[i >> 6] >> (i & 63)) & 1 == 1)
            .map(|i| b.site_at(i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeKind::Square;

    fn b(n: i32) -> BoxSpec {
        BoxSpec::new(n).unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = Configuration::sample(Square, b(2), 0.6, 11, 3).unwrap();
        let c = Configuration::sample(Square, b(2), 0.6, 11, 3).unwrap();
        assert_eq!(a, c);
        let d = Configuration::sample(Square, b(2), 0.6, 11, 4).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn rejects_bad_p() {
        assert!(Configuration::sample(Square, b(1), -0.1, 0, 0).is_err());
        assert!(Configuration::sample(Square, b(1), 1.5, 0, 0).is_err());
        assert!(Configuration::sample(Square, b(1), f64::NAN, 0, 0).is_err());
    }

    #[test]
    fn empirical_open_fraction_matches_p() {
        // Binomial oracle: the observed fraction over 10^6 sites must sit
        // within four standard errors of p.
        let p = 0.37;
        let total: usize = 1_000_000;
        let box_spec = b(499); // 999*999 = 998001 sites
        let cfg = Configuration::sample(Square, box_spec, p, 2024, 0).unwrap();
        let mut open = cfg.open_count() as usize;
        let mut seen = box_spec.site_count();
        // Top up with a second stream to pass the 10^6 mark.
        let cfg2 = Configuration::sample(Square, b(30), p, 2024, 1).unwrap();
        open += cfg2.open_count() as usize;
        seen += cfg2.box_spec().site_count();
        assert!(seen >= total);
        let frac = open as f64 / seen as f64;
        let se = (p * (1.0 - p) / seen as f64).sqrt();
        assert!(
            (frac - p).abs() <= 4.0 * se,
            "fraction {frac} vs p {p} (4se = {})",
            4.0 * se
        );
    }

    #[test]
    fn flip_is_an_involution() {
        let cfg = Configuration::sample(Square, b(2), 0.5, 1, 0).unwrap();
        let v = Site::new(1, -2);
        let back = cfg.flip(v).unwrap().flip(v).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn flip_touches_exactly_one_site() {
        let cfg = Configuration::all_open(Square, b(2), 0.5);
        let flipped = cfg.flip(Site::new(0, 0)).unwrap();
        for v in b(2).iter() {
            if v == Site::new(0, 0) {
                assert!(!flipped.is_open(v));
            } else {
                assert!(flipped.is_open(v));
            }
        }
        assert!(cfg.flip(Site::new(3, 0)).is_err());
    }

    #[test]
    fn increment_values_at_half() {
        let cfg = Configuration::from_open_sites(Square, b(1), 0.5, &[Site::new(0, 0)]).unwrap();
        assert_eq!(cfg.increment_c(Site::new(0, 0)).unwrap(), -0.5);
        assert_eq!(cfg.increment_c(Site::new(1, 0)).unwrap(), 0.5);
    }

    #[test]
    fn increment_is_mean_zero_and_bounded() {
        for p in [0.1f64, 0.3, 0.5, 0.59274605, 0.9] {
            // E[C] = p * (-(1-p)) + (1-p) * p = 0 exactly.
            let open = -(1.0 - p);
            let closed = p;
            assert!((p * open + (1.0 - p) * closed).abs() < 1e-15);
            assert!(open.abs() <= 1.0 && closed.abs() <= 1.0);
        }
    }

    #[test]
    fn tracked_configuration_records_reads_exactly() {
        let cfg = Configuration::sample(Square, b(2), 0.5, 9, 0).unwrap();
        let snapshot = cfg.clone();
        let mut tracked = TrackedConfiguration::new(cfg);
        let queried = [Site::new(0, 0), Site::new(1, 1), Site::new(0, 0), Site::new(-2, 2)];
        for &v in &queried {
            let got = tracked.read(v);
            assert_eq!(got, snapshot.color(v));
        }
        let mut expect: Vec<Site> = vec![Site::new(0, 0), Site::new(1, 1), Site::new(-2, 2)];
        expect.sort();
        let mut got = tracked.accessed_sites();
        got.sort();
        assert_eq!(got, expect);
        assert_eq!(tracked.accessed_count(), 3);
        assert_eq!(tracked.inner(), &snapshot);
    }

    #[test]
    fn dump_round_trips() {
        let cfg = Configuration::sample(LatticeKind::Triangular, b(3), 0.59274605, 5, 77).unwrap();
        let mut buf = Vec::new();
        cfg.dump(&mut buf).unwrap();
        let parsed = Configuration::parse(&buf[..]).unwrap();
        assert_eq!(cfg, parsed);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("perc-cfg v1 triangular 3 0.59274605 77\n"));
    }

    #[test]
    fn degenerate_parameters_fill_deterministically() {
        let open = Configuration::sample(Square, b(2), 1.0, 3, 0).unwrap();
        assert_eq!(open.open_count() as usize, b(2).site_count());
        let closed = Configuration::sample(Square, b(2), 0.0, 3, 0).unwrap();
        assert_eq!(closed.open_count(), 0);
    }
}
