//! Exact enumeration over all configurations of a tiny box: exact
//! expectations for the correlator pipeline (C_j, Y_j, Z, pivotality) and
//! the identity/inequality chain they satisfy.
//!
//! Enumeration is by direct configuration index: the index IS the bit
//! pattern, the probability weight is a popcount lookup, and ranges of
//! indices partition deterministically across workers. Partial sums are
//! folded in fixed chunk order with compensated summation, so reports are
//! bit-identical for any worker count.

use rayon::prelude::*;

use crate::arm::{self, ArmSpec};
use crate::cluster::RegionCounter;
use crate::config::{Configuration, TrackedConfiguration};
use crate::error::{Error, Result};
use crate::explore;
use crate::lattice::{BoxSpec, Color, LatticeKind, Site};

/// Hard guard on the number of enumerated configurations.
pub const MAX_CONFIGS_LOG2: u32 = 25;

const CHUNK_LOG2: u32 = 15;

/// Parameters for one exact-enumeration run.
#[derive(Debug, Clone, Copy)]
pub struct EnumerateParams {
    /// Scale of the correlator pipeline: the box is `B_{2n}`.
    pub n: i32,
    pub p: f64,
    /// Radius of the varying sub-box. Sites outside it are frozen open.
    /// `2n` enumerates the full box.
    pub vary_radius: i32,
}

impl EnumerateParams {
    pub fn full(n: i32, p: f64) -> Self {
        EnumerateParams {
            n,
            p,
            vary_radius: 2 * n,
        }
    }
}

/// Exact expectations from one enumeration. Per-site tables run over the
/// varying sites (row-major); `core` marks the sites of `B_{n-1}`, the
/// pivotality list of the correlator chain.
#[derive(Debug, Clone)]
pub struct ExactReport {
    pub n: i32,
    pub p: f64,
    pub vary_radius: i32,
    pub configs: u64,
    pub sites: Vec<Site>,
    pub core: Vec<bool>,
    pub e_y: Vec<f64>,
    pub e_cy: Vec<f64>,
    pub e_zcy: Vec<f64>,
    pub e_zc_piv: Vec<f64>,
    pub p_piv: Vec<f64>,
    /// Row-major S x S table of E[(C_i Y_i)(C_j Y_j)].
    pub pairwise_cy: Vec<f64>,
    pub e_z: f64,
    pub e_z2: f64,
    pub e_sqrt_z: f64,
    /// Exact arm probabilities at the enumeration scale: pi_k(k~, 2n).
    pub pi1: f64,
    pub pi2: f64,
    pub pi4: f64,
    /// Color-matched four-arm probability at the origin to radius 2n, the
    /// exact lower-bound event for pivotality of the origin.
    pub pi4_matched: f64,
    pub z_explore_mismatches: u64,
    pub monotonicity_violations: u64,
    pub pivotal_without_visit: u64,
}

struct Partial {
    e_y: Vec<f64>,
    e_cy: Vec<f64>,
    e_zcy: Vec<f64>,
    e_zc_piv: Vec<f64>,
    p_piv: Vec<f64>,
    pairwise: Vec<f64>,
    e_z: f64,
    e_z2: f64,
    e_sqrt_z: f64,
    pi1: f64,
    pi2: f64,
    pi4: f64,
    pi4_matched: f64,
    mismatches: u64,
    monotonicity: u64,
    piv_unvisited: u64,
}

impl Partial {
    fn zero(s: usize) -> Self {
        Partial {
            e_y: vec![0.0; s],
            e_cy: vec![0.0; s],
            e_zcy: vec![0.0; s],
            e_zc_piv: vec![0.0; s],
            p_piv: vec![0.0; s],
            pairwise: vec![0.0; s * s],
            e_z: 0.0,
            e_z2: 0.0,
            e_sqrt_z: 0.0,
            pi1: 0.0,
            pi2: 0.0,
            pi4: 0.0,
            pi4_matched: 0.0,
            mismatches: 0,
            monotonicity: 0,
            piv_unvisited: 0,
        }
    }
}

#[inline]
fn neumaier_add(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

struct NeumaierVec {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl NeumaierVec {
    fn zero(len: usize) -> Self {
        NeumaierVec {
            sum: vec![0.0; len],
            comp: vec![0.0; len],
        }
    }

    fn add_slice(&mut self, xs: &[f64]) {
        for (i, &x) in xs.iter().enumerate() {
            neumaier_add(&mut self.sum[i], &mut self.comp[i], x);
        }
    }

    fn finish(self) -> Vec<f64> {
        self.sum
            .into_iter()
            .zip(self.comp)
            .map(|(s, c)| s + c)
            .collect()
    }
}

/// Exact enumeration of the correlator pipeline on `B_{2n}`.
pub fn enumerate(params: EnumerateParams) -> Result<ExactReport> {
    let n = params.n;
    if n < 1 {
        return Err(Error::invalid("enumeration needs n >= 1"));
    }
    if !(0.0..=1.0).contains(&params.p) {
        return Err(Error::invalid("p must lie in [0, 1]"));
    }
    if params.vary_radius < n || params.vary_radius > 2 * n {
        return Err(Error::invalid(format!(
            "vary radius must lie in [n, 2n], got {}",
            params.vary_radius
        )));
    }
    let box_spec = BoxSpec::new(2 * n)?;
    let vary_box = BoxSpec::new(params.vary_radius)?;
    let vary_count = vary_box.site_count();
    if vary_count as u32 > MAX_CONFIGS_LOG2 {
        return Err(Error::EnumerationGuard(
            1u64 << vary_count.min(63),
            1u64 << MAX_CONFIGS_LOG2,
        ));
    }
    let total: u64 = 1u64 << vary_count;

    let sites: Vec<Site> = vary_box.iter().collect();
    let core: Vec<bool> = sites.iter().map(|v| v.norm() <= n - 1).collect();
    let s = sites.len();
    let p = params.p;

    // Weight lookup: p^k (1-p)^(V-k) by open count among varying sites.
    // Frozen sites are deterministic and carry no weight.
    let weights: Vec<f64> = (0..=vary_count as i32)
        .map(|k| p.powi(k) * (1.0 - p).powi(vary_count as i32 - k))
        .collect();
    let sqrt_table: Vec<f64> = (0..=(8 * n + 1) as usize)
        .map(|z| (z as f64).sqrt())
        .collect();

    // Base configuration: frozen complement open, varying sites cleared.
    let base = {
        let frozen_open: Vec<Site> = box_spec
            .iter()
            .filter(|v| v.norm() > params.vary_radius)
            .collect();
        Configuration::from_open_sites(LatticeKind::Square, box_spec, p, &frozen_open)?
    };
    let vary_sites: Vec<Site> = sites.clone();
    let spec1 = ArmSpec::standard(1, 2 * n)?;
    let spec2 = ArmSpec::standard(2, 2 * n)?;
    let spec4 = ArmSpec::standard(4, 2 * n)?;

    let chunk_size: u64 = 1u64 << CHUNK_LOG2;
    let chunks: u64 = total.div_ceil(chunk_size);

    let partials: Vec<Partial> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * chunk_size;
            let hi = (lo + chunk_size).min(total);
            let mut acc = Partial::zero(s);
            let mut counter = RegionCounter::new();
            let mut work = base.clone();
            let mut applied: u64 = 0;
            let mut c_val = vec![0.0f64; s];
            let mut y_val = vec![false; s];
            let mut visited_idx: Vec<u32> = Vec::with_capacity(s);
            for index in lo..hi {
                // Toggle only the bits that differ from the previous index.
                let diff = applied ^ index;
                for j in 0..vary_count {
                    if diff >> j & 1 == 1 {
                        work.toggle(vary_sites[j]);
                    }
                }
                applied = index;
                let w = weights[index.count_ones() as usize];
                step_config(
                    &work,
                    w,
                    n,
                    &vary_sites,
                    core.as_slice(),
                    &mut counter,
                    (&spec1, &spec2, &spec4),
                    &sqrt_table,
                    &mut c_val,
                    &mut y_val,
                    &mut visited_idx,
                    &mut acc,
                );
            }
            acc
        })
        .collect();

    // Ordered fold with compensation.
    let mut e_y = NeumaierVec::zero(s);
    let mut e_cy = NeumaierVec::zero(s);
    let mut e_zcy = NeumaierVec::zero(s);
    let mut e_zc_piv = NeumaierVec::zero(s);
    let mut p_piv = NeumaierVec::zero(s);
    let mut pairwise = NeumaierVec::zero(s * s);
    let mut scalars = NeumaierVec::zero(7);
    let mut mismatches = 0u64;
    let mut monotonicity = 0u64;
    let mut piv_unvisited = 0u64;
    for part in &partials {
        e_y.add_slice(&part.e_y);
        e_cy.add_slice(&part.e_cy);
        e_zcy.add_slice(&part.e_zcy);
        e_zc_piv.add_slice(&part.e_zc_piv);
        p_piv.add_slice(&part.p_piv);
        pairwise.add_slice(&part.pairwise);
        scalars.add_slice(&[
            part.e_z,
            part.e_z2,
            part.e_sqrt_z,
            part.pi1,
            part.pi2,
            part.pi4,
            part.pi4_matched,
        ]);
        mismatches += part.mismatches;
        monotonicity += part.monotonicity;
        piv_unvisited += part.piv_unvisited;
    }
    let scalars = scalars.finish();

    Ok(ExactReport {
        n,
        p,
        vary_radius: params.vary_radius,
        configs: total,
        sites,
        core,
        e_y: e_y.finish(),
        e_cy: e_cy.finish(),
        e_zcy: e_zcy.finish(),
        e_zc_piv: e_zc_piv.finish(),
        p_piv: p_piv.finish(),
        pairwise_cy: pairwise.finish(),
        e_z: scalars[0],
        e_z2: scalars[1],
        e_sqrt_z: scalars[2],
        pi1: scalars[3],
        pi2: scalars[4],
        pi4: scalars[5],
        pi4_matched: scalars[6],
        z_explore_mismatches: mismatches,
        monotonicity_violations: monotonicity,
        pivotal_without_visit: piv_unvisited,
    })
}

fn step_config(
    work: &Configuration,
    w: f64,
    n: i32,
    sites: &[Site],
    core: &[bool],
    counter: &mut RegionCounter,
    specs: (&ArmSpec, &ArmSpec, &ArmSpec),
    sqrt_table: &[f64],
    c_val: &mut [f64],
    y_val: &mut [bool],
    visited_idx: &mut Vec<u32>,
    acc: &mut Partial,
) {
    let p = work.p();
    // Exploration: adaptive revelation determines Z and the Y vector.
    let mut tracked = TrackedConfiguration::new(work.clone());
    let z_explored = explore::explore_z(&mut tracked, n).expect("enumeration box is valid");
    let z = counter.crossing_clusters(work, n, 2 * n, Color::Open);
    if z != z_explored {
        acc.mismatches += 1;
    }
    let zf = z as f64;

    visited_idx.clear();
    for (j, &v) in sites.iter().enumerate() {
        let open = work.is_open(v);
        c_val[j] = if open { -(1.0 - p) } else { p };
        let y = tracked.was_accessed(v);
        y_val[j] = y;
        if y {
            visited_idx.push(j as u32);
        }
    }

    // Per-site pivotality by flip and recount.
    let mut flip_work = work.clone();
    for (j, &v) in sites.iter().enumerate() {
        flip_work.toggle(v);
        let z_flip = counter.crossing_clusters(&flip_work, n, 2 * n, Color::Open);
        flip_work.toggle(v);
        let pivotal = z_flip != z;
        if pivotal {
            acc.p_piv[j] += w;
            acc.e_zc_piv[j] += w * zf * c_val[j];
            if !y_val[j] {
                acc.piv_unvisited += 1;
            }
        }
        if core[j] && work.is_open(v) && z_flip < z {
            acc.monotonicity += 1;
        }
    }

    for &j in visited_idx.iter() {
        let j = j as usize;
        let cy = c_val[j];
        acc.e_y[j] += w;
        acc.e_cy[j] += w * cy;
        acc.e_zcy[j] += w * zf * cy;
    }
    let s = sites.len();
    for &i in visited_idx.iter() {
        let i = i as usize;
        let wi = w * c_val[i];
        for &j in visited_idx.iter() {
            let j = j as usize;
            acc.pairwise[i * s + j] += wi * c_val[j];
        }
    }

    acc.e_z += w * zf;
    acc.e_z2 += w * zf * zf;
    acc.e_sqrt_z += w * sqrt_table[z as usize];
    let (spec1, spec2, spec4) = specs;
    if arm::arm_event_with(counter, work, spec1) {
        acc.pi1 += w;
    }
    if arm::arm_event_with(counter, work, spec2) {
        acc.pi2 += w;
    }
    if arm::arm_event_with(counter, work, spec4) {
        acc.pi4 += w;
    }
    if arm::four_arm_at_site_with(counter, work, Site::new(0, 0), 2 * n)
        .expect("annulus fits the enumeration box")
    {
        acc.pi4_matched += w;
    }
}

/// One identity or inequality of the verification chain.
#[derive(Debug, Clone)]
pub struct ChainCheck {
    pub identity: String,
    pub pass: bool,
    pub residual: f64,
}

/// Residual tolerance for the exact identities.
pub const CHAIN_TOLERANCE: f64 = 1e-10;

fn check(identity: &str, residual: f64) -> ChainCheck {
    ChainCheck {
        identity: identity.to_string(),
        pass: residual <= CHAIN_TOLERANCE,
        residual,
    }
}

/// Verify every identity and inequality of the correlator chain against an
/// exact report. Residuals are maximal absolute deviations (identities) or
/// maximal violations (inequalities); invariant-violation counts enter
/// as-is.
pub fn verify_chain(report: &ExactReport) -> Vec<ChainCheck> {
    let s = report.sites.len();
    let p = report.p;
    let mut checks = Vec::new();

    let max_cy = report.e_cy.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    checks.push(check("E[CjYj] = 0 for every site", max_cy));

    let mut max_pair = 0.0f64;
    for i in 0..s {
        for j in 0..s {
            if i != j {
                max_pair = max_pair.max(report.pairwise_cy[i * s + j].abs());
            }
        }
    }
    checks.push(check("E[(CiYi)(CjYj)] = 0 for i != j", max_pair));

    let max_decomp = report
        .e_zcy
        .iter()
        .zip(&report.e_zc_piv)
        .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()));
    checks.push(check(
        "E[ZCjYj] = E[ZCj 1{pivotal}] for every site",
        max_decomp,
    ));

    let mut worst_lower = 0.0f64;
    for j in 0..s {
        if report.core[j] {
            let lhs = report.e_zcy[j];
            let rhs = p * (1.0 - p) * report.p_piv[j];
            worst_lower = worst_lower.max(rhs - lhs);
        }
    }
    checks.push(check(
        "E[ZCjYj] >= p(1-p) P(pivotal) on interior sites",
        worst_lower.max(0.0),
    ));

    let origin_idx = report
        .sites
        .iter()
        .position(|&v| v == Site::new(0, 0))
        .expect("origin is always a varying site");
    let piv_origin = report.p_piv[origin_idx];
    checks.push(check(
        "P(origin pivotal) >= pi4 at the matched radius",
        (report.pi4_matched - piv_origin).max(0.0),
    ));

    let lhs: f64 = report
        .e_zcy
        .iter()
        .zip(&report.core)
        .filter(|(_, &c)| c)
        .map(|(&x, _)| x)
        .sum();
    let sum_y: f64 = report
        .e_y
        .iter()
        .zip(&report.core)
        .filter(|(_, &c)| c)
        .map(|(&x, _)| x)
        .sum();
    let rhs = (report.e_z2 * sum_y).sqrt();
    checks.push(check(
        "sum_j E[ZCjYj] <= sqrt(E[Z^2] sum_j E[Yj]) over interior sites",
        (lhs - rhs).max(0.0),
    ));

    checks.push(check(
        "closing an open interior site never decreases Z",
        report.monotonicity_violations as f64,
    ));
    checks.push(check(
        "exploration Z equals union-find Z",
        report.z_explore_mismatches as f64,
    ));
    checks.push(check(
        "pivotal sites are always explored",
        report.pivotal_without_visit as f64,
    ));
    checks
}

/// Exact probability of an arbitrary event on the configurations of
/// `B_{n2}`, by full enumeration (guarded).
pub fn exact_event_probability(
    lattice: LatticeKind,
    n2: i32,
    p: f64,
    event: impl Fn(&Configuration) -> bool + Sync,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p must lie in [0, 1]"));
    }
    let box_spec = BoxSpec::new(n2)?;
    let count = box_spec.site_count();
    if count as u32 > MAX_CONFIGS_LOG2 {
        return Err(Error::EnumerationGuard(
            1u64 << count.min(63),
            1u64 << MAX_CONFIGS_LOG2,
        ));
    }
    let total: u64 = 1u64 << count;
    let weights: Vec<f64> = (0..=count as i32)
        .map(|k| p.powi(k) * (1.0 - p).powi(count as i32 - k))
        .collect();
    let chunk_size: u64 = 1u64 << CHUNK_LOG2;
    let chunks = total.div_ceil(chunk_size);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * chunk_size;
            let hi = (lo + chunk_size).min(total);
            let mut cfg = Configuration::all_closed(lattice, box_spec, p);
            let mut acc = 0.0;
            for index in lo..hi {
                cfg.set_bits_from_u64(index);
                if event(&cfg) {
                    acc += weights[index.count_ones() as usize];
                }
            }
            acc
        })
        .collect();
    let (mut sum, mut comp) = (0.0, 0.0);
    for part in partials {
        neumaier_add(&mut sum, &mut comp, part);
    }
    Ok(sum + comp)
}

/// Exact arm probability `pi_k(n1, n2)` at parameter `p` by enumeration.
pub fn exact_pi(lattice: LatticeKind, n1: i32, n2: i32, k: u8, p: f64) -> Result<f64> {
    let spec = ArmSpec::new(k, n1, n2)?;
    exact_event_probability(lattice, n2, p, move |cfg| {
        arm::arm_event_with(&mut RegionCounter::new(), cfg, &spec)
    })
}
