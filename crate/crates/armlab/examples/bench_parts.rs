use armlab::arm::{self, ArmSpec};
use armlab::cluster::*;
use armlab::config::{Configuration, TrackedConfiguration};
use armlab::explore;
use armlab::lattice::*;
use std::time::Instant;

fn main() {
    let b2 = BoxSpec::new(2).unwrap();
    let n_iter = 200_000u64;

    let mut cfg = Configuration::all_closed(LatticeKind::Square, b2, 0.5);

    let t = Instant::now();
    let mut acc = 0u32;
    for i in 0..n_iter {
        cfg.set_bits_from_u64(i.wrapping_mul(0x9E3779B97F4A7C15) & ((1<<25)-1));
        acc += count_crossing_clusters(&cfg, 1, 2, Color::Open).unwrap().z;
    }
    println!("count_crossing (alloc): {:?}/call  acc={acc}", t.elapsed() / n_iter as u32);

    let t = Instant::now();
    let mut acc2 = 0u32;
    for i in 0..n_iter {
        cfg.set_bits_from_u64(i.wrapping_mul(0x9E3779B97F4A7C15) & ((1<<25)-1));
        let mut tracked = TrackedConfiguration::new(cfg.clone());
        acc2 += explore::explore_z(&mut tracked, 1).unwrap();
    }
    println!("explore_z: {:?}/call acc={acc2}", t.elapsed() / n_iter as u32);

    let spec4 = ArmSpec::standard(4, 2).unwrap();
    let t = Instant::now();
    let mut acc3 = 0u32;
    for i in 0..n_iter {
        cfg.set_bits_from_u64(i.wrapping_mul(0x9E3779B97F4A7C15) & ((1<<25)-1));
        acc3 += arm::arm_event(&cfg, &spec4).unwrap() as u32;
    }
    println!("arm_event k4: {:?}/call acc={acc3}", t.elapsed() / n_iter as u32);

    let t = Instant::now();
    let mut acc4 = 0u32;
    for i in 0..n_iter {
        cfg.set_bits_from_u64(i.wrapping_mul(0x9E3779B97F4A7C15) & ((1<<25)-1));
        acc4 += arm::four_arm_at_site(&cfg, Site::new(0,0), 2).unwrap() as u32;
    }
    println!("four_arm: {:?}/call acc={acc4}", t.elapsed() / n_iter as u32);
}
