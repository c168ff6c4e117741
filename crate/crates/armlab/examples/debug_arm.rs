use armlab::arm::*;
use armlab::cluster::*;
use armlab::config::Configuration;
use armlab::lattice::*;

fn main() {
    let b3 = BoxSpec::new(3).unwrap();
    let cfg = Configuration::sample(LatticeKind::Triangular, b3, 0.5, 101, 7).unwrap();
    let mut out = Vec::new();
    cfg.dump(&mut out).unwrap();
    print!("{}", String::from_utf8(out).unwrap());
    let spec = ArmSpec::new(4, 1, 3).unwrap();
    println!("detector: {}", arm_event(&cfg, &spec).unwrap());
    println!("oracle:   {}", arm_event_oracle(&cfg, &spec).unwrap());
    println!("open annulus crossings:   {}", count_annulus_crossing_clusters(&cfg, 1, 3, Color::Open).unwrap());
    println!("closed annulus crossings: {}", count_annulus_crossing_clusters(&cfg, 1, 3, Color::Closed).unwrap());
    // visualize with coordinates: print grid y from +3 down to -3
    for y in (-3..=3).rev() {
        let mut row = String::new();
        for x in -3..=3 {
            let v = Site::new(x, y);
            row.push(if v.norm() < 1 { '.' } else if cfg.is_open(v) { 'X' } else { 'o' });
        }
        println!("y={:+} {}", y, row);
    }
}
