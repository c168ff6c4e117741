use armlab::oracle::{enumerate, verify_chain, EnumerateParams};

fn main() {
    let t0 = std::time::Instant::now();
    let report = enumerate(EnumerateParams::full(1, 0.5)).unwrap();
    println!("full n=1 enumeration: {:?}", t0.elapsed());
    println!("configs: {}", report.configs);
    println!("E[Z] = {}", report.e_z);
    println!("E[Z^2] = {}", report.e_z2);
    println!("pi1 = {}, pi2 = {}, pi4 = {}, pi4_matched = {}", report.pi1, report.pi2, report.pi4, report.pi4_matched);
    for c in verify_chain(&report) {
        println!("{} -> {} (residual {:.3e})", c.identity, if c.pass {"PASS"} else {"FAIL"}, c.residual);
    }
}
