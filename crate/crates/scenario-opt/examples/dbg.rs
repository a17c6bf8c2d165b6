use scenario_opt::sample_size::*;
fn main() {
    let eps_opts = [("3.57e-3", 3.57e-3), ("5e-4/0.14", 5e-4/0.14), ("3.55e-3", 3.55e-3), ("3.5e-3", 3.5e-3)];
    let beta_opts = [("0.002", 0.002), ("0.001", 0.001), ("0.0025", 0.0025), ("0.01", 0.01), ("0.002/5", 0.0004)];
    for n in [54u64, 55, 56] {
        for (en, e) in eps_opts {
            for (bn, b) in beta_opts {
                let v = sample_size(e, b, n).unwrap();
                if (v as i64 - 22618).abs() < 30 {
                    println!("HIT n={n} eps={en} beta={bn} -> {v}");
                }
            }
        }
    }
}
