//! Builds the (1024, 128) code and its punctured (974, 128) variant and
//! prints sizes, fingerprints and the least reliable channels.
//!
//! cargo run --example construct_code

use polarpuf::construction::{bhattacharyya_profile, CodeSpec, ConstructParams};

fn main() -> polarpuf::Result<()> {
    let profile = bhattacharyya_profile(10, 0.15)?;
    let mut order: Vec<usize> = (0..1024).collect();
    order.sort_by(|&a, &b| profile.z()[b].total_cmp(&profile.z()[a]));
    println!("worst synthetic channels at p = 0.15:");
    for &i in &order[..5] {
        println!("  u_{:<4} Z = {:.6}", i + 1, profile.z()[i]);
    }
    println!("best: u_{} Z = {:.3e}", order[1023] + 1, profile.z()[order[1023]]);

    for m in [0, 50] {
        let spec = CodeSpec::construct(ConstructParams::new(1024, 128).design_p(0.15).puncture(m))?;
        println!(
            "\nN={} K={} m={m}: PUF bits {}, helper bits {}, fingerprint {}",
            spec.block_len(),
            spec.key_len(),
            spec.puf_len(),
            spec.helper_len(),
            spec.fingerprint()
        );
        let info = spec.info().as_slice();
        println!("last information indices: {:?}", &info[info.len() - 6..]);
    }
    Ok(())
}
