//! Generate a synthetic bundle, write it with its manifest, load it back
//! (which verifies every hash) and show what tampering does.
//!
//! cargo run --example generate_bundle [dir]

use std::path::PathBuf;

use cadet_branching::io::{generate, load_bundle, GeneratorConfig, BRANCHES};

fn main() -> cadet_branching::Result<()> {
    let dir: PathBuf = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("branching-demo"));
    let config = GeneratorConfig {
        cadets: 200,
        branches: 6,
        willingness_rate: 0.3,
        seed: 7,
        ..GeneratorConfig::default()
    };
    let g = generate(&config)?;
    g.bundle.write(&dir)?;
    println!("wrote {} files to {}", g.bundle.all_files().len(), dir.display());

    let loaded = load_bundle(&dir)?;
    let m = loaded.manifest.expect("generated bundles carry a manifest");
    for (b, counts) in m.tier_counts.unwrap_or_default() {
        println!("  {b}: tiers {counts:?}");
    }

    let p = dir.join(BRANCHES);
    let text = std::fs::read_to_string(&p).unwrap();
    std::fs::write(&p, text.replacen(",", ";", 2)).unwrap();
    match load_bundle(&dir) {
        Err(e) => println!("after editing {BRANCHES}: {e}"),
        Ok(_) => println!("tampering went unnoticed"),
    }
    g.bundle.write(&dir)?;
    Ok(())
}
