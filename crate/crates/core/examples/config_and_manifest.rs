//! Layered configuration (TOML, then CHAOWORK_* environment overrides) and
//! the output directory every command writes: CSVs and JSON tagged with the
//! manifest hash, plus manifest.json.
//!
//! `cargo run --release --example config_and_manifest`

use chaowork::config::load_config;
use chaowork::output::Output;
use chaowork::study::Study;

fn main() -> chaowork::Result<()> {
    let toml = r#"
        betas = [0.0009765625]
        hbars = [1.0]
        half_len = 256
        pilot_samples = 20000
    "#;
    let env = vec![("CHAOWORK_SEED".to_string(), "7".to_string())];
    let cfg = load_config(toml, env)?;
    println!("seed {} (from the environment), config hash {}", cfg.seed, cfg.hash());

    match chaowork::config::validate_config("betas = [-1.0]") {
        Err(e) => println!("rejected as expected: {e}"),
        Ok(_) => println!("unexpectedly accepted"),
    }

    let dir = std::env::temp_dir().join("chaowork-example");
    let mut out = Output::create(&dir, &cfg, "example")?;
    let study = Study::from_config(&cfg)?;
    let run = study.classical(cfg.betas[0], 100_000)?;
    out.histogram("classical.csv", &run.hist)?;
    out.json("summary.json", &serde_json::json!({ "mean_w": run.sample.mean() }))?;
    let manifest = out.finish()?;
    println!(
        "wrote {:?} to {}, manifest hash {}",
        manifest.files,
        dir.display(),
        manifest.manifest_hash
    );
    Ok(())
}
