//! Resolving a named preset and running it through the CLI layer.

use jcwave::cli::{self, resolve, Overrides};

fn main() -> jcwave::Result<()> {
    let (mut cfg, stem) = resolve(&Overrides { preset: Some("fig2b".into()), plot: true, ..Default::default() })?;
    cfg.tau.start = -1.0;
    cfg.tau.end = 1.0;
    let dir = std::env::temp_dir().join("jcwave-example");
    let out = cli::run(&cfg, &dir, &stem)?;
    println!("{}", serde_json::to_string_pretty(&out.summary).unwrap());
    for a in out.artifacts {
        println!("wrote {}", a.display());
    }
    Ok(())
}
