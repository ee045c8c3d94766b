//! Full staged run for one configuration, written to `out/example`.
use conelab::config::RunConfig;
use conelab::pipeline::run_pipeline;

fn main() -> conelab::Result<()> {
    let mut cfg = RunConfig::new(4, 4);
    cfg.eps = Some(0.05);
    cfg.out = "out/example".into();
    let report = run_pipeline(cfg)?;
    for c in &report.checks {
        println!("{} {}/{} = {:.4e} ({})", if c.passed { "PASS" } else { "FAIL" }, c.stage, c.name, c.value, c.tolerance);
    }
    for f in &report.files {
        println!("{}  {}", f.sha256, f.path.display());
    }
    println!("all checks passed: {}", report.passed);
    Ok(())
}
