//! Acceptance run: every criterion for every system, one line each.
//! Exits nonzero if any criterion does not pass.

use std::path::Path;
use std::process::Command;

use focustwist::acceptance::{self, CriterionReport};
use focustwist::config::RunConfig;

type Criterion = fn(&dyn focustwist_core::systems::IntegrableSystem, &RunConfig) -> CriterionReport;

const CRITERIA: [Criterion; 9] = [
    acceptance::cross_engine,
    acceptance::monodromy,
    acceptance::period_asymptotics,
    acceptance::rotation_form,
    acceptance::spiral,
    acceptance::vanishing_twist,
    acceptance::tilde_s_asymptotics,
    acceptance::kolmogorov,
    acceptance::determinism,
];

fn config(system: &str, gamma: Option<&str>) -> RunConfig {
    let mut c = RunConfig::default();
    c.set("system", system).unwrap();
    if let Some(g) = gamma {
        c.set("gamma", g).unwrap();
    }
    c.set("jobs", "4").unwrap();
    c.resolve().unwrap()
}

fn grid_bytes(dir: &Path, jobs: &str) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_focustwist"))
        .args(["grid", "--system", "champagne", "--res", "9,32", "--jobs", jobs, "--out"])
        .arg(dir)
        .output()
        .expect("running the binary");
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(dir.join("grid.csv")).unwrap()
}

fn main() {
    let systems = [config("champagne", Some("0.5")), config("champagne", Some("0")), config("pendulum", None)];
    let mut failed = 0;
    for cfg in &systems {
        let sys = cfg.build_system().unwrap();
        for criterion in CRITERIA {
            let r = criterion(&*sys, cfg);
            if !r.status.ok() {
                failed += 1;
            }
            println!("criterion {} ({}) [{}]: {}  {}", r.id, r.name, r.system, r.status.label(), r.measured);
        }
    }

    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let one = grid_bytes(dirs[0].path(), "1");
    let many = grid_bytes(dirs[1].path(), "4");
    let same = one == many && !one.is_empty();
    if !same {
        failed += 1;
    }
    println!("criterion 9 (determinism, binary) [champagne gamma=0.5]: {}  {} bytes", if same { "PASS" } else { "FAIL" }, one.len());

    if failed > 0 {
        println!("{failed} criterion checks failed");
        std::process::exit(1);
    }
    println!("all criteria pass");
}
