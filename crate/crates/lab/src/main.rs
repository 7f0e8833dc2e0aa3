use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use cvbattery_lab::config::parse_config;
use cvbattery_lab::output::write_all;
use cvbattery_lab::{run, LabError, LabResult, RawSettings};

/// Runs one experiment and writes its table, manifest and plot script.
#[derive(Debug, Parser)]
#[command(name = "cvlab", version)]
struct Cli {
    /// fig2a..fig2d, fig3a..fig3d, fig4a..fig4d, oracle-check or appendixC
    #[arg(long)]
    experiment: Option<String>,
    /// Squeezing strength(s), comma separated
    #[arg(long)]
    r: Option<String>,
    /// Charging energy (energies), comma separated
    #[arg(long = "delta-e")]
    delta_e: Option<String>,
    /// Mode numbers, e.g. `2,3,5` or `2..10`
    #[arg(long)]
    modes: Option<String>,
    /// squeeze, displace or global-squeeze
    #[arg(long)]
    charger: Option<String>,
    /// Fix the (first) transmittivity
    #[arg(long)]
    tau: Option<String>,
    /// Fix the second transmittivity of the three-mode family
    #[arg(long)]
    tau2: Option<String>,
    /// Points per transmittivity axis
    #[arg(long)]
    grid: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    /// Largest Fock cutoff tried by the oracle
    #[arg(long)]
    cutoff: Option<String>,
    /// Seed for randomly drawn oracle cases, decimal or `0x` hex
    #[arg(long)]
    seed: Option<String>,
    /// Relative tolerance of engine/oracle comparisons
    #[arg(long)]
    tol: Option<String>,
    /// Configuration file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Cli {
    fn settings(&self) -> LabResult<RawSettings> {
        let mut raw = RawSettings::default();
        let pairs = [
            ("experiment", &self.experiment),
            ("r", &self.r),
            ("delta_e", &self.delta_e),
            ("modes", &self.modes),
            ("charger", &self.charger),
            ("tau", &self.tau),
            ("tau2", &self.tau2),
            ("points", &self.grid),
            ("dir", &self.out),
            ("format", &self.format),
            ("cutoff", &self.cutoff),
            ("seed", &self.seed),
            ("tol", &self.tol),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                raw.set(key, v)
                    .map_err(|e| LabError::Usage(format!("--{}: {e}", flag(key))))?;
            }
        }
        Ok(raw)
    }
}

fn flag(key: &str) -> &str {
    match key {
        "delta_e" => "delta-e",
        "points" => "grid",
        "dir" => "out",
        k => k,
    }
}

fn execute(cli: &Cli) -> LabResult<i32> {
    let file = match &cli.config {
        Some(p) => parse_config(&std::fs::read_to_string(p)?)?,
        None => RawSettings::default(),
    };
    let spec = file.merge(cli.settings()?).resolve()?;
    let artifacts = run(&spec)?;
    let written = write_all(&spec, &artifacts.table, &artifacts.manifest)?;
    println!("data      {}", written.data.display());
    println!("manifest  {}", written.manifest.display());
    if let Some(p) = written.plot {
        println!("plot      {}", p.display());
    }
    for c in artifacts
        .manifest
        .checks
        .iter()
        .filter(|c| c.gating && !c.passed)
    {
        eprintln!("check failed: {} ({} > {})", c.name, c.value, c.threshold);
    }
    for d in &artifacts.manifest.discrepancies {
        eprintln!("discrepancy: {}", d.id);
    }
    println!("status    {}", artifacts.status.as_str());
    Ok(artifacts.status.exit_code())
}

/// Parses `args` (program name first), runs the experiment and returns the
/// process exit code.
fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            return if ok { 0 } else { 1 };
        }
    };
    match execute(&cli) {
        Ok(code) => code as u8,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run_cli(std::env::args_os()))
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use super::*;

    fn cvlab(args: &[&str]) -> u8 {
        run_cli(std::iter::once("cvlab").chain(args.iter().copied()))
    }

    fn path(p: &Path) -> &str {
        p.to_str().unwrap()
    }

    fn manifest(path: &Path) -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    #[test]
    fn help_and_usage_errors() {
        assert_eq!(cvlab(&["--help"]), 0);
        assert_eq!(cvlab(&["--experiment", "fig9"]), 1);
        assert_eq!(cvlab(&["--bogus"]), 1);
        assert_eq!(cvlab(&[]), 1);
        assert_eq!(cvlab(&["--experiment", "fig2a", "--tau", "2"]), 1);
        let cli = Cli::try_parse_from(["cvlab", "--experiment", "fig2a", "--tau", "2"]).unwrap();
        let err = execute(&cli).unwrap_err();
        assert!(err.to_string().contains("tau"), "{err}");
    }

    #[test]
    fn two_mode_panel_writes_table_manifest_and_script() {
        let dir = tempfile::tempdir().unwrap();
        let run = dir.path().join("run");
        let code = cvlab(&[
            "--experiment",
            "fig2a",
            "--grid",
            "3",
            "--r",
            "1",
            "--delta-e",
            "10",
            "--out",
            path(&run),
        ]);
        assert_eq!(code, 0);
        let csv = std::fs::read_to_string(run.join("fig2a.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "r,delta_e,charger,tau,delta_sigma_min,theta1_opt,theta2_opt,stationarity,converged"
        );
        for line in lines {
            assert!(line.starts_with("1,10,squeeze,"));
            assert!(line.contains(",10.0989557879,"));
        }
        let m = manifest(&run.join("fig2a.manifest.json"));
        assert_eq!(m["experiment"], "fig2a");
        assert_eq!(m["seed"], 0x5eed);
        assert_eq!(m["status"], "ok");
        assert!(m["timestamp"].as_u64().unwrap() > 0);
        assert!(m["tolerances"]["flatness"].as_f64().unwrap() > 0.0);
        assert!(m["discrepancies"].as_array().unwrap().is_empty());
        let gp = std::fs::read_to_string(run.join("fig2a.gp")).unwrap();
        assert!(gp.contains("'fig2a.csv'"));
    }

    #[test]
    fn contradicted_claims_become_discrepancies() {
        let dir = tempfile::tempdir().unwrap();
        let code = cvlab(&[
            "--experiment",
            "fig2b",
            "--grid",
            "2",
            "--r",
            "1",
            "--delta-e",
            "10",
            "--out",
            path(dir.path()),
        ]);
        assert_eq!(code, 0);
        let m = manifest(&dir.path().join("fig2b.manifest.json"));
        let d = m["discrepancies"].as_array().unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0]["id"], "fig2b.tau0-phases");
        assert_eq!(m["claims"][0]["holds"], false);
    }

    #[test]
    fn config_file_with_flag_override() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("cfg");
        let ini = dir.path().join("run.ini");
        std::fs::write(
            &ini,
            format!(
                "[run]\nexperiment = fig4d\n[battery]\nmodes = 2..4\n[output]\ndir = {}\nformat = csv\n",
                path(&cfg)
            ),
        )
        .unwrap();
        assert_eq!(cvlab(&["--config", path(&ini), "--format", "json"]), 0);
        let table: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(cfg.join("fig4d.json")).unwrap())
                .unwrap();
        assert_eq!(table["rows"].as_array().unwrap().len(), 6);
        assert_eq!(table["rows"][0][4], 0.822603437984);
        assert!(!cfg.join("fig4d.gp").exists());
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        for out in ["a", "b"] {
            let out = dir.path().join(out);
            assert_eq!(
                cvlab(&["--experiment", "fig3b", "--grid", "4", "--out", path(&out)]),
                0
            );
        }
        let a = std::fs::read(dir.path().join("a/fig3b.csv")).unwrap();
        let b = std::fs::read(dir.path().join("b/fig3b.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oracle_disagreement_beyond_tolerance_exits_two() {
        let dir = tempfile::tempdir().unwrap();
        let code = cvlab(&[
            "--experiment",
            "fig4c",
            "--modes",
            "2,3",
            "--tol",
            "1e-30",
            "--out",
            path(dir.path()),
        ]);
        assert_eq!(code, 2);
        let m = manifest(&dir.path().join("fig4c.manifest.json"));
        assert_eq!(m["status"], "validation_failure");
    }

    #[test]
    fn insufficient_cutoff_exits_three() {
        let dir = tempfile::tempdir().unwrap();
        let code = cvlab(&[
            "--experiment",
            "fig4c",
            "--modes",
            "2,3",
            "--cutoff",
            "8",
            "--out",
            path(dir.path()),
        ]);
        assert_eq!(code, 3);
        let m = manifest(&dir.path().join("fig4c.manifest.json"));
        assert_eq!(m["status"], "non_convergence");
        assert_eq!(m["oracle_cutoffs"].as_array().map(|a| a.len()), Some(0));
    }
}
