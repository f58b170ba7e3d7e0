//! `levyfield` command-line front end. Every run writes its data file plus a sorted-key JSON
//! manifest (`<out>.manifest.json`). Exit codes: 0 pass, 1 tolerance failure, 2 usage error.

mod commands;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use commands::{BkarVerifyArgs, CountertermArgs, LevyScanArgs, PartitionCheckArgs, PowerCountArgs, Report};
use manifest::{write_output, RunManifest};

/// Directory for outputs when `--out` is not given.
const OUT_DIR_ENV: &str = "LEVYFIELD_OUT_DIR";

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Scientific(String),
    Io(String),
}

impl From<levyfield::Error> for Failure {
    fn from(e: levyfield::Error) -> Self {
        use levyfield::Error as E;
        match e {
            E::NonRenormalizable { .. } | E::Quadrature { .. } => Failure::Scientific(e.to_string()),
            E::Io(m) => Failure::Io(m),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "levyfield", version, about = "Experiments on the cutoff Lévy area of a rough Gaussian field")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Check that the dyadic pieces sum to one; CSV of max deviation per decade of |ξ|.
    PartitionCheck(PartitionCheckArgs),
    /// Area variance against the ultraviolet cutoff (quadrature, Monte Carlo or both).
    LevyScan(LevyScanArgs),
    /// Forest-formula and cluster-expansion identities on random instances; JSON report.
    BkarVerify(BkarVerifyArgs),
    /// Degrees of divergence of a field model; CSV classification table.
    PowerCount(PowerCountArgs),
    /// Self-energy constant and the scale-by-scale counterterm; CSV table.
    Counterterm(CountertermArgs),
    /// Re-run the command recorded in a manifest and compare output digests.
    #[serde(skip)]
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
}

impl Command {
    fn name_and_ext(&self) -> (&'static str, &'static str) {
        match self {
            Command::PartitionCheck(_) => ("partition-check", "csv"),
            Command::LevyScan(_) => ("levy-scan", "csv"),
            Command::BkarVerify(_) => ("bkar-verify", "json"),
            Command::PowerCount(_) => ("power-count", "csv"),
            Command::Counterterm(_) => ("counterterm", "csv"),
            Command::Replay { .. } => ("replay", ""),
        }
    }

    fn out_mut(&mut self) -> Option<&mut Option<PathBuf>> {
        match self {
            Command::PartitionCheck(a) => Some(&mut a.out),
            Command::LevyScan(a) => Some(&mut a.out),
            Command::BkarVerify(a) => Some(&mut a.out),
            Command::PowerCount(a) => Some(&mut a.out),
            Command::Counterterm(a) => Some(&mut a.out),
            Command::Replay { .. } => None,
        }
    }

    fn execute(&self) -> Result<Report, Failure> {
        match self {
            Command::PartitionCheck(a) => commands::partition(a),
            Command::LevyScan(a) => commands::levy_scan(a),
            Command::BkarVerify(a) => commands::bkar(a),
            Command::PowerCount(a) => commands::power(a),
            Command::Counterterm(a) => commands::counterterm(a),
            Command::Replay { .. } => unreachable!("replay is dispatched separately"),
        }
    }
}

/// Fills in the default output path so the manifest records where the data went.
fn resolve_out(cmd: &mut Command) {
    let (name, ext) = cmd.name_and_ext();
    if let Some(out) = cmd.out_mut() {
        if out.is_none() {
            let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
            *out = Some(dir.join(format!("{name}.{ext}")));
        }
    }
}

fn run(mut cmd: Command) -> Result<RunManifest, Failure> {
    resolve_out(&mut cmd);
    let out = cmd.out_mut().and_then(|o| o.clone()).expect("resolved output path");
    let report = cmd.execute()?;
    let digest = write_output(&out, &report.output)?;
    let (name, _) = cmd.name_and_ext();
    let config = match serde_json::to_value(&cmd)? {
        serde_json::Value::Object(mut m) => m.remove(name).expect("tagged command"),
        other => other,
    };
    let manifest = RunManifest {
        command: name.to_string(),
        config,
        seed: report.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: [(out.display().to_string(), digest)].into_iter().collect(),
        passed: report.passed,
        summary: report.summary,
    };
    let mpath = manifest.write(&out)?;
    for line in &report.lines {
        println!("{line}");
    }
    println!("wrote {} and {}", out.display(), mpath.display());
    Ok(manifest)
}

fn replay(path: &Path) -> Result<bool, Failure> {
    let recorded = RunManifest::read(path)?;
    let mut tagged = serde_json::Map::new();
    tagged.insert(recorded.command.clone(), recorded.config.clone());
    let cmd: Command = serde_json::from_value(tagged.into())
        .map_err(|e| Failure::Usage(format!("{}: cannot rebuild command: {e}", path.display())))?;
    let fresh = run(cmd)?;
    let same = fresh.outputs == recorded.outputs;
    println!("replay of {}: outputs {}", recorded.command, if same { "identical" } else { "DIFFER" });
    Ok(same && fresh.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Replay { manifest } => replay(&manifest),
        cmd => run(cmd).map(|m| m.passed),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("tolerance check failed");
            ExitCode::from(1)
        }
        Err(Failure::Scientific(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg) | Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(manifest::manifest_path(Path::new("a/b.csv")), PathBuf::from("a/b.csv.manifest.json"));
    }

    #[test]
    fn digests_are_sha256() {
        assert_eq!(
            manifest::sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn sorted_keys() {
        let v = serde_json::json!({ "b": 1, "a": { "d": 2, "c": 3 } });
        let s = manifest::to_sorted_json(&v).unwrap();
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.find("\"c\"").unwrap() < s.find("\"d\"").unwrap());
    }
}
