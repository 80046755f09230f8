//! quarterhall: command-line runner for the magnetic quarter-plane
//! experiments. Each subcommand executes one registered experiment (or all
//! of them), writes deterministic CSV result files plus a JSON mirror, and
//! finishes with a manifest carrying verdicts, file hashes, and timings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use quarterhall::experiments::{
    render_output, run_experiment, ExperimentConfig, ExperimentOutput, RationalFlux, Verdict,
    EXPERIMENT_NAMES,
};
use quarterhall::lattice::LatticeWindow;
use quarterhall::operators::{harper_hamiltonian, HamiltonianSpec};
use quarterhall::report::fmt_sig12;
use quarterhall::spectral::{eig, spectrum_rows};

const EXIT_PASS: i32 = 0;
const EXIT_FAIL: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_SKIP_ONLY: i32 = 3;

#[derive(Parser)]
#[command(
    name = "quarterhall",
    version,
    about = "Interface currents and corner states of magnetic quarter-plane lattices",
    disable_help_subcommand = true
)]
struct Cli {
    /// JSON configuration file (defaults are used when omitted)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for result files
    #[arg(long, global = true, default_value = "runs/out")]
    out: PathBuf,

    /// Seed override for the randomized sweeps
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact lattice identities (commutation, circulation, projections, w)
    Identities,
    /// Winding numbers of the interface shift w
    Lemma44,
    /// Bulk-interface correspondence at desk scale
    BulkInterface,
    /// Persistence of interface currents under a compact field perturbation
    Robustness,
    /// Hofstadter band dataset with per-gap Chern labels
    Butterfly,
    /// Corner-state example: spectral flow and asymptotic gap condition
    Corner,
    /// Thouless pump: polarization against edge spectral flow
    Pump,
    /// Eigenvalue table of a configured Hamiltonian
    Spectrum {
        /// also dump the operator matrix (binary complex pairs + JSON header)
        #[arg(long)]
        dump_operator: bool,
    },
    /// Run every registered experiment
    All,
}

fn main() {
    // QH_THREADS caps the BLAS worker pool; it must be set before the first
    // BLAS call to take effect
    if let Ok(v) = std::env::var("QH_THREADS") {
        std::env::set_var("OPENBLAS_NUM_THREADS", v);
    }
    let cli = Cli::parse();
    std::process::exit(run(cli));
}

fn run(cli: Cli) -> i32 {
    let mut cfg = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return EXIT_USAGE;
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }

    let started = Instant::now();
    let mut writer = RunWriter::new(cli.out.clone(), &cfg);

    let outcome = match &cli.command {
        Command::Spectrum { dump_operator } => {
            return match run_spectrum(&cfg, &mut writer, *dump_operator) {
                Ok(()) => {
                    writer.finish(started);
                    EXIT_PASS
                }
                Err(e) => {
                    eprintln!("spectrum failed: {e}");
                    EXIT_USAGE
                }
            };
        }
        Command::All => run_many(&cfg, &EXPERIMENT_NAMES, &mut writer, true),
        other => {
            let name = match other {
                Command::Identities => "identities",
                Command::Lemma44 => "lemma44",
                Command::BulkInterface => "bulk_interface",
                Command::Robustness => "robustness",
                Command::Butterfly => "butterfly",
                Command::Corner => "corner",
                Command::Pump => "pump",
                _ => unreachable!(),
            };
            if name == "bulk_interface" || name == "robustness" {
                if let Err(msg) = validate_flux_pair(&cfg) {
                    eprintln!("config error: {msg}");
                    return EXIT_USAGE;
                }
            }
            run_many(&cfg, &[name], &mut writer, false)
        }
    };

    writer.finish(started);
    outcome
}

fn validate_flux_pair(cfg: &ExperimentConfig) -> Result<(), String> {
    if !cfg.bulk_interface.vacuum_star
        && RationalFlux::degenerate_pair(cfg.b_corner, cfg.b_star)
    {
        return Err(format!(
            "b_corner - b_star = 2 pi ({}/{} - {}/{}) lies in 2 pi Z; the quarter-plane \
             construction requires b_corner - b_star not in 2 pi Z",
            cfg.b_corner.num, cfg.b_corner.den, cfg.b_star.num, cfg.b_star.den
        ));
    }
    Ok(())
}

fn run_many(
    cfg: &ExperimentConfig,
    names: &[&str],
    writer: &mut RunWriter,
    subdirs: bool,
) -> i32 {
    let mut passes = 0usize;
    let mut fails = 0usize;
    let mut skips = 0usize;
    for name in names {
        let t = Instant::now();
        let out = match run_experiment(name, cfg) {
            Ok(o) => o,
            Err(e) => ExperimentOutput {
                name: (*name).to_string(),
                verdict: Verdict::Fail(format!("error: {e}")),
                reports: vec![],
                tables: vec![],
            },
        };
        let elapsed = t.elapsed();
        match &out.verdict {
            Verdict::Pass => {
                passes += 1;
                println!("[PASS] {name} ({:.1}s)", elapsed.as_secs_f64());
            }
            Verdict::Fail(d) => {
                fails += 1;
                println!("[FAIL] {name} ({:.1}s): {d}", elapsed.as_secs_f64());
            }
            Verdict::Skip(d) => {
                skips += 1;
                println!("[SKIP] {name} ({:.1}s): {d}", elapsed.as_secs_f64());
            }
        }
        let dir = if subdirs { Some(*name) } else { None };
        writer.record(out, dir, elapsed.as_millis() as u64);
    }
    if fails > 0 {
        EXIT_FAIL
    } else if passes == 0 && skips > 0 {
        EXIT_SKIP_ONLY
    } else {
        EXIT_PASS
    }
}

fn run_spectrum(
    cfg: &ExperimentConfig,
    writer: &mut RunWriter,
    dump_operator: bool,
) -> anyhow::Result<()> {
    let sc = &cfg.spectrum;
    let window = LatticeWindow::centered_square(sc.l)?;
    let field = quarterhall::lattice::MagneticField::quarter(
        cfg.b_corner.radians(),
        cfg.b_star.radians(),
    )?;
    let spec = HamiltonianSpec::new(field, window, sc.kind);
    let h = harper_hamiltonian(&spec)?;
    let es = eig(&h)?;
    let rows = spectrum_rows(&es, sc.interface_distance, sc.boundary_margin);
    let mut csv = String::from("index,eigenvalue,interface_weight,boundary_weight\n");
    for (k, v, iw, bw) in rows {
        csv.push_str(&format!(
            "{k},{},{},{}\n",
            fmt_sig12(v),
            fmt_sig12(iw),
            fmt_sig12(bw)
        ));
    }
    writer.write_file(None, "spectrum.csv", csv.into_bytes());

    if dump_operator {
        // binary row-major complex pairs, little-endian f64, plus a JSON
        // header describing the window and flags
        let n = h.dimension();
        let mut bytes = Vec::with_capacity(16 * n * n);
        for i in 0..n {
            for j in 0..n {
                let z = h.matrix[(i, j)];
                bytes.extend_from_slice(&z.re.to_le_bytes());
                bytes.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        writer.write_file(None, "operator.bin", bytes);
        let header = serde_json::json!({
            "window": {
                "n1_min": window.n1_min,
                "n1_max": window.n1_max,
                "n2_min": window.n2_min,
                "n2_max": window.n2_max,
            },
            "dimension": n,
            "layout": "row-major complex128 (re, im) little-endian",
            "flags": {
                "hermitian": h.flags.hermitian,
                "unitary_on_interior": h.flags.unitary_on_interior,
                "projection": h.flags.projection,
            },
            "kind": sc.kind,
        });
        writer.write_file(
            None,
            "operator.json",
            serde_json::to_vec_pretty(&header).expect("header serializes"),
        );
    }
    println!("[DONE] spectrum ({} states)", es.dimension());
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, String> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))
        }
    }
}

#[derive(serde::Serialize)]
struct ManifestFile {
    path: String,
    bytes: usize,
    sha256: String,
}

#[derive(serde::Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    verdicts: BTreeMap<String, Verdict>,
    files: Vec<ManifestFile>,
    timings_ms: BTreeMap<String, u64>,
    total_ms: u64,
}

struct RunWriter {
    out_dir: PathBuf,
    config: ExperimentConfig,
    verdicts: BTreeMap<String, Verdict>,
    files: Vec<ManifestFile>,
    timings: BTreeMap<String, u64>,
}

impl RunWriter {
    fn new(out_dir: PathBuf, config: &ExperimentConfig) -> Self {
        Self {
            out_dir,
            config: config.clone(),
            verdicts: BTreeMap::new(),
            files: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    fn write_file(&mut self, subdir: Option<&str>, name: &str, bytes: Vec<u8>) {
        let mut dir = self.out_dir.clone();
        if let Some(s) = subdir {
            dir.push(s);
        }
        if let Err(e) = std::fs::create_dir_all(&dir) {
            eprintln!("cannot create {}: {e}", dir.display());
            return;
        }
        let path = dir.join(name);
        let digest = Sha256::digest(&bytes);
        if let Err(e) = std::fs::write(&path, &bytes) {
            eprintln!("cannot write {}: {e}", path.display());
            return;
        }
        let rel = match subdir {
            Some(s) => format!("{s}/{name}"),
            None => name.to_string(),
        };
        self.files.push(ManifestFile {
            path: rel,
            bytes: bytes.len(),
            sha256: hex::encode(digest),
        });
    }

    fn record(&mut self, out: ExperimentOutput, subdir: Option<&str>, elapsed_ms: u64) {
        for (name, content) in render_output(&out) {
            self.write_file(subdir, &name, content.into_bytes());
        }
        let mirror = serde_json::to_vec_pretty(&out).expect("output serializes");
        self.write_file(subdir, &format!("{}.json", out.name), mirror);
        self.timings.insert(out.name.clone(), elapsed_ms);
        self.verdicts.insert(out.name.clone(), out.verdict);
    }

    fn finish(&mut self, started: Instant) {
        let manifest = Manifest {
            tool: "quarterhall",
            version: env!("CARGO_PKG_VERSION"),
            config: &self.config,
            verdicts: self.verdicts.clone(),
            files: std::mem::take(&mut self.files),
            timings_ms: self.timings.clone(),
            total_ms: started.elapsed().as_millis() as u64,
        };
        let bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        if let Err(e) = std::fs::create_dir_all(&self.out_dir) {
            eprintln!("cannot create {}: {e}", self.out_dir.display());
            return;
        }
        let path = self.out_dir.join("manifest.json");
        if let Err(e) = std::fs::write(&path, bytes) {
            eprintln!("cannot write {}: {e}", path.display());
        }
    }
}
