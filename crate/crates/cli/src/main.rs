//! `detkit` command-line front end.
//!
//! Exit codes: 0 success, 1 the checked property does not hold, 2 usage or
//! input error.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use detkit::circuit::{self, Circuit};
use detkit::decoder::DecoderKind;
use detkit::dem::{DetectorErrorModel, ExportFormat};
use detkit::distance::circuit_distance;
use detkit::experiments::{
    apply_noise, build_memory_circuit, build_stability_circuit, sample_rate_with, CodeFamily,
    Extraction, NoiseSpec, SampleOptions,
};
use detkit::frames::{check_ft_extraction, verify_extraction_equivalence, ExtractionSpec};
use detkit::gadget::{build_gadget_dem, component_count, gadget_distance, ComponentProcedure, ProcedureKind};
use detkit::gf2::{sparsify_rows, BitVec};
use detkit::pauli::PauliString;
use detkit::schedule::{parse_schedule, verify_ft, BucketMember, PhenoKind, PhenoModel};

#[derive(Parser)]
#[command(name = "detkit", version, about = "Detector error models for noisy Clifford circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dem,
    Dot,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Memory,
    Stability,
}

#[derive(Subcommand)]
enum Command {
    /// Build the detector error model of a circuit and export it.
    Analyze {
        file: PathBuf,
        /// Greedily reduce the number of ones in H by row operations.
        #[arg(long)]
        sparsify: bool,
        #[arg(long, value_enum, default_value = "dem")]
        format: Format,
    },
    /// Circuit distance by exhaustive search.
    Distance {
        file: PathBuf,
        #[arg(long, default_value_t = 6)]
        max_weight: usize,
        /// Exit 1 unless the distance is at least this value.
        #[arg(long)]
        require: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Check a measurement schedule for fault tolerance.
    VerifySchedule {
        file: PathBuf,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        json: bool,
    },
    /// Monte Carlo logical error rate; prints one JSON line.
    Sample {
        /// Circuit file; omit to build one from --code/--d/--rounds.
        file: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "minweight")]
        decoder: String,
        /// Replace the circuit's noise: sdmb:p,eta | si:p | meas:p | none.
        #[arg(long)]
        noise: Option<String>,
        #[arg(long)]
        threads: Option<usize>,
        /// Stop after this many logical errors.
        #[arg(long)]
        max_errors: Option<u64>,
        /// Comma-separated 1-based measurements whose detectors abort a shot.
        #[arg(long, value_delimiter = ',')]
        postselect: Vec<usize>,
        #[arg(long)]
        code: Option<String>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long, default_value = "single")]
        extraction: String,
        #[arg(long, value_enum, default_value = "memory")]
        experiment: Experiment,
    },
    /// Distance of a component-level logical measurement procedure.
    GadgetCheck {
        #[arg(long)]
        procedure: String,
        #[arg(long)]
        distance: usize,
        #[arg(long)]
        json: bool,
    },
    /// Write a memory or stability circuit.
    Build {
        #[arg(long, default_value = "surface")]
        code: String,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value = "single")]
        extraction: String,
        #[arg(long)]
        rounds: usize,
        #[arg(long, default_value = "sdmb:0.001,1")]
        noise: String,
        #[arg(long, value_enum, default_value = "memory")]
        experiment: Experiment,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Check fault tolerance of a syndrome extraction circuit.
    CheckExtraction {
        file: PathBuf,
        #[arg(long)]
        w: usize,
        /// Measured stabilizer as a dense Pauli string over the data qubits.
        #[arg(long, default_value = "ZZZZ")]
        stabilizer: String,
        /// Comma-separated data qubits (default 0..len(stabilizer)).
        #[arg(long, value_delimiter = ',')]
        data: Vec<usize>,
        /// Comma-separated 1-based post-selected measurements.
        #[arg(long, value_delimiter = ',')]
        postselect: Vec<usize>,
        /// Also compare every single error with a one-measurement circuit.
        #[arg(long)]
        equivalence: bool,
        #[arg(long)]
        json: bool,
    },
}

/// Failure that should end the program with exit code 2.
struct UsageError(String);

impl<E: Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

type Outcome = Result<bool, UsageError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Analyze { file, sparsify, format } => analyze(&file, sparsify, format),
        Command::Distance { file, max_weight, require, json } => {
            distance(&file, max_weight, require, json)
        }
        Command::VerifySchedule { file, t, json } => verify_schedule(&file, t, json),
        Command::Sample {
            file,
            shots,
            seed,
            decoder,
            noise,
            threads,
            max_errors,
            postselect,
            code,
            d,
            rounds,
            extraction,
            experiment,
        } => {
            let decoder: DecoderKind = decoder.parse()?;
            let noise: Option<NoiseSpec> = noise.map(|n| n.parse()).transpose()?;
            let (circuit, d, noise) = match file {
                Some(f) => {
                    let c = load_circuit(&f)?;
                    let c = match &noise {
                        Some(n) => apply_noise(&c.without_noise(), n)?,
                        None => c,
                    };
                    (c, d, noise)
                }
                None => {
                    let d = d.ok_or_else(|| UsageError("need a circuit file or --d".into()))?;
                    let noise = noise.unwrap_or(NoiseSpec::Sdmb { p: 1e-3, eta: 1.0 });
                    let c = build_circuit(
                        code.as_deref().unwrap_or("surface"),
                        d,
                        &extraction,
                        rounds.unwrap_or(d),
                        &noise,
                        experiment,
                    )?;
                    (c, Some(d), Some(noise))
                }
            };
            let opts = SampleOptions { max_errors, postselect };
            let run = || sample_rate_with(&circuit, shots, seed, decoder, &opts);
            let result = match threads {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()?
                    .install(run)?,
                None => run()?,
            };
            let p = noise.map(|n| match n {
                NoiseSpec::Sdmb { p, .. } | NoiseSpec::Si { p } | NoiseSpec::MeasurementOnly { p } => p,
                NoiseSpec::Noiseless => 0.0,
            });
            println!(
                "{}",
                json!({
                    "d": d,
                    "p": p,
                    "shots": result.shots,
                    "errors": result.logical_errors,
                    "rate": result.rate,
                    "ci95": [result.ci95.0, result.ci95.1],
                    "seed": result.seed,
                    "aborted": result.aborted,
                })
            );
            Ok(true)
        }
        Command::GadgetCheck { procedure, distance, json } => gadget_check(&procedure, distance, json),
        Command::Build { code, d, extraction, rounds, noise, experiment, output } => {
            let noise: NoiseSpec = noise.parse()?;
            let c = build_circuit(&code, d, &extraction, rounds, &noise, experiment)?;
            let text = circuit::print(&c);
            match output {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| UsageError(format!("{}: {e}", path.display())))?,
                None => print!("{text}"),
            }
            Ok(true)
        }
        Command::CheckExtraction { file, w, stabilizer, data, postselect, equivalence, json } => {
            check_extraction(&file, w, &stabilizer, data, postselect, equivalence, json)
        }
    }
}

fn read(path: &Path) -> Result<String, UsageError> {
    std::fs::read_to_string(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn load_circuit(path: &Path) -> Result<Circuit, UsageError> {
    circuit::parse(&read(path)?).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn build_circuit(
    code: &str,
    d: usize,
    extraction: &str,
    rounds: usize,
    noise: &NoiseSpec,
    experiment: Experiment,
) -> Result<Circuit, UsageError> {
    let extraction: Extraction = extraction.parse()?;
    Ok(match experiment {
        Experiment::Memory => {
            let code: CodeFamily = code.parse()?;
            build_memory_circuit(code, d, rounds, extraction, noise)?
        }
        Experiment::Stability => build_stability_circuit(d, rounds, extraction, noise)?,
    })
}

fn analyze(file: &Path, sparsify: bool, format: Format) -> Outcome {
    let c = load_circuit(file)?;
    let mut dem = DetectorErrorModel::from_circuit(&c)?;
    if sparsify {
        dem.h = sparsify_rows(&dem.h);
    }
    let format = match format {
        Format::Dem => ExportFormat::DemText,
        Format::Dot => ExportFormat::Dot,
        Format::Json => ExportFormat::Json,
    };
    let out = dem.export(format);
    print!("{out}");
    if !out.ends_with('\n') {
        println!();
    }
    Ok(true)
}

fn distance(file: &Path, max_weight: usize, require: Option<usize>, as_json: bool) -> Outcome {
    let c = load_circuit(file)?;
    let dem = DetectorErrorModel::from_circuit(&c)?;
    let found = circuit_distance(&dem, max_weight)?;
    let ok = match (require, &found) {
        (Some(r), Some(w)) => w.weight >= r,
        (Some(r), None) => max_weight + 1 >= r,
        (None, _) => true,
    };
    if as_json {
        println!(
            "{}",
            json!({
                "distance": found.as_ref().map(|w| w.weight),
                "witness": found.as_ref().map(|w| w.columns.clone()),
                "max_weight": max_weight,
                "detectors": dem.num_detectors(),
                "errors": dem.num_errors(),
                "ok": ok,
            })
        );
    } else {
        match &found {
            Some(w) => {
                println!("distance {}", w.weight);
                let labels: Vec<String> = w.columns.iter().map(|j| format!("E{}", j + 1)).collect();
                println!("witness {}", labels.join(" "));
            }
            None => println!("distance > {max_weight}"),
        }
    }
    Ok(ok)
}

fn bits(v: &BitVec) -> String {
    v.to_bools().iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn column_label(model: &PhenoModel, col: usize) -> String {
    let err = model.errors[model.representative[col]];
    let class = match err.class {
        detkit::frames::ErrorClass::Input => "input",
        detkit::frames::ErrorClass::Internal => "internal",
    };
    match err.kind {
        PhenoKind::Data { qubit, round } => format!("{class} data q{qubit} r{round}"),
        PhenoKind::MeasFlip { measurement, .. } => format!("{class} flip m{measurement}"),
    }
}

fn member_json(model: &PhenoModel, m: &BucketMember) -> Value {
    json!({
        "columns": m.columns,
        "labels": m.columns.iter().map(|&c| column_label(model, c)).collect::<Vec<_>>(),
        "output": bits(&m.output),
        "internal": m.internal,
    })
}

/// Longest correction table printed in text mode.
const MAX_LISTED: usize = 64;

fn verify_schedule(file: &Path, t: usize, as_json: bool) -> Outcome {
    let s = parse_schedule(&read(file)?)?;
    let report = verify_ft(&s, t)?;
    if as_json {
        let corrections: Vec<Value> = report
            .corrections
            .iter()
            .map(|(syn, cor)| json!({"syndrome": bits(syn), "correction": bits(cor)}))
            .collect();
        let pairs: Vec<Value> = report
            .counterexamples
            .iter()
            .map(|(a, b)| json!({"a": member_json(&report.model, a), "b": member_json(&report.model, b)}))
            .collect();
        println!(
            "{}",
            json!({
                "fault_tolerant": report.fault_tolerant,
                "t": t,
                "columns": report.model.num_columns(),
                "detectors": report.model.merged.num_detectors(),
                "corrections": corrections,
                "counterexamples": pairs,
            })
        );
    } else {
        println!(
            "{} (t={t}, {} columns, {} detectors)",
            if report.fault_tolerant { "fault-tolerant" } else { "not fault-tolerant" },
            report.model.num_columns(),
            report.model.merged.num_detectors()
        );
        if report.corrections.len() <= MAX_LISTED {
            for (syn, cor) in &report.corrections {
                println!("correction {} -> {}", bits(syn), bits(cor));
            }
        } else {
            println!("{} corrections (listed with --json)", report.corrections.len());
        }
        for (a, b) in &report.counterexamples {
            let show = |m: &BucketMember| {
                m.columns
                    .iter()
                    .map(|&c| column_label(&report.model, c))
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            println!("counterexample {{{}}} vs {{{}}}", show(a), show(b));
        }
    }
    Ok(report.fault_tolerant)
}

fn gadget_check(procedure: &str, d: usize, as_json: bool) -> Outcome {
    let kind: ProcedureKind = procedure.parse()?;
    let p = ComponentProcedure::new(kind, d)?;
    let dem = build_gadget_dem(&p)?;
    let found = gadget_distance(&dem, d);
    let counts = component_count(kind, d)?;
    let ok = found.as_ref().is_none_or(|w| w.weight >= d);
    let counts_json: serde_json::Map<String, Value> =
        counts.iter().map(|(c, n)| (c.to_string(), json!(n))).collect();
    if as_json {
        println!(
            "{}",
            json!({
                "procedure": procedure.to_ascii_lowercase(),
                "d": d,
                "distance": found.as_ref().map(|w| w.weight),
                "witness": found.as_ref().map(|w| w.columns.clone()),
                "components": counts_json,
                "ok": ok,
            })
        );
    } else {
        match &found {
            Some(w) => {
                println!("distance {}", w.weight);
                let labels: Vec<String> = w.columns.iter().map(|j| format!("E{}", j + 1)).collect();
                println!("witness {}", labels.join(" "));
            }
            None => println!("distance > {}", d + 1),
        }
        let parts: Vec<String> = counts.iter().map(|(c, n)| format!("{c}:{n}")).collect();
        println!("components {}", parts.join(" "));
    }
    Ok(ok)
}

fn check_extraction(
    file: &Path,
    w: usize,
    stabilizer: &str,
    data: Vec<usize>,
    postselect: Vec<usize>,
    equivalence: bool,
    as_json: bool,
) -> Outcome {
    let c = load_circuit(file)?;
    let stab = PauliString::parse_dense(stabilizer)?;
    let data = if data.is_empty() { (0..stab.n()).collect() } else { data };
    let spec = ExtractionSpec {
        data_qubits: data,
        stabilizers: vec![stab],
        postselect,
    };
    let report = check_ft_extraction(&c, w, &spec)?;
    let eq = if equivalence {
        Some(verify_extraction_equivalence(&c, &spec)?)
    } else {
        None
    };
    let ok = report.passed && eq.as_ref().is_none_or(|e| e.passed);
    if as_json {
        println!(
            "{}",
            json!({
                "passed": report.passed,
                "w": w,
                "checked": report.checked,
                "aborted": report.aborted,
                "violation": report.violation.as_ref().map(|(errs, wx, wz)| json!({
                    "errors": errs, "x_weight": wx, "z_weight": wz,
                })),
                "equivalence": eq.as_ref().map(|e| json!({
                    "passed": e.passed,
                    "counterexample": e.counterexample,
                })),
                "ok": ok,
            })
        );
    } else {
        println!(
            "{} (w={w}, {} error sets checked, {} aborted)",
            if report.passed { "fault-tolerant" } else { "not fault-tolerant" },
            report.checked,
            report.aborted
        );
        if let Some((errs, wx, wz)) = &report.violation {
            let labels: Vec<String> = errs.iter().map(|j| format!("E{}", j + 1)).collect();
            println!("violation {} (output weight X {wx}, Z {wz})", labels.join(" "));
        }
        if let Some(e) = &eq {
            match e.counterexample {
                None => println!("equivalence passed ({} errors)", e.entries.len()),
                Some(j) => println!("equivalence failed at E{}", j + 1),
            }
        }
    }
    Ok(ok)
}
