use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bowforge::bowdata::{
    check_all_exactness, check_chain_invariants, validate_relations, ExactnessOutcome, DEFAULT_TOL, DERIVED_TOL,
};
use bowforge::generator::{canonical_example, canonical_examples, generate, rng_from_seed};
use bowforge::io::{self, BowFile, Metadata};
use bowforge::monad::{assemble_monad, fiber_of, local_freeness_of, random_points, scan_local_freeness, ScanConfig, SurfacePoint};
use bowforge::orthosymplectic::{fiber_form, gram_symmetry_defect, verify_pairing_relations};
use bowforge::report::ValidationReport;
use bowforge::{chern_summary, validate_topology, Complex64, Error};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "bowforge", version, about = "Bow complexes and monads of instantons on multi-Taub-NUT spaces")]
struct Cli {
    /// Report style.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Relative residual tolerance; overrides each command's default.
    #[arg(long, global = true, env = "BOWFORGE_TOL")]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Machine,
}

#[derive(Subcommand)]
enum Command {
    /// Dimension vectors and invariant checks of a topology file.
    Dims { topo: PathBuf },
    /// Matrix relations of a bow file.
    Validate { bow: PathBuf },
    /// Pointwise exactness of every lambda-step complex.
    Exactness { bow: PathBuf },
    /// Derived identities of the NUT chain.
    Invariants { bow: PathBuf },
    /// Generate a random datum for a topology file.
    Gen {
        topo: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Fiber of the bundle over one point; psi is solved from xi and eta.
    Fiber {
        bow: PathBuf,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        xi: Complex64,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        eta: Complex64,
    },
    /// Local freeness and fiber rank over random and structured points.
    Scan {
        bow: PathBuf,
        /// Number of random points.
        #[arg(long = "n", default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip the structured points.
        #[arg(long)]
        random_only: bool,
    },
    /// Orthogonal/symplectic pairing checks; needs an embedded pairing.
    Pairing {
        bow: PathBuf,
        /// Random points for the fiber form.
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write the bow-complex document of a datum.
    ExportBow {
        bow: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write a named canonical example, or list them.
    Canonical {
        name: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    s.trim()
        .parse::<Complex64>()
        .map_err(|_| format!("{s:?} is not a complex number (examples: 1.5, -2i, 0.3-1e-2i)"))
}

/// Failures that are not numerical verdicts: exit code 2.
#[derive(Debug)]
enum Fatal {
    Lib(Error),
    Io(String),
}

impl From<Error> for Fatal {
    fn from(e: Error) -> Self {
        Fatal::Lib(e)
    }
}

impl std::fmt::Display for Fatal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Fatal::Lib(e) => write!(f, "{e}"),
            Fatal::Io(s) => f.write_str(s),
        }
    }
}

/// What a command produced: a verdict, a machine report and human lines.
struct Outcome {
    passed: bool,
    machine: Value,
    human: Vec<String>,
}

fn read(path: &Path) -> Result<Vec<u8>, Fatal> {
    std::fs::read(path).map_err(|e| Fatal::Io(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Fatal> {
    if path.as_os_str() == "-" {
        print!("{text}");
        return Ok(());
    }
    std::fs::write(path, text).map_err(|e| Fatal::Io(format!("cannot write {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<BowFile, Fatal> {
    Ok(io::parse(&read(path)?)?)
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cstr(z: Complex64) -> String {
    format!("{:.6e}{:+.6e}i", z.re, z.im)
}

fn report_lines(rep: &ValidationReport) -> Vec<String> {
    let mut out = vec![format!(
        "{:<24} {:>12} {:>12}  (tol {:e}, {})",
        "residual", "absolute", "relative", rep.tolerance, rep.norm
    )];
    for r in &rep.residuals {
        let tag = if r.informational { "info" } else { mark(r.passed) };
        out.push(format!("{:<24} {:>12.3e} {:>12.3e}  {tag}", r.name, r.absolute, r.relative));
    }
    for c in &rep.checks {
        out.push(format!("{:<24} {}  {}", c.name, mark(c.passed), c.detail));
    }
    out.push(format!("verdict: {}", mark(rep.verdict)));
    out
}

fn run(cli: &Cli) -> Result<Outcome, Fatal> {
    let tol = |default: f64| cli.tol.unwrap_or(default);
    match &cli.command {
        Command::Dims { topo } => {
            let t = io::parse_topology(&read(topo)?)?;
            let violations = validate_topology(&t)?;
            let (d, dn) = t.signed_dimensions();
            let chern = chern_summary(&t)?;
            let mut human = vec![format!("d  = {d:?}"), format!("dn = {dn:?}")];
            human.push(format!(
                "c1 = {:?}, c2 = {}, flag degrees = {:?}",
                chern.c1, chern.c2, chern.flag_degrees
            ));
            human.extend(violations.iter().map(|v| format!("violation: {v}")));
            human.push(format!("verdict: {}", mark(violations.is_empty())));
            Ok(Outcome {
                passed: violations.is_empty(),
                machine: json!({ "d": d, "dn": dn, "chern": chern, "violations": violations }),
                human,
            })
        }
        Command::Validate { bow } => {
            let f = load(bow)?;
            let violations = validate_topology(&f.datum.topo)?;
            let rep = validate_relations(&f.datum, tol(DEFAULT_TOL))?;
            let passed = rep.verdict && violations.is_empty();
            let mut human: Vec<String> = violations.iter().map(|v| format!("topology violation: {v}")).collect();
            human.extend(report_lines(&rep));
            Ok(Outcome {
                passed,
                machine: json!({ "topology_violations": violations, "relations": rep, "verdict": passed }),
                human,
            })
        }
        Command::Exactness { bow } => {
            let f = load(bow)?;
            let reps = check_all_exactness(&f.datum)?;
            let mut human = Vec::new();
            let mut machine = Vec::new();
            for r in &reps {
                let cands: Vec<[f64; 2]> = r.candidates.iter().map(|z| [z.re, z.im]).collect();
                match &r.outcome {
                    ExactnessOutcome::Pass => {
                        human.push(format!("exactness[{}]  PASS  ({} candidate eta)", r.index, cands.len()));
                        machine.push(json!({ "index": r.index, "outcome": "pass", "candidates": cands }));
                    }
                    ExactnessOutcome::Fail { eta, side, witness } => {
                        let w: Vec<[f64; 2]> = witness.iter().map(|z| [z.re, z.im]).collect();
                        human.push(format!("exactness[{}]  FAIL  {side:?} at eta = {}", r.index, cstr(*eta)));
                        machine.push(json!({
                            "index": r.index, "outcome": "fail", "side": side,
                            "eta": [eta.re, eta.im], "witness": w, "candidates": cands
                        }));
                    }
                    ExactnessOutcome::Indeterminate { reason } => {
                        human.push(format!("exactness[{}]  INDETERMINATE  {reason}", r.index));
                        machine.push(json!({ "index": r.index, "outcome": "indeterminate", "reason": reason, "candidates": cands }));
                    }
                }
            }
            let passed = reps.iter().all(|r| r.outcome.is_pass());
            human.push(format!("verdict: {}", mark(passed)));
            Ok(Outcome {
                passed,
                machine: json!({ "exactness": machine, "verdict": passed }),
                human,
            })
        }
        Command::Invariants { bow } => {
            let f = load(bow)?;
            let rep = check_chain_invariants(&f.datum, tol(DERIVED_TOL))?;
            Ok(Outcome {
                passed: rep.verdict,
                human: report_lines(&rep),
                machine: serde_json::to_value(&rep).expect("report encodes"),
            })
        }
        Command::Gen { topo, seed, output } => {
            let t = io::parse_topology(&read(topo)?)?;
            let datum = match generate(&t, *seed) {
                Ok(d) => d,
                Err(e @ Error::RetriesExhausted { .. }) => {
                    return Ok(Outcome {
                        passed: false,
                        human: vec![format!("generation failed: {e}")],
                        machine: json!({ "error": e.to_string(), "verdict": false }),
                    })
                }
                Err(e) => return Err(e.into()),
            };
            let file = BowFile {
                datum,
                pairing: None,
                metadata: Some(Metadata {
                    seed: Some(*seed),
                    provenance: Some("bowforge gen".into()),
                }),
            };
            write(output, &io::serialize(&file)?)?;
            Ok(Outcome {
                passed: true,
                human: vec![format!("wrote {} (dims {:?})", output.display(), file.datum.dims.d)],
                machine: json!({ "output": output.display().to_string(), "d": file.datum.dims.d, "dn": file.datum.dims.dn }),
            })
        }
        Command::Fiber { bow, xi, eta } => {
            let f = load(bow)?;
            let b = &f.datum;
            let x = SurfacePoint::from_xi_eta(*xi, *eta, &b.topo.z)?;
            let m = assemble_monad(b, &x)?;
            let fiber = fiber_of(&m)?;
            let lf = local_freeness_of(&m)?;
            let n = b.n();
            let passed = fiber.rank == n && lf.pass;
            let basis: Vec<Vec<[f64; 2]>> = fiber
                .basis
                .column_iter()
                .map(|col| col.iter().map(|z| [z.re, z.im]).collect())
                .collect();
            Ok(Outcome {
                passed,
                human: vec![
                    format!("point: xi = {}, psi = {}, eta = {}", cstr(x.xi), cstr(x.psi), cstr(x.eta)),
                    format!("fiber rank {} (expected {n})  {}", fiber.rank, mark(fiber.rank == n)),
                    format!(
                        "locally free: {}  (dim ker = {}, generic {})",
                        mark(lf.pass),
                        lf.kernel_dim,
                        lf.expected_kernel
                    ),
                    format!("composition residual {:.3e}", fiber.composition_residual),
                ],
                machine: json!({
                    "point": x, "rank": fiber.rank, "expected_rank": n,
                    "locally_free": lf.pass, "kernel_dim": lf.kernel_dim, "mu_rank": lf.mu_rank,
                    "composition_residual": fiber.composition_residual, "basis_columns": basis,
                    "verdict": passed
                }),
            })
        }
        Command::Scan {
            bow,
            samples,
            seed,
            random_only,
        } => {
            let f = load(bow)?;
            let cfg = ScanConfig {
                samples: *samples,
                structured: !random_only,
                seed: *seed,
            };
            let rep = scan_local_freeness(&f.datum, &cfg)?;
            let passed = rep.all_pass() && rep.ranks_ok() && rep.indeterminate.is_empty();
            let mut human = vec![format!(
                "{} points, expected rank {}, {} failures, {} indeterminate",
                rep.points.len(),
                rep.expected_rank,
                rep.failures().count(),
                rep.indeterminate.len()
            )];
            for p in rep.points.iter().filter(|p| {
                p.status != bowforge::monad::PointStatus::Pass || p.fiber_rank != Some(rep.expected_rank)
            }) {
                human.push(format!(
                    "  eta = {}, xi = {}: {:?}, rank {:?}",
                    cstr(p.point.eta),
                    cstr(p.point.xi),
                    p.status,
                    p.fiber_rank
                ));
            }
            human.push(format!("verdict: {}", mark(passed)));
            Ok(Outcome {
                passed,
                machine: json!({ "scan": rep, "verdict": passed }),
                human,
            })
        }
        Command::Pairing { bow, points, seed } => {
            let f = load(bow)?;
            let Some(p) = &f.pairing else {
                return Err(Fatal::Io(format!("{} has no pairing datum", bow.display())));
            };
            let b = &f.datum;
            let t = tol(1e-8);
            let rep = verify_pairing_relations(b, p, t)?;
            let mut human = report_lines(&rep);
            let mut rng = rng_from_seed(*seed);
            let mut forms = Vec::new();
            let mut forms_ok = true;
            let mut gram_worst: f64 = 0.0;
            for x in random_points(b, *points, &mut rng)? {
                gram_worst = gram_worst.max(gram_symmetry_defect(b, p, x.eta)?);
                match fiber_form(b, p, &x, 1e-6) {
                    Ok(ff) => {
                        forms_ok &= ff.symmetric;
                        forms.push(json!({
                            "eta": [x.eta.re, x.eta.im], "symmetry_defect": ff.symmetry_defect,
                            "sigma_min": ff.sigma_min, "symmetric": ff.symmetric
                        }));
                    }
                    Err(e @ Error::DegenerateForm { .. }) => {
                        forms_ok = false;
                        forms.push(json!({ "eta": [x.eta.re, x.eta.im], "error": e.to_string() }));
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            let gram_ok = gram_worst < 1e-10;
            human.push(format!("gram symmetry defect {gram_worst:.3e}  {}", mark(gram_ok)));
            human.push(format!(
                "fiber form ({} points, {}): {}",
                forms.len(),
                if p.flavor == bowforge::orthosymplectic::Flavor::So { "symmetric" } else { "antisymmetric" },
                mark(forms_ok)
            ));
            let passed = rep.verdict && forms_ok && gram_ok;
            human.push(format!("overall: {}", mark(passed)));
            Ok(Outcome {
                passed,
                machine: json!({
                    "flavor": p.flavor, "relations": rep, "gram_symmetry_defect": gram_worst,
                    "fiber_forms": forms, "verdict": passed
                }),
                human,
            })
        }
        Command::ExportBow { bow, output } => {
            let f = load(bow)?;
            let doc = io::export_bow_complex(&f.datum)?;
            write(output, &doc.to_canonical()?)?;
            Ok(Outcome {
                passed: true,
                human: vec![format!("wrote {}", output.display())],
                machine: json!({ "output": output.display().to_string() }),
            })
        }
        Command::Canonical { name, output } => {
            let Some(name) = name else {
                let names: Vec<&str> = canonical_examples().iter().map(|e| e.name).collect();
                return Ok(Outcome {
                    passed: true,
                    human: names.iter().map(|s| s.to_string()).collect(),
                    machine: json!({ "examples": names }),
                });
            };
            let e = canonical_example(name).ok_or_else(|| Fatal::Io(format!("no canonical example named {name:?}")))?;
            let file = BowFile {
                datum: e.datum,
                pairing: e.pairing,
                metadata: Some(Metadata {
                    seed: None,
                    provenance: Some(format!("canonical:{name}")),
                }),
            };
            let text = io::serialize(&file)?;
            match output {
                Some(path) => write(path, &text)?,
                None => print!("{text}"),
            }
            Ok(Outcome {
                passed: true,
                human: vec![],
                machine: Value::Null,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            match cli.format {
                Format::Human => {
                    for l in &out.human {
                        println!("{l}");
                    }
                }
                Format::Machine if out.machine.is_null() => {}
                Format::Machine => println!("{}", serde_json::to_string_pretty(&out.machine).expect("json encodes")),
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            if cli.format == Format::Machine {
                println!("{}", json!({ "error": e.to_string() }));
            }
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
