//! Command-line front end for the solver pipeline.
//!
//! Exit status: 0 for SAT, ACCEPT, or plain success; 1 for UNSAT or REJECT;
//! 2 for usage errors, unreadable inputs, or failed validation.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use polycsp::algebra::{validate_gmm, validate_maltsev, OperationTable, PairKind};
use polycsp::certificate::{check_certificate, emit_certificate, parse_certificate, Trace};
use polycsp::instance::{parse_instance, Instance};
use polycsp::oracle::{
    enumerate_solutions, gen_coset, gen_lin_p, gen_random_invariant, GeneratedInstance,
    DEFAULT_BUDGET,
};
use polycsp::representation::signature_of_solutions;
use polycsp::solver::gmm::solve_gmm;
use polycsp::solver::maltsev::solve;
use polycsp::solver::SolveOutcome;

#[derive(Parser)]
#[command(name = "polycsp", version, about = "Mal'tsev and GMM constraint solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solves an instance; UNSAT runs can write a checkable certificate.
    Solve {
        /// Instance JSON file.
        #[arg(long)]
        instance: PathBuf,
        /// Operation table JSON file.
        #[arg(long)]
        algebra: PathBuf,
        /// Run the generalized majority-minority solver instead of Mal'tsev.
        #[arg(long)]
        gmm: bool,
        /// Where to write the certificate when the instance is unsatisfiable.
        #[arg(long)]
        cert: Option<PathBuf>,
        /// Machine-readable output.
        #[arg(long)]
        json: bool,
    },
    /// Replays a certificate against an instance and operation.
    Check {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        algebra: PathBuf,
        /// Certificate JSON file to verify.
        #[arg(long)]
        cert: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Generates a seeded instance and its operation table.
    Gen {
        /// Instance family to draw from.
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        seed: u64,
        /// Variable count.
        #[arg(long)]
        n: usize,
        /// Edge count.
        #[arg(long)]
        m: usize,
        /// Modulus for shift equations (lin-p only).
        #[arg(long)]
        p: Option<u8>,
        /// Domain size for random invariant relations (random only).
        #[arg(long)]
        q: Option<u8>,
        /// Plant a contradiction cycle instead of a solution (lin-p only).
        #[arg(long)]
        unsat: bool,
        /// Where to write the instance JSON.
        #[arg(long)]
        instance: PathBuf,
        /// Where to write the operation table JSON.
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Validates an operation table's identities.
    ValidateAlgebra {
        #[arg(long)]
        algebra: PathBuf,
        /// Check the generalized majority-minority laws instead of Mal'tsev.
        #[arg(long)]
        gmm: bool,
        #[arg(long)]
        json: bool,
    },
    /// Enumerates all solutions and prints the count and signature.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        /// Largest solution space the enumeration may scan.
        #[arg(long)]
        budget: Option<u128>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    /// Shift equations x_to = x_from + c mod p.
    LinP,
    /// Coset constraints over Z_4.
    Coset,
    /// Relations closed under the affine Mal'tsev operation.
    Random,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Solve {
            instance,
            algebra,
            gmm,
            cert,
            json,
        } => {
            let inst = read_instance(&instance)?;
            let op = read_algebra(&algebra)?;
            let outcome = if gmm {
                solve_gmm(&inst, &op)
            } else {
                solve(&inst, &op)
            }
            .map_err(|e| e.to_string())?;
            match outcome {
                SolveOutcome::Sat(witness) => {
                    let values = witness.values().to_vec();
                    if json {
                        print_json(&SolveReport {
                            verdict: "sat",
                            witness: Some(values),
                            trace_edges: None,
                            trace_witnesses: None,
                        });
                    } else {
                        println!("SAT {}", serde_json::to_string(&values).expect("array"));
                    }
                    Ok(ExitCode::SUCCESS)
                }
                SolveOutcome::Unsat(trace) => {
                    let edges = trace.reps().len() - 1;
                    let witnesses: usize = trace.reps().iter().map(|r| r.key_count()).sum();
                    if let Some(path) = cert {
                        write_file(&path, &emit_certificate(&trace))?;
                    }
                    if json {
                        print_json(&SolveReport {
                            verdict: "unsat",
                            witness: None,
                            trace_edges: Some(edges),
                            trace_witnesses: Some(witnesses),
                        });
                    } else {
                        println!("UNSAT trace over {edges} edges, {witnesses} stored witnesses");
                    }
                    Ok(ExitCode::from(1))
                }
            }
        }

        Command::Check {
            instance,
            algebra,
            cert,
            json,
        } => {
            let inst = read_instance(&instance)?;
            let op = read_algebra(&algebra)?;
            let text = read_file(&cert)?;
            let verdict = parse_certificate(&text)
                .and_then(|trace: Trace| check_certificate(&trace, &inst, &op));
            match verdict {
                Ok(()) => {
                    if json {
                        print_json(&CheckReport {
                            verdict: "accept",
                            reason: None,
                        });
                    } else {
                        println!("ACCEPT");
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    if json {
                        print_json(&CheckReport {
                            verdict: "reject",
                            reason: Some(e.to_string()),
                        });
                    } else {
                        println!("REJECT {e}");
                    }
                    Ok(ExitCode::from(1))
                }
            }
        }

        Command::Gen {
            family,
            seed,
            n,
            m,
            p,
            q,
            unsat,
            instance,
            algebra,
            json,
        } => {
            let generated = generate(family, seed, n, m, p, q, unsat)?;
            write_file(&instance, &generated.instance.to_canonical_json())?;
            write_file(&algebra, &generated.op.to_canonical_json())?;
            if json {
                print_json(&GenReport {
                    label: &generated.label,
                    planted: generated.planted.as_ref().map(|w| w.values().to_vec()),
                });
            } else {
                println!("generated {}", generated.label);
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::ValidateAlgebra { algebra, gmm, json } => {
            let op = read_algebra(&algebra)?;
            if gmm {
                match validate_gmm(&op) {
                    Ok(class) => {
                        let qv = class.q();
                        let pairs: Vec<Vec<&str>> = (0..qv)
                            .map(|a| {
                                (0..qv)
                                    .map(|b| match class.kind(a as u8, b as u8) {
                                        PairKind::Majority => "majority",
                                        PairKind::Minority => "minority",
                                    })
                                    .collect()
                            })
                            .collect();
                        if json {
                            print_json(&ValidateReport {
                                valid: true,
                                kind: "gmm",
                                k: Some(op.arity() - 1),
                                pairs: Some(pairs),
                                reason: None,
                            });
                        } else {
                            println!("valid gmm operation, k = {}", op.arity() - 1);
                            for (a, row) in pairs.iter().enumerate() {
                                println!("  {a}: {}", row.join(" "));
                            }
                        }
                        Ok(ExitCode::SUCCESS)
                    }
                    Err(e) => {
                        report_invalid(json, "gmm", &e.to_string());
                        Ok(ExitCode::from(1))
                    }
                }
            } else {
                match validate_maltsev(&op) {
                    Ok(()) => {
                        if json {
                            print_json(&ValidateReport {
                                valid: true,
                                kind: "maltsev",
                                k: None,
                                pairs: None,
                                reason: None,
                            });
                        } else {
                            println!("valid maltsev operation");
                        }
                        Ok(ExitCode::SUCCESS)
                    }
                    Err(e) => {
                        report_invalid(json, "maltsev", &e.to_string());
                        Ok(ExitCode::from(1))
                    }
                }
            }
        }

        Command::Oracle {
            instance,
            budget,
            json,
        } => {
            let inst = read_instance(&instance)?;
            let solutions = enumerate_solutions(&inst, budget.unwrap_or(DEFAULT_BUDGET))
                .map_err(|e| e.to_string())?;
            let signature: Vec<(usize, u8, u8)> =
                signature_of_solutions(&solutions, inst.n()).into_iter().collect();
            if json {
                print_json(&OracleReport {
                    count: solutions.len(),
                    signature,
                });
            } else {
                println!("{} solutions, {} signature triples", solutions.len(), signature.len());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn generate(
    family: Family,
    seed: u64,
    n: usize,
    m: usize,
    p: Option<u8>,
    q: Option<u8>,
    unsat: bool,
) -> Result<GeneratedInstance, String> {
    match family {
        Family::LinP => {
            let p = p.ok_or("lin-p needs --p")?;
            if p < 2 {
                return Err("--p must be at least 2".into());
            }
            if n < 2 || (unsat && (n < 3 || m < 3)) {
                return Err("lin-p needs n >= 2, and n, m >= 3 when unsatisfiable".into());
            }
            Ok(gen_lin_p(seed, n, p, m, !unsat))
        }
        Family::Coset => {
            if unsat || p.is_some() || q.is_some() {
                return Err("coset takes no --p, --q, or --unsat".into());
            }
            if n == 0 {
                return Err("coset needs at least one variable".into());
            }
            Ok(gen_coset(seed, n, m))
        }
        Family::Random => {
            let q = q.ok_or("random needs --q")?;
            if unsat || p.is_some() {
                return Err("random takes no --p or --unsat".into());
            }
            if n == 0 || q == 0 {
                return Err("random needs n >= 1 and q >= 1".into());
            }
            Ok(gen_random_invariant(seed, n, q, m))
        }
    }
}

#[derive(Serialize)]
struct SolveReport {
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_edges: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_witnesses: Option<usize>,
}

#[derive(Serialize)]
struct CheckReport {
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

#[derive(Serialize)]
struct GenReport<'a> {
    label: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    planted: Option<Vec<u8>>,
}

#[derive(Serialize)]
struct ValidateReport {
    valid: bool,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pairs: Option<Vec<Vec<&'static str>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

#[derive(Serialize)]
struct OracleReport {
    count: usize,
    signature: Vec<(usize, u8, u8)>,
}

fn report_invalid(json: bool, kind: &'static str, reason: &str) {
    if json {
        print_json(&ValidateReport {
            valid: false,
            kind,
            k: None,
            pairs: None,
            reason: Some(reason.to_string()),
        });
    } else {
        println!("invalid: {reason}");
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string(value).expect("report serializes"));
}

fn read_file(path: &PathBuf) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("writing {}: {e}", path.display()))
}

fn read_instance(path: &PathBuf) -> Result<Instance, String> {
    parse_instance(&read_file(path)?).map_err(|e| e.to_string())
}

fn read_algebra(path: &PathBuf) -> Result<OperationTable, String> {
    OperationTable::from_json_str(&read_file(path)?)
}
