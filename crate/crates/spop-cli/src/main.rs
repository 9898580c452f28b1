//! Batch front-end: parse systems, certificates, and programs; run checks,
//! synthesis, measurements, and embedding verification; emit machine-readable
//! reports.
//!
//! Exit codes: 0 certified/ok, 1 input error, 2 refuted or check failure,
//! 3 budget or fuel exhausted.

use std::collections::HashMap;
use std::io::Read;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand};
use serde::Serialize;

use spop::bwsc::{self, Word};
use spop::order::{check_compatibility, CompatError, Variant};
use spop::seq::{verify_embedding, EmbeddingError};
use spop::synth::{gen_family, synthesize_with_fixed, SearchBudget, SynthOutcome};
use spop::syntax::{
    check_declared_splits, parse_bwsc_program, parse_certificate, parse_ground_term,
    parse_pattern, parse_trs, print_certificate, print_rule, print_trs, ParsedTrs,
};
use spop::trs::{FuelExceeded, DEFAULT_FUEL};

#[derive(Parser)]
#[command(name = "spop", version, about = "Polynomial runtime-complexity certification for constructor rewrite systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a system against a certificate and report the certified degree
    Check {
        #[arg(long)]
        trs: String,
        #[arg(long)]
        cert: String,
        /// Override the certificate's order variant (spop | spop_ps)
        #[arg(long, value_parser = parse_variant)]
        variant: Option<Variant>,
    },
    /// Search for a certificate of minimal degree
    Synth {
        #[arg(long)]
        trs: String,
        /// Order variant to search with (spop | spop_ps)
        #[arg(long, value_parser = parse_variant, default_value = "spop")]
        variant: Variant,
        /// Cap on the certified degree (default: number of defined symbols)
        #[arg(long)]
        max_degree: Option<u64>,
        /// Time budget in milliseconds
        #[arg(long, default_value_t = 60_000)]
        budget_ms: u64,
        /// Cap on candidate assignments examined
        #[arg(long, default_value_t = u64::MAX)]
        max_candidates: u64,
        /// Write the found certificate to this file
        #[arg(long)]
        out_cert: Option<String>,
    },
    /// Tabulate innermost derivation heights for a start-term pattern
    Measure {
        #[arg(long)]
        trs: String,
        /// Start-term pattern, e.g. 'square(S^n(Z);)'
        #[arg(long)]
        pattern: String,
        /// Inclusive range of n, e.g. 1..25
        #[arg(long, value_parser = parse_range)]
        range: (u64, u64),
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Verify that every innermost step from a start term descends under the
    /// flattening interpretation
    EmbedCheck {
        #[arg(long)]
        trs: String,
        #[arg(long)]
        cert: String,
        /// Ground start term, e.g. 'square(S(S(Z)))'
        #[arg(long)]
        start: String,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Operations on word-algebra programs
    Bwsc {
        #[command(subcommand)]
        command: BwscCommand,
    },
    /// Print the lower-bound family of the given degree
    GenFamily {
        #[arg(long)]
        degree: u64,
    },
}

#[derive(Subcommand)]
enum BwscCommand {
    /// Evaluate a program on word arguments (words over 0/1, `e` for empty)
    Eval {
        #[arg(long)]
        prog: String,
        #[arg(long, default_value = "")]
        normals: String,
        #[arg(long, default_value = "")]
        safes: String,
    },
    /// Compile a program to a rewrite system plus certificate
    Compile {
        #[arg(long)]
        prog: String,
        #[arg(long)]
        out_trs: Option<String>,
        #[arg(long)]
        out_cert: Option<String>,
    },
    /// Compile and check: the certified degree must match the recursion nesting
    Check {
        #[arg(long)]
        prog: String,
    },
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| format!("unknown variant `{s}` (expected spop or spop_ps)"))
}

fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected START..END, got `{s}`"))?;
    let a = a.trim().parse::<u64>().map_err(|e| e.to_string())?;
    let b = b.trim().parse::<u64>().map_err(|e| e.to_string())?;
    if a > b {
        return Err("empty range".into());
    }
    Ok((a, b))
}

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_REFUTED: u8 = 2;
const EXIT_EXHAUSTED: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Check { trs, cert, variant } => cmd_check(&trs, &cert, variant),
        Command::Synth {
            trs,
            variant,
            max_degree,
            budget_ms,
            max_candidates,
            out_cert,
        } => cmd_synth(&trs, variant, max_degree, budget_ms, max_candidates, out_cert.as_deref()),
        Command::Measure {
            trs,
            pattern,
            range,
            fuel,
        } => cmd_measure(&trs, &pattern, range, fuel),
        Command::EmbedCheck {
            trs,
            cert,
            start,
            fuel,
        } => cmd_embed_check(&trs, &cert, &start, fuel),
        Command::Bwsc { command } => match command {
            BwscCommand::Eval {
                prog,
                normals,
                safes,
            } => cmd_bwsc_eval(&prog, &normals, &safes),
            BwscCommand::Compile {
                prog,
                out_trs,
                out_cert,
            } => cmd_bwsc_compile(&prog, out_trs.as_deref(), out_cert.as_deref()),
            BwscCommand::Check { prog } => cmd_bwsc_check(&prog),
        },
        Command::GenFamily { degree } => {
            let trs = gen_family(degree);
            print!("{}", print_trs(&trs, None));
            EXIT_OK
        }
    };
    ExitCode::from(code)
}

fn read_input(path: &str) -> Result<String, String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| format!("stdin: {e}"))?;
        return Ok(buf);
    }
    std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))
}

fn input_error(msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {msg}");
    EXIT_INPUT
}

fn load_trs(path: &str) -> Result<ParsedTrs, u8> {
    let src = read_input(path).map_err(input_error)?;
    parse_trs(&src).map_err(|e| input_error(format!("{path}:{e}")))
}

#[derive(Serialize)]
struct RuleSummary {
    rule: String,
    clause: &'static str,
}

#[derive(Serialize)]
struct CheckReport<'a> {
    verdict: &'static str,
    variant: &'a str,
    degree: u64,
    complexity: String,
    rules: Vec<RuleSummary>,
    elapsed_ms: u128,
}

#[derive(Serialize)]
struct FailureReport {
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    rule: Option<String>,
    reason: String,
    elapsed_ms: u128,
}

fn complexity_label(degree: u64) -> String {
    if degree == 0 {
        "O(1)".to_owned()
    } else {
        format!("O(n^{degree})")
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn cmd_check(trs_path: &str, cert_path: &str, variant: Option<Variant>) -> u8 {
    let started = Instant::now();
    let parsed = match load_trs(trs_path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let cert_src = match read_input(cert_path) {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    let mut cert = match parse_certificate(&cert_src, &parsed.trs) {
        Ok(c) => c,
        Err(e) => return input_error(format!("{cert_path}:{e}")),
    };
    if let Err(e) = check_declared_splits(&parsed, &cert) {
        return input_error(format!("{cert_path}: {}", e.msg));
    }
    if let Some(v) = variant {
        cert.variant = v;
    }
    match check_compatibility(&parsed.trs, &cert) {
        Ok(report) => {
            let rules = report
                .proofs
                .iter()
                .zip(parsed.trs.rules())
                .map(|(proof, rule)| RuleSummary {
                    rule: print_rule(&parsed.trs, Some(&cert.tiering), rule),
                    clause: proof.clause.name(),
                })
                .collect();
            print_json(&CheckReport {
                verdict: "certified",
                variant: cert.variant.as_str(),
                degree: report.degree,
                complexity: complexity_label(report.degree),
                rules,
                elapsed_ms: started.elapsed().as_millis(),
            });
            EXIT_OK
        }
        Err(CompatError::RuleFails { rule, failure }) => {
            print_json(&FailureReport {
                verdict: "refuted",
                rule: Some(print_rule(
                    &parsed.trs,
                    Some(&cert.tiering),
                    &parsed.trs.rules()[rule],
                )),
                reason: failure.obligation,
                elapsed_ms: started.elapsed().as_millis(),
            });
            EXIT_REFUTED
        }
        Err(e @ (CompatError::NotConstructorTrs | CompatError::Cert(_))) => input_error(e),
    }
}

#[derive(Serialize)]
struct SynthReport {
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    degree: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    complexity: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<String>,
    stats: spop::synth::SynthStats,
    elapsed_ms: u128,
}

fn cmd_synth(
    trs_path: &str,
    variant: Variant,
    max_degree: Option<u64>,
    budget_ms: u64,
    max_candidates: u64,
    out_cert: Option<&str>,
) -> u8 {
    let started = Instant::now();
    let parsed = match load_trs(trs_path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let budget = SearchBudget {
        max_candidates,
        time_limit: Duration::from_millis(budget_ms),
        max_degree: max_degree
            .unwrap_or_else(|| parsed.trs.defined_symbols().len() as u64),
    };
    let fixed: HashMap<_, _> = parsed.declared_masks.clone().into_iter().collect();
    match synthesize_with_fixed(&parsed.trs, variant, &budget, &fixed) {
        Ok(SynthOutcome::Certified {
            certificate,
            report,
            stats,
        }) => {
            let cert_text = print_certificate(&certificate, &parsed.trs);
            if let Some(path) = out_cert {
                if let Err(e) = std::fs::write(path, &cert_text) {
                    return input_error(format!("{path}: {e}"));
                }
            }
            print_json(&SynthReport {
                verdict: "certified",
                degree: Some(report.degree),
                complexity: Some(complexity_label(report.degree)),
                certificate: Some(cert_text),
                stats,
                elapsed_ms: started.elapsed().as_millis(),
            });
            EXIT_OK
        }
        Ok(SynthOutcome::NoCertificate {
            budget_exhausted,
            stats,
        }) => {
            let verdict = if budget_exhausted {
                "unknown"
            } else {
                "refuted-in-space"
            };
            print_json(&SynthReport {
                verdict,
                degree: None,
                complexity: None,
                certificate: None,
                stats,
                elapsed_ms: started.elapsed().as_millis(),
            });
            if budget_exhausted {
                EXIT_EXHAUSTED
            } else {
                EXIT_REFUTED
            }
        }
        Err(e) => input_error(e),
    }
}

fn cmd_measure(trs_path: &str, pattern: &str, range: (u64, u64), fuel: u64) -> u8 {
    let parsed = match load_trs(trs_path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let pat = match parse_pattern(pattern, &parsed.trs) {
        Ok(p) => p,
        Err(e) => return input_error(format!("pattern: {e}")),
    };
    println!("n,dh,status");
    let mut exhausted = false;
    for n in range.0..=range.1 {
        let term = pat.instantiate(n);
        if !parsed.trs.is_basic(&term) {
            return input_error(format!(
                "pattern instance at n={n} is not a basic term"
            ));
        }
        match parsed.trs.derivation_height(&term, fuel) {
            Ok(dh) => println!("{n},{dh},ok"),
            Err(FuelExceeded) => {
                exhausted = true;
                println!("{n},,fuel_exceeded");
            }
        }
    }
    if exhausted {
        EXIT_EXHAUSTED
    } else {
        EXIT_OK
    }
}

#[derive(Serialize)]
struct EmbedReport {
    verdict: &'static str,
    width: usize,
    steps: usize,
    elapsed_ms: u128,
}

fn cmd_embed_check(trs_path: &str, cert_path: &str, start: &str, fuel: u64) -> u8 {
    let started = Instant::now();
    let parsed = match load_trs(trs_path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let cert_src = match read_input(cert_path) {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    let cert = match parse_certificate(&cert_src, &parsed.trs) {
        Ok(c) => c,
        Err(e) => return input_error(format!("{cert_path}:{e}")),
    };
    if let Err(e) = check_declared_splits(&parsed, &cert) {
        return input_error(format!("{cert_path}: {}", e.msg));
    }
    let start_term = match parse_ground_term(start, &parsed.trs) {
        Ok(t) => t,
        Err(e) => return input_error(format!("start term: {e}")),
    };
    match verify_embedding(&parsed.trs, &cert, &start_term, fuel) {
        Ok(report) => {
            print_json(&EmbedReport {
                verdict: "verified",
                width: report.width,
                steps: report.steps.len(),
                elapsed_ms: started.elapsed().as_millis(),
            });
            EXIT_OK
        }
        Err(EmbeddingError::Fuel) => {
            print_json(&FailureReport {
                verdict: "exhausted",
                rule: None,
                reason: "fuel exhausted while exploring the derivation graph".into(),
                elapsed_ms: started.elapsed().as_millis(),
            });
            EXIT_EXHAUSTED
        }
        Err(e @ (EmbeddingError::StartNotInTn | EmbeddingError::Trs(_))) => input_error(e),
        Err(e) => {
            // compatibility failure or an embedding violation
            print_json(&FailureReport {
                verdict: "violation",
                rule: None,
                reason: e.to_string(),
                elapsed_ms: started.elapsed().as_millis(),
            });
            EXIT_REFUTED
        }
    }
}

fn parse_words(list: &str) -> Result<Vec<Word>, String> {
    if list.trim().is_empty() {
        return Ok(Vec::new());
    }
    list.split(',')
        .map(|w| {
            Word::parse(w.trim()).ok_or_else(|| format!("`{w}` is not a word over 0/1 (use `e` for the empty word)"))
        })
        .collect()
}

fn cmd_bwsc_eval(prog_path: &str, normals: &str, safes: &str) -> u8 {
    let src = match read_input(prog_path) {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    let expr = match parse_bwsc_program(&src) {
        Ok(e) => e,
        Err(e) => return input_error(format!("{prog_path}:{e}")),
    };
    let normals = match parse_words(normals) {
        Ok(w) => w,
        Err(e) => return input_error(e),
    };
    let safes = match parse_words(safes) {
        Ok(w) => w,
        Err(e) => return input_error(e),
    };
    match bwsc::eval(&expr, &normals, &safes) {
        Ok(w) => {
            println!("{w}");
            EXIT_OK
        }
        Err(e) => input_error(e),
    }
}

fn cmd_bwsc_compile(prog_path: &str, out_trs: Option<&str>, out_cert: Option<&str>) -> u8 {
    let src = match read_input(prog_path) {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    let expr = match parse_bwsc_program(&src) {
        Ok(e) => e,
        Err(e) => return input_error(format!("{prog_path}:{e}")),
    };
    let compiled = match bwsc::compile_to_trs(&expr) {
        Ok(c) => c,
        Err(e) => return input_error(e),
    };
    let trs_text = print_trs(&compiled.trs, Some(&compiled.certificate.tiering));
    let cert_text = print_certificate(&compiled.certificate, &compiled.trs);
    match (out_trs, out_cert) {
        (Some(tp), Some(cp)) => {
            if let Err(e) = std::fs::write(tp, &trs_text) {
                return input_error(format!("{tp}: {e}"));
            }
            if let Err(e) = std::fs::write(cp, &cert_text) {
                return input_error(format!("{cp}: {e}"));
            }
        }
        (Some(tp), None) => {
            if let Err(e) = std::fs::write(tp, &trs_text) {
                return input_error(format!("{tp}: {e}"));
            }
            print!("{cert_text}");
        }
        (None, Some(cp)) => {
            if let Err(e) = std::fs::write(cp, &cert_text) {
                return input_error(format!("{cp}: {e}"));
            }
            print!("{trs_text}");
        }
        (None, None) => {
            println!("# system");
            print!("{trs_text}");
            println!("# certificate");
            print!("{cert_text}");
        }
    }
    EXIT_OK
}

#[derive(Serialize)]
struct BwscCheckReport {
    verdict: &'static str,
    degree: u64,
    recursion_nesting: u64,
    rules: usize,
}

fn cmd_bwsc_check(prog_path: &str) -> u8 {
    let src = match read_input(prog_path) {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    let expr = match parse_bwsc_program(&src) {
        Ok(e) => e,
        Err(e) => return input_error(format!("{prog_path}:{e}")),
    };
    let compiled = match bwsc::compile_to_trs(&expr) {
        Ok(c) => c,
        Err(e) => return input_error(e),
    };
    match check_compatibility(&compiled.trs, &compiled.certificate) {
        Ok(report) => {
            print_json(&BwscCheckReport {
                verdict: "certified",
                degree: report.degree,
                recursion_nesting: expr.nesting_depth(),
                rules: compiled.trs.rules().len(),
            });
            EXIT_OK
        }
        Err(e) => {
            print_json(&FailureReport {
                verdict: "refuted",
                rule: None,
                reason: e.to_string(),
                elapsed_ms: 0,
            });
            EXIT_REFUTED
        }
    }
}
