use std::path::PathBuf;
use std::process::ExitCode;

use lognls_cli::scenario::{self, RunReport};
use lognls_cli::CliError;

const USAGE: &str = "usage:
  lognls run <config>... [--out DIR] [--jobs N] [--seed K]
  lognls verify [--seed K] [--out DIR]
  lognls list-kinds

exit status 0 means every declared check of every scenario passed.";

struct RunArgs {
    configs: Vec<PathBuf>,
    out: PathBuf,
    jobs: usize,
    seed: u64,
}

fn parse_run_args(args: &[String]) -> Result<RunArgs, CliError> {
    let mut configs = Vec::new();
    let mut out = PathBuf::from("out");
    let mut jobs = 1usize;
    let mut seed = 0u64;
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--out" => {
                out = PathBuf::from(
                    it.next()
                        .ok_or_else(|| CliError::Usage("--out needs a value".into()))?,
                )
            }
            "--jobs" => {
                jobs = it
                    .next()
                    .and_then(|v| v.parse().ok())
                    .filter(|&v| v >= 1)
                    .ok_or_else(|| CliError::Usage("--jobs needs a positive integer".into()))?
            }
            "--seed" => {
                seed = it
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| CliError::Usage("--seed needs an integer".into()))?
            }
            other if other.starts_with("--") => {
                return Err(CliError::Usage(format!("unknown flag {other}")))
            }
            other => configs.push(PathBuf::from(other)),
        }
    }
    if configs.is_empty() {
        return Err(CliError::Usage("run needs at least one config path".into()));
    }
    Ok(RunArgs {
        configs,
        out,
        jobs,
        seed,
    })
}

fn print_report(report: &RunReport) {
    println!(
        "[{}] {} ({})",
        if report.passed { "PASS" } else { "FAIL" },
        report.name,
        report.out_dir.display()
    );
    for c in &report.checks {
        println!(
            "  {} {}: {}",
            if c.passed { "ok  " } else { "FAIL" },
            c.name,
            c.detail
        );
    }
}

fn cmd_run(args: RunArgs) -> Result<bool, CliError> {
    let mut outcomes: Vec<(PathBuf, Result<RunReport, CliError>)> = Vec::new();
    if args.jobs <= 1 || args.configs.len() <= 1 {
        for path in &args.configs {
            let res = scenario::run_config_file(path, &args.out, args.seed);
            outcomes.push((path.clone(), res));
        }
    } else {
        // scenarios are independent; distribute them over worker threads
        let queue = std::sync::Mutex::new(args.configs.iter().cloned().enumerate());
        let results = std::sync::Mutex::new(Vec::new());
        std::thread::scope(|scope| {
            for _ in 0..args.jobs.min(args.configs.len()) {
                scope.spawn(|| loop {
                    let next = { queue.lock().unwrap().next() };
                    let Some((idx, path)) = next else { break };
                    let res = scenario::run_config_file(&path, &args.out, args.seed);
                    results.lock().unwrap().push((idx, path, res));
                });
            }
        });
        let mut collected = results.into_inner().unwrap();
        collected.sort_by_key(|(idx, _, _)| *idx);
        outcomes = collected
            .into_iter()
            .map(|(_, path, res)| (path, res))
            .collect();
    }

    let mut all_passed = true;
    for (path, res) in outcomes {
        match res {
            Ok(report) => {
                all_passed &= report.passed;
                print_report(&report);
            }
            Err(err) => {
                all_passed = false;
                eprintln!("[ERROR] {}: {err}", path.display());
            }
        }
    }
    Ok(all_passed)
}

fn cmd_verify(args: &[String]) -> Result<bool, CliError> {
    let mut seed = 0u64;
    let mut out = PathBuf::from("out");
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--seed" => {
                seed = it
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| CliError::Usage("--seed needs an integer".into()))?
            }
            "--out" => {
                out = PathBuf::from(
                    it.next()
                        .ok_or_else(|| CliError::Usage("--out needs a value".into()))?,
                )
            }
            other => return Err(CliError::Usage(format!("unknown flag {other}"))),
        }
    }
    let report = scenario::run_config_text("kind = verify\n", &out, seed)?;
    print_report(&report);
    Ok(report.passed)
}

fn cmd_list_kinds() {
    for def in scenario::kinds() {
        println!("{}: {}", def.kind, def.about);
        for key in def.schema {
            let requirement = match (key.required, key.default) {
                (true, _) => "required".to_string(),
                (false, Some(d)) => format!("default {d}"),
                (false, None) => "optional".to_string(),
            };
            println!("    {} ({requirement}) - {}", key.name, key.help);
        }
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let outcome = match args.first().map(String::as_str) {
        Some("run") => parse_run_args(&args[1..]).and_then(cmd_run),
        Some("verify") => cmd_verify(&args[1..]),
        Some("list-kinds") => {
            cmd_list_kinds();
            Ok(true)
        }
        _ => {
            eprintln!("{USAGE}");
            return ExitCode::from(2);
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(CliError::Usage(msg)) => {
            eprintln!("{msg}\n\n{USAGE}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
