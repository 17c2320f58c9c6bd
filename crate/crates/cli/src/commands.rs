use std::path::Path;

use fsmkit::bench::matcher_benchmark;
use fsmkit::testing::DEFAULT_MAX_LEN;
use fsmkit::{
    annotate_trace, append_versioned, complement, emit_fsm_source, intersection, invariant_sweep,
    random_words, same_language, save_document, show_transitions, sm_test, transition_cover, union,
    Equivalence, InvariantBinding, Machine, MachineDocument, Metadata, Side, Symbol, TracePayload,
    Verdict as StepVerdict, Word,
};
use serde::Serialize;
use serde_json::json;

use crate::{load, CliError, Context, Format, Operation, Verdict};

type CommandResult = Result<Verdict, CliError>;

fn emit_json<T: Serialize>(value: &T) {
    let text = serde_json::to_string_pretty(value).expect("output values serialize");
    println!("{text}");
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

pub fn validate(ctx: &Context, file: &Path) -> CommandResult {
    let doc = load::machine_file(file)?;
    let m = &doc.machine;
    match ctx.format {
        Format::Text => {
            let dead = m.dead_state().map_or_else(
                || "no dead state".to_string(),
                |d| format!("dead state {d}"),
            );
            println!(
                "{}: valid, {} states ({dead}), {} symbols, {} rules, {} invariants",
                doc.name,
                m.states().len(),
                m.alphabet().len(),
                m.rules().len(),
                doc.invariants.len()
            );
        }
        Format::Structured => emit_json(&json!({
            "name": doc.name,
            "states": m.states(),
            "alphabet": m.alphabet(),
            "start": m.start(),
            "finals": m.finals(),
            "rules": m.rules(),
            "dead_state": m.dead_state(),
            "invariants": doc.invariants.to_sources(),
        })),
    }
    Ok(Verdict::Ok)
}

pub fn run(ctx: &Context, file: &Path, tape: &str) -> CommandResult {
    let doc = load::machine_file(file)?;
    let tape = load::tape(tape)?;
    let outcome = doc.machine.apply(&tape).map_err(invalid)?;
    match ctx.format {
        Format::Text => println!("{outcome}"),
        Format::Structured => emit_json(&json!({ "tape": tape, "outcome": outcome })),
    }
    Ok(if outcome.is_accept() {
        Verdict::Ok
    } else {
        Verdict::Negative
    })
}

pub fn trace(ctx: &Context, file: &Path, tape: &str, invariants: bool) -> CommandResult {
    let doc = load::machine_file(file)?;
    let tape = load::tape(tape)?;
    if !invariants {
        let trace = show_transitions(&doc.machine, &tape).map_err(invalid)?;
        match ctx.format {
            Format::Text => println!("{trace}"),
            Format::Structured => emit_json(&trace),
        }
        return Ok(if trace.outcome.is_accept() {
            Verdict::Ok
        } else {
            Verdict::Negative
        });
    }
    let annotated = annotate_trace(&doc.machine, &doc.invariants, &tape).map_err(invalid)?;
    let first_failure = annotated.first_failure();
    match ctx.format {
        Format::Text => {
            for (i, step) in annotated.steps.iter().enumerate() {
                let verdict = match step.verdict {
                    StepVerdict::Holds => "holds",
                    StepVerdict::Fails => "FAILS",
                    StepVerdict::Unbound => "-",
                };
                let via = step
                    .rule_used
                    .as_ref()
                    .map_or_else(String::new, |r| format!("  via {r}"));
                println!(
                    "{i:>3}  {} {} {}  {verdict}{via}",
                    step.consumed, step.unconsumed, step.state
                );
            }
            println!("{}", annotated.outcome);
            if let Some(i) = first_failure {
                println!("first invariant failure at step {i}");
            }
        }
        Format::Structured => print!("{}", TracePayload::new(tape, annotated).to_json()),
    }
    Ok(if first_failure.is_some() {
        Verdict::Negative
    } else {
        Verdict::Ok
    })
}

pub fn test(ctx: &Context, file: &Path, n: usize, seed: u64) -> CommandResult {
    let doc = load::machine_file(file)?;
    let report = sm_test(&doc.machine, n, seed);
    match ctx.format {
        Format::Text => println!("{report}"),
        Format::Structured => emit_json(&report),
    }
    Ok(Verdict::Ok)
}

pub fn cover(ctx: &Context, file: &Path) -> CommandResult {
    let doc = load::machine_file(file)?;
    let cover = transition_cover(&doc.machine);
    match ctx.format {
        Format::Text => {
            for c in &cover.covered {
                println!("{}  {}", c.rule, c.word);
            }
            for rule in &cover.uncovered {
                println!("{rule}  unreachable");
            }
        }
        Format::Structured => emit_json(&cover),
    }
    Ok(Verdict::Ok)
}

pub fn sweep(ctx: &Context, file: &Path, random: usize, seed: u64) -> CommandResult {
    let doc = load::machine_file(file)?;
    let extra =
        random_words(doc.machine.alphabet(), random, seed, DEFAULT_MAX_LEN).map_err(invalid)?;
    let report = invariant_sweep(&doc.machine, &doc.invariants, &extra).map_err(invalid)?;
    match ctx.format {
        Format::Text => {
            for f in &report.failures {
                let via = f
                    .rule_used
                    .as_ref()
                    .map_or_else(String::new, |r| format!(" after {r}"));
                println!(
                    "{}: invariant of {} fails at step {} on {}{via}",
                    f.word, f.state, f.step_index, f.consumed
                );
            }
            for rule in &report.transitions_uncovered {
                println!("{rule}: unreachable, not swept");
            }
            let status = if report.passed() { "passed" } else { "failed" };
            println!(
                "{status}: {} words, {} transitions covered, {} failing steps",
                report.words_run,
                report.transitions_covered,
                report.failures.len()
            );
        }
        Format::Structured => emit_json(&report),
    }
    Ok(if report.passed() {
        Verdict::Ok
    } else {
        Verdict::Negative
    })
}

pub fn equiv(ctx: &Context, first: &Path, second: &Path) -> CommandResult {
    let a = load::machine_file(first)?;
    let b = load::machine_file(second)?;
    let result = same_language(&a.machine, &b.machine).map_err(invalid)?;
    match ctx.format {
        Format::Text => match &result {
            Equivalence::Equivalent => println!("equivalent"),
            Equivalence::Counterexample { word, accepted_by } => {
                let (yes, no) = match accepted_by {
                    Side::First => (&a.name, &b.name),
                    Side::Second => (&b.name, &a.name),
                };
                println!("counterexample {word}: accepted by {yes}, rejected by {no}");
            }
        },
        Format::Structured => emit_json(&result),
    }
    Ok(match result {
        Equivalence::Equivalent => Verdict::Ok,
        Equivalence::Counterexample { .. } => Verdict::Failure,
    })
}

pub fn op(
    ctx: &Context,
    operation: Operation,
    files: &[std::path::PathBuf],
    output: Option<&Path>,
    name: Option<&str>,
) -> CommandResult {
    let docs = files
        .iter()
        .map(|f| load::machine_file(f))
        .collect::<Result<Vec<_>, _>>()?;
    let names: Vec<&str> = docs.iter().map(|d| d.name.as_str()).collect();
    let (machine, default_name): (Machine, String) = match operation {
        Operation::Complement => {
            let [doc] = docs.as_slice() else {
                return Err(CliError::Usage(
                    "complement takes exactly one machine".into(),
                ));
            };
            (complement(&doc.machine), format!("not-{}", doc.name))
        }
        Operation::Union | Operation::Intersection => {
            if docs.len() < 2 {
                return Err(CliError::Usage(
                    "union and intersection take at least two machines".into(),
                ));
            }
            let (combine, joiner): (fn(&Machine, &Machine) -> _, &str) =
                if operation == Operation::Union {
                    (union, "-or-")
                } else {
                    (intersection, "-and-")
                };
            let mut acc = docs[0].machine.clone();
            for doc in &docs[1..] {
                acc = combine(&acc, &doc.machine).map_err(invalid)?;
            }
            (acc, names.join(joiner))
        }
    };
    let name: Symbol = name
        .unwrap_or(&default_name)
        .parse()
        .map_err(|e| CliError::Invalid(format!("machine name: {e}")))?;
    let doc = MachineDocument::new(name, machine, InvariantBinding::new(), Metadata::now())
        .expect("results carry no invariants");
    let Some(path) = output else {
        print!("{}", save_document(&doc));
        return Ok(Verdict::Ok);
    };
    let text = if path.extension().is_some_and(|ext| ext == "fsmx") {
        save_document(&doc)
    } else {
        emit_fsm_source(&doc) + "\n"
    };
    std::fs::write(path, text)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    match ctx.format {
        Format::Text => println!(
            "wrote {} to {} ({} states)",
            doc.name,
            path.display(),
            doc.machine.states().len()
        ),
        Format::Structured => emit_json(&json!({
            "name": doc.name,
            "file": path,
            "states": doc.machine.states(),
        })),
    }
    Ok(Verdict::Ok)
}

pub fn gencode(ctx: &Context, file: &Path, output: Option<&Path>) -> CommandResult {
    let doc = load::machine_file(file)?;
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => fsmkit::io::fsm_source::generated_path(Path::new("."), &doc.name),
    };
    let revision = append_versioned(&path, &doc)
        .map_err(|e| CliError::Usage(format!("cannot append to {}: {e}", path.display())))?;
    match ctx.format {
        Format::Text => println!(
            "appended {} revision {revision} to {}",
            doc.name,
            path.display()
        ),
        Format::Structured => emit_json(&json!({ "file": path, "revision": revision })),
    }
    Ok(Verdict::Ok)
}

pub fn bench(ctx: &Context, pattern: &str, sizes: &[usize]) -> CommandResult {
    let pattern: Word = pattern
        .parse()
        .map_err(|e| CliError::Invalid(format!("pattern: {e}")))?;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(CliError::Usage("sizes must be positive".into()));
    }
    let table = matcher_benchmark(&pattern, sizes).map_err(invalid)?;
    match ctx.format {
        Format::Text => print!("{}", table.to_csv()),
        Format::Structured => emit_json(&table),
    }
    Ok(Verdict::Ok)
}
