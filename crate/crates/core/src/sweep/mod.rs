//! Randomized conformance trials. With the `parallel` feature the trials of
//! a sweep run on the rayon pool; otherwise one after another. Each trial
//! draws from its own seeded generator, so outcomes do not depend on the
//! schedule.

pub mod edits;

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adaptation::AdaptationSession;
use crate::kernel::Model;
use crate::manager::fixture::webshop_container;
use crate::metamodels::build_target_metamodel;
use crate::platform::{canonical_order, EffectorCommand};
use crate::tgg::{Direction, SyncEngine};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub seed: u64,
    /// Edits or commands the trial generated.
    pub size: usize,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub trials: usize,
    pub failures: Vec<TrialOutcome>,
}

impl SweepReport {
    fn from_outcomes(outcomes: Vec<TrialOutcome>) -> Self {
        SweepReport {
            trials: outcomes.len(),
            failures: outcomes.into_iter().filter(|o| !o.passed).collect(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs `trial` once per seed, in parallel when the `parallel` feature is
/// on. Results are in seed order either way.
pub fn run_trials<F>(seeds: Range<u64>, trial: F) -> Vec<TrialOutcome>
where
    F: Fn(u64) -> TrialOutcome + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        seeds.into_par_iter().map(trial).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_trials_sequential(seeds, trial)
    }
}

/// Runs `trial` once per seed on the calling thread.
pub fn run_trials_sequential<F>(seeds: Range<u64>, trial: F) -> Vec<TrialOutcome>
where
    F: Fn(u64) -> TrialOutcome,
{
    seeds.map(trial).collect()
}

/// The web-shop source model with a synchronized target model.
pub fn fixture_engine() -> SyncEngine {
    let session = AdaptationSession::attach(webshop_container()).expect("fixture attaches");
    session.engine().clone()
}

/// Applies up to `max_edits` random source edits to the fixture, each
/// followed by a forward synchronization, and compares the result with a
/// batch transformation of the final source model.
pub fn incremental_vs_batch_trial(base: &SyncEngine, seed: u64, max_edits: usize) -> TrialOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut engine = base.clone();
    let n = rng.gen_range(1..=max_edits.max(1));
    let mut log = Vec::new();
    let fail = |log: &[edits::Edit], what: String| TrialOutcome {
        seed,
        size: log.len(),
        passed: false,
        detail: format!(
            "{what} after {:?}",
            log.iter()
                .map(|e| format!("{} {}", e.kind, e.subject))
                .collect::<Vec<_>>()
        ),
    };
    while log.len() < n {
        match edits::random_edit(&mut rng, engine.source_mut()) {
            Ok(Some(e)) => log.push(e),
            Ok(None) => continue,
            Err(e) => return fail(&log, format!("edit failed: {e}")),
        }
        if let Err(e) = engine.synchronize(Direction::Forward) {
            return fail(&log, format!("synchronize: {e}"));
        }
    }
    let mut batch = match SyncEngine::new(
        engine.rules().to_vec(),
        engine.source().clone(),
        Model::new(build_target_metamodel()),
    ) {
        Ok(b) => b,
        Err(e) => return fail(&log, format!("batch engine: {e}")),
    };
    if let Err(e) = batch.transform_batch(Direction::Forward) {
        return fail(&log, format!("batch transformation: {e}"));
    }
    if !batch.target().same_graph(engine.target()) {
        return fail(
            &log,
            format!(
                "targets differ: {:?}",
                batch.target().diff(engine.target(), 3)
            ),
        );
    }
    if batch.corr().signatures() != engine.corr().signatures() {
        return fail(&log, "correspondence differs".into());
    }
    if let Err(e) = engine.corr().check_indexes() {
        return fail(&log, format!("indexes: {e}"));
    }
    TrialOutcome {
        seed,
        size: log.len(),
        passed: true,
        detail: String::new(),
    }
}

/// `trials` incremental-versus-batch trials with seeds from `base_seed`.
pub fn incremental_vs_batch(base_seed: u64, trials: u64, max_edits: usize) -> SweepReport {
    let base = fixture_engine();
    SweepReport::from_outcomes(run_trials(base_seed..base_seed + trials, |s| {
        incremental_vs_batch_trial(&base, s, max_edits)
    }))
}

/// A random command multiset over a few subjects.
pub fn random_commands<R: Rng>(rng: &mut R, max: usize) -> Vec<EffectorCommand> {
    let subjects = ["a", "b", "c", "d"];
    let n = rng.gen_range(0..=max);
    (0..n)
        .map(|_| {
            let s = subjects.choose(rng).expect("non-empty").to_string();
            match rng.gen_range(0..10) {
                0 => EffectorCommand::Stop { module: s },
                1 => EffectorCommand::Unwire { connector: s },
                2 => EffectorCommand::Undeploy { module: s },
                3 => EffectorCommand::RemoveModule { module: s },
                4 => EffectorCommand::RemoveModuleType { module_type: s },
                5 => EffectorCommand::InstantiateModule {
                    module: s,
                    module_type: "T".into(),
                },
                6 => EffectorCommand::Deploy { module: s },
                7 => EffectorCommand::Wire {
                    connector: s,
                    reference: "r".into(),
                    interface: "i".into(),
                },
                8 => EffectorCommand::SetEntry {
                    entry: s,
                    value: "v".into(),
                },
                _ => EffectorCommand::Start { module: s },
            }
        })
        .collect()
}

/// Class rank of each command kind in canonical order, listed independently
/// of the implementation.
pub fn expected_rank(c: &EffectorCommand) -> u8 {
    const ORDER: [&str; 10] = [
        "Stop",
        "Unwire",
        "Undeploy",
        "RemoveModule",
        "RemoveModuleType",
        "InstantiateModule",
        "Deploy",
        "Wire",
        "SetEntry",
        "Start",
    ];
    ORDER
        .iter()
        .position(|n| *n == c.name())
        .expect("known command") as u8
}

/// Checks that canonical ordering of a random multiset is a permutation that
/// is sorted by class and, within a class, by subject, keeping the input
/// order among equal commands.
pub fn canonical_order_trial(seed: u64) -> TrialOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = random_commands(&mut rng, 40);
    let mut out = input.clone();
    canonical_order(&mut out);
    let mut expected: Vec<(usize, &EffectorCommand)> = input.iter().enumerate().collect();
    expected.sort_by(|(i, a), (j, b)| {
        (expected_rank(a), a.subject(), i).cmp(&(expected_rank(b), b.subject(), j))
    });
    let expected: Vec<EffectorCommand> = expected.into_iter().map(|(_, c)| c.clone()).collect();
    TrialOutcome {
        seed,
        size: input.len(),
        passed: out == expected,
        detail: if out == expected {
            String::new()
        } else {
            format!("got {out:?}")
        },
    }
}

pub fn canonical_order_sweep(base_seed: u64, trials: u64) -> SweepReport {
    SweepReport::from_outcomes(run_trials(
        base_seed..base_seed + trials,
        canonical_order_trial,
    ))
}

/// `text` with one to three random near-miss edits: deleted or duplicated
/// spans, replaced characters, swapped lines, stray keywords.
pub fn near_miss<R: Rng>(rng: &mut R, text: &str) -> String {
    const NOISE: [&str; 14] = [
        "{",
        "}",
        ";",
        ":",
        "->",
        ":=",
        "ctx ",
        "new ",
        "edge ",
        "rule ",
        "\"",
        "Foo",
        "Component",
        "+",
    ];
    let mut chars: Vec<char> = text.chars().collect();
    for _ in 0..rng.gen_range(1..=3) {
        let at = rng.gen_range(0..=chars.len());
        match rng.gen_range(0..5) {
            0 if !chars.is_empty() => {
                let end = (at + rng.gen_range(1..=12)).min(chars.len());
                chars.drain(at.min(end)..end);
            }
            1 => {
                let end = (at + rng.gen_range(1..=12)).min(chars.len());
                let span: Vec<char> = chars[at..end].to_vec();
                chars.splice(at..at, span);
            }
            2 if at < chars.len() => {
                chars[at] = *b"{};:.-+=\"x_9 ".choose(rng).expect("non-empty") as char
            }
            3 => {
                let mut lines: Vec<String> = chars
                    .iter()
                    .collect::<String>()
                    .lines()
                    .map(str::to_string)
                    .collect();
                if lines.len() > 1 {
                    let i = rng.gen_range(0..lines.len() - 1);
                    lines.swap(i, i + 1);
                }
                chars = lines.join("\n").chars().collect();
            }
            _ => {
                let noise = NOISE.choose(rng).expect("non-empty");
                chars.splice(at..at, noise.chars());
            }
        }
    }
    chars.into_iter().collect()
}

/// Parses a near miss of the shipped rules. Passes when the parser returns
/// without panicking, every diagnostic points inside the text, and accepted
/// input prints to text that parses back to the same rules.
pub fn dsl_fuzz_trial(seed: u64) -> TrialOutcome {
    use crate::dsl::{parse_rules, print_rules, BUILTIN_RULES};
    use crate::metamodels::build_source_metamodel;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let text = near_miss(&mut rng, BUILTIN_RULES);
    let (src, tgt) = (build_source_metamodel(), build_target_metamodel());
    let outcome = |passed: bool, detail: String| TrialOutcome {
        seed,
        size: text.len(),
        passed,
        detail,
    };
    let parsed = std::panic::catch_unwind(|| parse_rules(&text, &src, &tgt));
    match parsed {
        Err(_) => outcome(false, "parser panicked".into()),
        Ok(Ok(doc)) => {
            let printed = print_rules(&doc);
            match parse_rules(&printed, &src, &tgt) {
                Ok(again) if again == doc && print_rules(&again) == printed => {
                    outcome(true, String::new())
                }
                Ok(_) => outcome(false, "printed rules parse differently".into()),
                Err(d) => outcome(false, format!("printed rules do not parse: {d:?}")),
            }
        }
        Ok(Err(diags)) => {
            let lines: Vec<&str> = text.split('\n').collect();
            let inside = |line: usize, column: usize| {
                line >= 1
                    && line <= lines.len()
                    && column >= 1
                    && column <= lines[line - 1].chars().count() + 1
            };
            match diags.iter().find(|d| !inside(d.line, d.column)) {
                None if !diags.is_empty() => outcome(true, String::new()),
                None => outcome(false, "rejected without diagnostics".into()),
                Some(d) => outcome(false, format!("diagnostic outside the text: {d}")),
            }
        }
    }
}

pub fn dsl_fuzz_sweep(base_seed: u64, trials: u64) -> SweepReport {
    SweepReport::from_outcomes(run_trials(base_seed..base_seed + trials, dsl_fuzz_trial))
}
