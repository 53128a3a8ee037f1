use serde::{Deserialize, Serialize};

use crate::kernel::Model;
use crate::metamodels::{build_target_metamodel, check_wellformedness};
use crate::platform::Adapter;
use crate::tgg::{Direction, SyncEngine};

/// Outcome of a cross-model consistency check. Empty `problems` means the
/// container, source, correspondence and target models agree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub problems: Vec<String>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Checks that `source` is the image of the container, that the target and
/// correspondence models equal a from-scratch forward transformation of
/// `source`, that both models are well-formed, and that no change is queued.
pub fn audit(engine: &SyncEngine, adapter: &Adapter) -> AuditReport {
    let mut problems = Vec::new();
    let source = engine.source();
    match crate::platform::source_model_of(adapter.container()) {
        Ok(image) if image.same_graph(source) => {}
        Ok(image) => problems.extend(
            image
                .diff(source, 5)
                .into_iter()
                .map(|d| format!("container/source: {d}")),
        ),
        Err(e) => problems.push(format!("container image: {e}")),
    }
    if adapter.container().pending_events() > 0 {
        problems.push(format!(
            "{} sensor events queued",
            adapter.container().pending_events()
        ));
    }
    if adapter.pending_commands(source) > 0 {
        problems.push(format!(
            "{} source changes not flushed",
            adapter.pending_commands(source)
        ));
    }
    for d in [Direction::Forward, Direction::Backward] {
        if engine.pending(d) > 0 {
            problems.push(format!("{} changes pending {d}", engine.pending(d)));
        }
    }
    let mut fresh_source = Model::new(source.metamodel().clone());
    if let Err(e) = fresh_source.patch_from(source) {
        problems.push(format!("copying source: {e}"));
    }
    match SyncEngine::new(
        engine.rules().to_vec(),
        fresh_source,
        Model::new(build_target_metamodel()),
    ) {
        Ok(mut batch) => match batch.transform_batch(Direction::Forward) {
            Ok(_) => {
                if !batch.target().same_graph(engine.target()) {
                    problems.extend(
                        batch
                            .target()
                            .diff(engine.target(), 5)
                            .into_iter()
                            .map(|d| format!("batch/incremental target: {d}")),
                    );
                }
                if batch.corr().signatures() != engine.corr().signatures() {
                    problems.push("correspondence differs from batch transformation".into());
                }
            }
            Err(e) => problems.push(format!("batch transformation: {e}")),
        },
        Err(e) => problems.push(format!("rule set: {e}")),
    }
    if let Err(e) = engine.corr().check_indexes() {
        problems.push(format!("correspondence indexes: {e}"));
    }
    for (name, model) in [("source", source), ("target", engine.target())] {
        match check_wellformedness(model) {
            Ok(v) if v.is_empty() => {}
            Ok(v) => problems.extend(v.iter().map(|v| format!("{name}: {v:?}"))),
            Err(e) => problems.push(format!("{name}: {e}")),
        }
        problems.extend(
            model
                .cardinality_violations()
                .iter()
                .map(|v| format!("{name}: {v:?}")),
        );
    }
    AuditReport { problems }
}
