//! Render job registry and the single FIFO worker.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::mpsc;
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread;

use lfr_core::lf_data::save_png;
use lfr_core::pipeline::{refocus_with_progress, DisparitySource, PipelineConfig};
use serde::Serialize;

use crate::params::RenderRequest;
use crate::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct RenderJob {
    pub id: String,
    pub state: JobState,
    pub params: RenderRequest,
    /// Solver iterations completed.
    pub progress: usize,
    pub noi: usize,
    pub result_path: Option<PathBuf>,
    pub error: Option<String>,
}

struct Ticket {
    id: String,
    config: PipelineConfig,
}

#[derive(Clone)]
pub(crate) struct JobQueue {
    registry: Arc<Mutex<HashMap<String, RenderJob>>>,
    sender: mpsc::Sender<Ticket>,
    next_id: Arc<Mutex<u64>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    // a panicking handler must not take the registry down with it
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl JobQueue {
    pub(crate) fn start(dataset: Arc<Dataset>, results_dir: PathBuf) -> Self {
        let registry: Arc<Mutex<HashMap<String, RenderJob>>> = Arc::default();
        let (sender, receiver) = mpsc::channel::<Ticket>();
        let worker_registry = Arc::clone(&registry);
        thread::Builder::new()
            .name("lfr-render".into())
            .spawn(move || {
                for ticket in receiver {
                    run_job(&dataset, &worker_registry, &results_dir, ticket);
                }
            })
            .expect("spawn render worker");
        Self {
            registry,
            sender,
            next_id: Arc::default(),
        }
    }

    pub(crate) fn submit(&self, params: RenderRequest, config: PipelineConfig) -> String {
        let id = {
            let mut next = lock(&self.next_id);
            *next += 1;
            format!("job-{:06}", *next)
        };
        let job = RenderJob {
            id: id.clone(),
            state: JobState::Queued,
            params,
            progress: 0,
            noi: config.solver.noi,
            result_path: None,
            error: None,
        };
        lock(&self.registry).insert(id.clone(), job);
        if self.sender.send(Ticket { id: id.clone(), config }).is_err() {
            update(&self.registry, &id, |job| {
                job.state = JobState::Failed;
                job.error = Some("render worker is not running".into());
            });
        }
        id
    }

    pub(crate) fn get(&self, id: &str) -> Option<RenderJob> {
        lock(&self.registry).get(id).cloned()
    }
}

fn update(registry: &Mutex<HashMap<String, RenderJob>>, id: &str, f: impl FnOnce(&mut RenderJob)) {
    if let Some(job) = lock(registry).get_mut(id) {
        f(job);
    }
}

fn run_job(dataset: &Dataset, registry: &Mutex<HashMap<String, RenderJob>>, results_dir: &std::path::Path, ticket: Ticket) {
    let id = ticket.id;
    update(registry, &id, |job| job.state = JobState::Running);
    let source = DisparitySource::Provided(dataset.disparity.clone());
    let outcome = refocus_with_progress(&dataset.light_field, &ticket.config, &source, |t| {
        update(registry, &id, |job| job.progress = t);
    })
    .and_then(|result| {
        let path = results_dir.join(format!("{id}.png"));
        save_png(&result.output, &path)?;
        Ok(path)
    });
    update(registry, &id, |job| match outcome {
        Ok(path) => {
            job.state = JobState::Done;
            job.result_path = Some(path);
        }
        Err(e) => {
            job.state = JobState::Failed;
            job.error = Some(e.to_string());
        }
    });
}
