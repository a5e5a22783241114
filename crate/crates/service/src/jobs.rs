//! FIFO interpolation jobs keyed by the hash of their canonical request.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::Serialize;
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};
use tokio::sync::mpsc;

use seafloor_core::interp::{GridLimits, VoxelGrid};
use seafloor_core::pipeline::{
    prepare_interpolation, vsup_bins, InterpolationRequest, PreparedInterpolation, VsupBins,
};
use seafloor_core::vsup::VsupQuantizer;
use seafloor_core::Catalog;

use crate::error::ApiError;

/// Same requests (up to core id order) get the same id.
pub fn job_id(request: &InterpolationRequest) -> String {
    let canonical = serde_json::to_vec(&request.canonical()).expect("requests are serializable");
    hex::encode(&Sha256::digest(&canonical)[..16])
}

#[derive(Debug)]
pub struct JobOutput {
    pub grid: Arc<VoxelGrid>,
    /// The grid document exactly as written by the headless pipeline.
    pub grid_json: Box<RawValue>,
    pub vsup: VsupBins,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub enum JobState {
    Queued,
    Running,
    Done(Arc<JobOutput>),
    Failed(ApiError),
}

impl JobState {
    pub fn name(&self) -> &'static str {
        match self {
            JobState::Queued => "queued",
            JobState::Running => "running",
            JobState::Done(_) => "done",
            JobState::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Job {
    pub request: InterpolationRequest,
    pub state: JobState,
}

#[derive(Serialize)]
pub struct JobView<'a> {
    pub job_id: &'a str,
    pub status: &'static str,
    pub request: &'a InterpolationRequest,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warnings: Option<&'a [String]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<&'a RawValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vsup: Option<&'a VsupBins>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<&'a ApiError>,
}

impl Job {
    pub fn view<'a>(&'a self, job_id: &'a str) -> JobView<'a> {
        let (out, error) = match &self.state {
            JobState::Done(o) => (Some(o.as_ref()), None),
            JobState::Failed(e) => (None, Some(e)),
            _ => (None, None),
        };
        JobView {
            job_id,
            status: self.state.name(),
            request: &self.request,
            warnings: out.map(|o| o.warnings.as_slice()),
            grid: out.map(|o| o.grid_json.as_ref()),
            vsup: out.map(|o| &o.vsup),
            error,
        }
    }
}

struct Work {
    id: String,
    prepared: PreparedInterpolation,
    quantizer: VsupQuantizer,
    value_range: (f64, f64),
}

/// Job table plus a fixed pool of workers draining one FIFO channel.
pub struct JobQueue {
    jobs: Mutex<HashMap<String, Job>>,
    tx: mpsc::UnboundedSender<Work>,
    limits: GridLimits,
}

impl JobQueue {
    /// Spawns `concurrency` workers on the current tokio runtime.
    pub fn start(concurrency: usize, limits: GridLimits) -> Arc<Self> {
        let (tx, rx) = mpsc::unbounded_channel::<Work>();
        let queue = Arc::new(Self {
            jobs: Mutex::new(HashMap::new()),
            tx,
            limits,
        });
        let rx = Arc::new(tokio::sync::Mutex::new(rx));
        for _ in 0..concurrency.max(1) {
            let rx = rx.clone();
            let weak = Arc::downgrade(&queue);
            tokio::spawn(async move {
                loop {
                    let Some(work) = rx.lock().await.recv().await else {
                        break;
                    };
                    let Some(queue) = weak.upgrade() else { break };
                    queue.set_state(&work.id, JobState::Running);
                    let id = work.id.clone();
                    let state = tokio::task::spawn_blocking(move || execute(work))
                        .await
                        .unwrap_or_else(|e| {
                            JobState::Failed(ApiError::internal(format!("job panicked: {e}")))
                        });
                    queue.set_state(&id, state);
                }
            });
        }
        queue
    }

    fn set_state(&self, id: &str, state: JobState) {
        if let Some(job) = self.jobs.lock().expect("job table poisoned").get_mut(id) {
            job.state = state;
        }
    }

    /// Validates and enqueues a request. Input errors are returned at once;
    /// a request already known (and not failed) reuses its job.
    pub fn submit(
        &self,
        catalog: &Catalog,
        request: InterpolationRequest,
    ) -> Result<String, ApiError> {
        let id = job_id(&request);
        if let Some(job) = self.get(&id) {
            if !matches!(job.state, JobState::Failed(_)) {
                return Ok(id);
            }
        }
        let quantizer = request.vsup.quantizer()?;
        let prepared = prepare_interpolation(catalog, &request, self.limits)?;
        let info = catalog
            .parameter(&request.parameter)
            .expect("prepare_interpolation checked the parameter");
        let work = Work {
            id: id.clone(),
            prepared,
            quantizer,
            value_range: (info.observed_min, info.observed_max),
        };
        self.jobs.lock().expect("job table poisoned").insert(
            id.clone(),
            Job {
                request,
                state: JobState::Queued,
            },
        );
        self.tx
            .send(work)
            .map_err(|_| ApiError::internal("job workers have stopped"))?;
        Ok(id)
    }

    pub fn get(&self, id: &str) -> Option<Job> {
        self.jobs
            .lock()
            .expect("job table poisoned")
            .get(id)
            .cloned()
    }
}

fn execute(work: Work) -> JobState {
    match work.prepared.run() {
        Ok(out) => {
            let vsup = vsup_bins(
                &out.grid,
                &work.quantizer,
                work.value_range.0,
                work.value_range.1,
            );
            let grid_json =
                RawValue::from_string(out.grid.to_json()).expect("grid documents are valid JSON");
            JobState::Done(Arc::new(JobOutput {
                grid: Arc::new(out.grid),
                grid_json,
                vsup,
                warnings: out.warnings,
            }))
        }
        Err(e) => JobState::Failed(e.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use seafloor_core::interp::Method;
    use seafloor_core::pipeline::VsupParams;

    fn request(ids: &[&str]) -> InterpolationRequest {
        InterpolationRequest {
            method: Method::Sibson,
            parameter: "Sulfide".into(),
            cell_xy_cm: 77,
            core_ids: ids.iter().map(|s| s.to_string()).collect(),
            padding_cells: 0,
            vsup: VsupParams::default(),
        }
    }

    #[test]
    fn job_ids_ignore_core_order() {
        assert_eq!(job_id(&request(&["A", "B"])), job_id(&request(&["B", "A"])));
        assert_ne!(job_id(&request(&["A", "B"])), job_id(&request(&["A"])));
        let mut linear = request(&["A", "B"]);
        linear.method = Method::Linear;
        assert_ne!(job_id(&linear), job_id(&request(&["A", "B"])));
        assert_eq!(job_id(&linear).len(), 32);
    }
}
