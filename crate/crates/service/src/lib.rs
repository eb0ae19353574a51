//! Local HTTP front end for interactive refocusing of one light-field dataset.
//!
//! The dataset and its disparity map are loaded once. Previews run only the
//! circle-of-confusion and bokeh stages, so they are cheap enough to call on every
//! slider movement. Full super-resolved renders are queued as jobs and executed one
//! at a time by a background worker that reports progress per solver iteration.

mod jobs;
mod params;
mod routes;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use lfr_core::disparity::{plane_sweep_disparity, DisparityEstimationParams};
use lfr_core::lf_data::{encode_png, load_disparity, load_light_field, read_meta};
use lfr_core::{DisparityMap, LightField};

pub use jobs::{JobState, RenderJob};
pub use params::{PreviewRequest, RenderRequest, DF_SLACK};
pub use routes::router;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Core(#[from] lfr_core::Error),
    #[error("disparity map {map_h}x{map_w} does not match the {view_h}x{view_w} views")]
    DisparitySize {
        map_h: usize,
        map_w: usize,
        view_h: usize,
        view_w: usize,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Everything the handlers read; immutable after startup.
pub struct Dataset {
    pub light_field: LightField,
    pub disparity: DisparityMap,
    /// The reference view encoded once, so `k = 0` previews match it byte for byte.
    pub center_png: Vec<u8>,
}

impl Dataset {
    pub fn new(light_field: LightField, disparity: DisparityMap) -> Result<Self, ServiceError> {
        if (disparity.height(), disparity.width()) != (light_field.height(), light_field.width()) {
            return Err(ServiceError::DisparitySize {
                map_h: disparity.height(),
                map_w: disparity.width(),
                view_h: light_field.height(),
                view_w: light_field.width(),
            });
        }
        let center_png = encode_png(light_field.reference())?;
        Ok(Self {
            light_field,
            disparity,
            center_png,
        })
    }

    /// Loads `dir`; the disparity comes from `disparity_file` or is estimated over the
    /// range recorded in `meta.json`.
    pub fn load(dir: &Path, disparity_file: Option<&Path>) -> Result<Self, ServiceError> {
        let light_field = load_light_field(dir)?;
        let disparity = match disparity_file {
            Some(path) => load_disparity(path)?,
            None => {
                let meta = read_meta(dir)?;
                plane_sweep_disparity(&light_field, &DisparityEstimationParams::for_range(meta.disparity_range))?
            }
        };
        Self::new(light_field, disparity)
    }
}

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    /// Where finished renders are written.
    pub results_dir: PathBuf,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            results_dir: std::env::temp_dir().join(format!("lfr-results-{}", std::process::id())),
        }
    }
}

/// Shared handler state.
#[derive(Clone)]
pub struct AppState {
    pub(crate) dataset: Arc<Dataset>,
    pub(crate) jobs: jobs::JobQueue,
}

impl AppState {
    /// Starts the render worker thread.
    pub fn new(dataset: Dataset, config: ServiceConfig) -> Result<Self, ServiceError> {
        std::fs::create_dir_all(&config.results_dir)?;
        let dataset = Arc::new(dataset);
        let jobs = jobs::JobQueue::start(Arc::clone(&dataset), config.results_dir);
        Ok(Self { dataset, jobs })
    }
}

/// Serves until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Blocking entry point used by the command-line tool.
pub fn run(dir: &Path, disparity_file: Option<&Path>, port: u16) -> Result<(), ServiceError> {
    let dataset = Dataset::load(dir, disparity_file)?;
    let state = AppState::new(dataset, ServiceConfig::default())?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], port))).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        serve(listener, state).await
    })?;
    Ok(())
}
