//! Thin async client for the workbench service.
//!
//! ```no_run
//! # async fn demo() -> Result<(), voi_client::ClientError> {
//! let client = voi_client::Client::new("http://127.0.0.1:7431")?;
//! let model = voi_core::model::file::load_model("models/football.json")?;
//! let session = client.create_session(&(&model).into()).await?;
//! let evaluation = client.evaluate(&session.id).await?;
//! println!("{} {}", evaluation.body.optimal, evaluation.body.eu);
//! # Ok(())
//! # }
//! ```

use reqwest::{Method, StatusCode, Url};
use serde::de::DeserializeOwned;
use serde::Serialize;

use voi_core::model::file::ModelFile;
use voi_core::{FocusReport, ParamRef};
use voi_protocol::*;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    /// The service answered with a non-success status.
    #[error("{status}: {}", body.error)]
    Api { status: StatusCode, body: ErrorBody },
    #[error(transparent)]
    Http(#[from] reqwest::Error),
    #[error("invalid service url: {0}")]
    Url(String),
    #[error(transparent)]
    Core(#[from] voi_core::Error),
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Clone, Debug)]
pub struct Client {
    base: Url,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base: &str) -> Result<Self> {
        let base = Url::parse(base).map_err(|e| ClientError::Url(format!("{base}: {e}")))?;
        if base.cannot_be_a_base() {
            return Err(ClientError::Url(base.to_string()));
        }
        Ok(Client {
            base,
            http: reqwest::Client::new(),
        })
    }

    /// `segments` are percent-encoded individually, so parameter references
    /// can be passed verbatim.
    fn url(&self, segments: &[&str]) -> Url {
        let mut url = self.base.clone();
        url.path_segments_mut()
            .expect("base url checked in new")
            .pop_if_empty()
            .extend(segments);
        url
    }

    async fn send<T: DeserializeOwned>(&self, method: Method, url: Url, body: Option<&impl Serialize>) -> Result<T> {
        let mut req = self.http.request(method, url);
        if let Some(body) = body {
            req = req.json(body);
        }
        let res = req.send().await?;
        let status = res.status();
        if status.is_success() {
            return Ok(res.json().await?);
        }
        let text = res.text().await?;
        let body = serde_json::from_str(&text).unwrap_or(ErrorBody {
            error: text,
            diagnostics: Vec::new(),
        });
        Err(ClientError::Api { status, body })
    }

    async fn get<T: DeserializeOwned>(&self, segments: &[&str]) -> Result<T> {
        self.send(Method::GET, self.url(segments), None::<&()>).await
    }

    async fn post<T: DeserializeOwned>(&self, segments: &[&str], body: &impl Serialize) -> Result<T> {
        self.send(Method::POST, self.url(segments), Some(body)).await
    }

    pub async fn create_session(&self, model: &ModelFile) -> Result<SessionInfo> {
        self.post(&["sessions"], model).await
    }

    pub async fn session(&self, id: &str) -> Result<SessionInfo> {
        self.get(&["sessions", id]).await
    }

    pub async fn model(&self, id: &str) -> Result<ModelSnapshot> {
        self.get(&["sessions", id, "model"]).await
    }

    pub async fn refine(&self, id: &str, req: &RefineRequest) -> Result<MutationResponse> {
        self.post(&["sessions", id, "refine"], req).await
    }

    pub async fn annotate(&self, id: &str, target: &ParamRef, req: &AnnotationRequest) -> Result<MutationResponse> {
        let target = target.to_string();
        let url = self.url(&["sessions", id, "annotations", &target]);
        self.send(Method::PUT, url, Some(req)).await
    }

    pub async fn undo(&self, id: &str, expected_revision: Option<u64>) -> Result<MutationResponse> {
        self.post(&["sessions", id, "undo"], &UndoRequest { expected_revision })
            .await
    }

    pub async fn save(&self, id: &str, path: &str) -> Result<SaveResponse> {
        self.post(&["sessions", id, "save"], &SaveRequest { path: path.into() })
            .await
    }

    pub async fn evaluate(&self, id: &str) -> Result<Revisioned<Evaluation>> {
        self.get(&["sessions", id, "evaluate"]).await
    }

    pub async fn voi(&self, id: &str, req: &VoiRequest) -> Result<Revisioned<VoiResponse>> {
        self.post(&["sessions", id, "voi"], req).await
    }

    pub async fn focus(&self, id: &str, req: &FocusRequest) -> Result<Revisioned<FocusReport>> {
        self.post(&["sessions", id, "focus"], req).await
    }

    pub async fn rank(&self, id: &str, query: &RankQuery) -> Result<Revisioned<RankResponse>> {
        let mut url = self.url(&["sessions", id, "rank"]);
        url.query_pairs_mut()
            .append_pair("samples", &query.samples.to_string())
            .append_pair("seed", &query.seed.to_string());
        self.send(Method::GET, url, None::<&()>).await
    }

    pub async fn sweep(&self, id: &str, req: &SweepRequest) -> Result<Revisioned<SweepResponse>> {
        self.post(&["sessions", id, "sweep"], req).await
    }

    pub async fn bounds(&self, id: &str, req: &BoundsRequest) -> Result<Revisioned<BoundsResponse>> {
        self.post(&["sessions", id, "bounds"], req).await
    }

    pub async fn tabulate(&self, req: &TabulateRequest) -> Result<Tabulation> {
        self.post(&["distributions", "tabulate"], req).await
    }
}
