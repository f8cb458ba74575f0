use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;

use oplaceran_core::api::{ApiError, ErrorCode};
use oplaceran_core::catalogs::CatalogError;
use oplaceran_core::deployer::DeployError;
use oplaceran_core::optimizer::jobs::JobError;
use oplaceran_core::placer::PlacerError;

/// An [`ApiError`] together with its HTTP status.
#[derive(Debug)]
pub struct Failure {
    pub status: StatusCode,
    pub body: ApiError,
}

impl Failure {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        let status = match code {
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Conflict => StatusCode::CONFLICT,
            ErrorCode::Infeasible => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Failure {
            status,
            body: ApiError::new(code, message),
        }
    }

    pub fn detail(mut self, detail: impl serde::Serialize) -> Self {
        self.body = self.body.with_detail(detail);
        self
    }

    fn status(mut self, status: StatusCode) -> Self {
        self.status = status;
        self
    }
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<CatalogError> for Failure {
    fn from(e: CatalogError) -> Self {
        let msg = e.to_string();
        match e {
            CatalogError::Validation(v) => Failure::new(ErrorCode::BadRequest, msg).detail(v),
            CatalogError::Parse(_) | CatalogError::UnknownNode(_) | CatalogError::InvalidEntry { .. } => {
                Failure::new(ErrorCode::BadRequest, msg)
            }
            CatalogError::DuplicateId(_) | CatalogError::NoTopology => Failure::new(ErrorCode::Conflict, msg),
            CatalogError::MissingEntry(_) => Failure::new(ErrorCode::NotFound, msg),
            CatalogError::Io(_) => Failure::new(ErrorCode::Internal, msg),
        }
    }
}

impl From<JobError> for Failure {
    fn from(e: JobError) -> Self {
        let msg = e.to_string();
        match e {
            JobError::UnknownToken(_) => Failure::new(ErrorCode::NotFound, msg),
            JobError::UnknownSolver(_) => Failure::new(ErrorCode::BadRequest, msg),
            JobError::Validation(v) => Failure::new(ErrorCode::BadRequest, msg).detail(v),
            JobError::ShutDown | JobError::Io(_) => Failure::new(ErrorCode::Internal, msg),
        }
    }
}

impl From<DeployError> for Failure {
    fn from(e: DeployError) -> Self {
        let msg = e.to_string();
        match e {
            DeployError::InsufficientResources { .. } | DeployError::LinkOverCommit { .. } | DeployError::Busy(_) => {
                Failure::new(ErrorCode::Conflict, msg)
            }
            DeployError::UnknownDeployment(_) => Failure::new(ErrorCode::NotFound, msg),
            DeployError::UnknownNode(_)
            | DeployError::UnknownLink(_)
            | DeployError::MissingEntry(_)
            | DeployError::InvalidPlan(_)
            | DeployError::InvalidConfig(_) => Failure::new(ErrorCode::BadRequest, msg),
            DeployError::PodStartFailure(_) => Failure::new(ErrorCode::Internal, msg),
            DeployError::SimulatorUnavailable => {
                Failure::new(ErrorCode::Internal, msg).status(StatusCode::SERVICE_UNAVAILABLE)
            }
        }
    }
}

impl From<PlacerError> for Failure {
    fn from(e: PlacerError) -> Self {
        let msg = e.to_string();
        match e {
            PlacerError::UnknownRun(_) => Failure::new(ErrorCode::NotFound, msg),
            PlacerError::Validation(v) => Failure::new(ErrorCode::BadRequest, msg).detail(v),
            PlacerError::NotReady { .. } => Failure::new(ErrorCode::Conflict, msg),
            PlacerError::Infeasible { reason, .. } => Failure::new(ErrorCode::Infeasible, msg).detail(reason),
            PlacerError::Catalog(e) => e.into(),
            PlacerError::Deploy(e) => e.into(),
            PlacerError::Job(e) => e.into(),
        }
    }
}
