use nalgebra::{DMatrix, DVector};

/// Controller-visible estimate: `Ŵ` and per-row Euclidean error radii.
#[derive(Clone, Debug, PartialEq)]
pub struct CommittedEstimate {
    pub w_hat: DMatrix<f64>,
    pub radii: DVector<f64>,
    pub delta: f64,
}

impl CommittedEstimate {
    pub fn row_norms(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.w_hat.nrows(),
            self.w_hat.row_iter().map(|r| r.norm()),
        )
    }
}

/// Accept a candidate only if no radius grows (ties accept).
pub fn gated_commit(
    current: &CommittedEstimate,
    w_hat: DMatrix<f64>,
    radii: DVector<f64>,
) -> CommittedEstimate {
    assert_eq!(current.w_hat.shape(), w_hat.shape(), "candidate Ŵ shape");
    assert_eq!(current.radii.len(), radii.len(), "candidate radii length");
    if radii.iter().zip(current.radii.iter()).all(|(new, old)| new <= old) {
        CommittedEstimate {
            w_hat,
            radii,
            delta: current.delta,
        }
    } else {
        current.clone()
    }
}
