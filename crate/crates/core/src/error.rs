use crate::model::Offer;

/// Invalid model input.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("market must contain at least one firm")]
    EmptyMarket,
    #[error("firm index {index} out of range for a market of {len} firms")]
    FirmIndex { index: usize, len: usize },
    /// Every firm has zero selection weight, so no product can be selected.
    #[error("all selection weights are zero; no product is selectable")]
    AllWeightsZero,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid strategy space for firm {firm}: {reason}")]
    InvalidSpace { firm: usize, reason: String },
    #[error("invalid solver setting: {0}")]
    InvalidSetting(String),
    /// The feasible region yields no strictly positive profit. Carries the
    /// best nonpositive point found.
    #[error("no strictly positive profit reachable (best profit {profit:e})")]
    NoProfitablePoint { offer: Offer, profit: f64 },
    #[error("equilibrium iteration did not converge after {iterations} iterations (change {change:e}, residual {residual:e})")]
    NotConverged {
        iterations: usize,
        change: f64,
        residual: f64,
    },
    #[error("bisection failed: {0}")]
    Bracket(String),
}

pub(crate) fn check(
    name: &'static str,
    value: f64,
    ok: bool,
    reason: &'static str,
) -> Result<(), ModelError> {
    if ok && !value.is_nan() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}
