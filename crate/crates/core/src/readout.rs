//! Ridge-regularised linear readout with time decoding.
//!
//! Training solves
//! `min ||W_out (X~ - TE) - Y||^2 + lambda ||W_out||^2`, i.e.
//! `W_out = Y A^T (A A^T + lambda I)^-1` with `A = X~ - TE`, and prediction
//! subtracts the projected encoding of the prediction time from the state
//! before applying `W_out`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this condition number estimate the Cholesky route is abandoned in
/// favour of a pseudo-inverse.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Column-per-sample design: states and projected encodings are
/// `dim x samples`, targets `outputs x samples`.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrices {
    states: DMatrix<f64>,
    te: DMatrix<f64>,
    targets: DMatrix<f64>,
}

impl DesignMatrices {
    pub fn new(states: DMatrix<f64>, te: DMatrix<f64>, targets: DMatrix<f64>) -> Result<Self> {
        if states.shape() != te.shape() {
            return Err(Error::Dimension(format!(
                "states {:?} and encodings {:?} differ in shape",
                states.shape(),
                te.shape()
            )));
        }
        if states.ncols() != targets.ncols() {
            return Err(Error::Dimension(format!(
                "{} state columns but {} target columns",
                states.ncols(),
                targets.ncols()
            )));
        }
        if states.ncols() == 0 {
            return Err(Error::EmptyDataset("no training samples".into()));
        }
        for (name, m) in [("states", &states), ("time encodings", &te), ("targets", &targets)] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(name.into()));
            }
        }
        Ok(Self { states, te, targets })
    }

    /// Builds from per-sample vectors.
    pub fn from_samples(states: &[Vec<f64>], te: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<Self> {
        let cols = |v: &[Vec<f64>], what: &str| -> Result<DMatrix<f64>> {
            let rows = v.first().map_or(0, Vec::len);
            if v.iter().any(|c| c.len() != rows) {
                return Err(Error::Dimension(format!("ragged {what}")));
            }
            Ok(DMatrix::from_fn(rows, v.len(), |r, c| v[c][r]))
        };
        Self::new(cols(states, "states")?, cols(te, "encodings")?, cols(targets, "targets")?)
    }

    pub fn samples(&self) -> usize {
        self.states.ncols()
    }

    pub fn state_dim(&self) -> usize {
        self.states.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.targets.nrows()
    }

    /// `X~ - TE`.
    pub fn decoded(&self) -> DMatrix<f64> {
        &self.states - &self.te
    }

    pub fn targets(&self) -> &DMatrix<f64> {
        &self.targets
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Readout {
    /// `outputs x state_dim`.
    pub w_out: DMatrix<f64>,
    pub ridge: f64,
}

/// Which factorisation produced a readout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveRoute {
    Cholesky,
    PseudoInverse,
}

pub fn fit(design: &DesignMatrices, lambda: f64) -> Result<Readout> {
    fit_with_route(design, lambda).map(|(r, _)| r)
}

pub fn fit_with_route(design: &DesignMatrices, lambda: f64) -> Result<(Readout, SolveRoute)> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("ridge lambda must be >= 0, got {lambda}")));
    }
    let a = design.decoded();
    let dim = a.nrows();
    let mut gram = &a * a.transpose();
    for i in 0..dim {
        gram[(i, i)] += lambda;
    }
    let rhs = &a * design.targets.transpose();

    let chol = gram.clone().cholesky();
    let condition = chol.as_ref().map(|c| {
        let diag = c.l_dirty().diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
        (hi / lo).powi(2)
    });
    let (solution, route) = match (chol, condition) {
        (Some(c), Some(cond)) if cond <= CONDITION_LIMIT => (c.solve(&rhs), SolveRoute::Cholesky),
        _ if lambda == 0.0 => return Err(Error::SingularGram),
        _ => {
            let svd = gram.svd(true, true);
            let tol = f64::EPSILON * dim as f64 * svd.singular_values.max();
            let x = svd.solve(&rhs, tol).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            (x, SolveRoute::PseudoInverse)
        }
    };
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("readout weights".into()));
    }
    Ok((Readout { w_out: solution.transpose(), ridge: lambda }, route))
}

impl Readout {
    pub fn outputs(&self) -> usize {
        self.w_out.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.w_out.ncols()
    }

    /// `W_out (state - te_pre)`.
    pub fn decode(&self, state: &[f64], te_pre: &[f64]) -> Result<Vec<f64>> {
        if state.len() != self.state_dim() || te_pre.len() != self.state_dim() {
            return Err(Error::Dimension(format!(
                "readout expects {} dims, got state {} / encoding {}",
                self.state_dim(),
                state.len(),
                te_pre.len()
            )));
        }
        let diff = DVector::from_iterator(state.len(), state.iter().zip(te_pre).map(|(s, t)| s - t));
        Ok((&self.w_out * diff).iter().copied().collect())
    }

    /// Regularised objective `||W A - Y||^2 + lambda ||W||^2` on `design`.
    pub fn objective(&self, design: &DesignMatrices) -> f64 {
        let resid = &self.w_out * design.decoded() - design.targets();
        resid.norm_squared() + self.ridge * self.w_out.norm_squared()
    }
}
