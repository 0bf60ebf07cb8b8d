//! Precomputed per-bank data shared by the drivers.

use std::sync::Arc;

use crate::coiflet::{FilterBank, ScalingTables};
use crate::error::Result;
use crate::integrator::{gamma_weights, QuadratureWeights};
use crate::interval::{build_boundary_operators, BoundaryOperators};

/// Filter bank, scaling tables, boundary operators and step weights for one `(N, M1)`.
#[derive(Clone, Debug)]
pub struct Toolkit {
    pub bank: FilterBank,
    pub tables: Arc<ScalingTables>,
    pub ops: Arc<BoundaryOperators>,
    pub weights: QuadratureWeights,
}

impl Toolkit {
    pub fn new(bank: FilterBank, dyadic_level: usize) -> Result<Self> {
        let d = bank.spec.n.saturating_sub(1).max(1);
        let tables = ScalingTables::new(&bank, d, dyadic_level)?;
        let ops = build_boundary_operators(&tables)?;
        let weights = gamma_weights(&tables, &ops);
        Ok(Self { bank, tables: Arc::new(tables), ops: Arc::new(ops), weights })
    }

    /// Toolkit for an embedded bank with the default dyadic level.
    pub fn reference(n: usize, m1: usize) -> Result<Self> {
        Self::new(FilterBank::reference(n, m1)?, crate::coiflet::DEFAULT_DYADIC_LEVEL)
    }
}
