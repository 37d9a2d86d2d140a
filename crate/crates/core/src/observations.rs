use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One node's treatment, outcome and covariate stratum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeObservation {
    pub z: u8,
    pub y: f64,
    pub x: u32,
}

/// Column-oriented per-node data, indexed by dense node id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Observations {
    z: Vec<u8>,
    y: Vec<f64>,
    x: Vec<u32>,
}

impl Observations {
    pub fn new(z: Vec<u8>, y: Vec<f64>, x: Vec<u32>) -> Result<Self> {
        if z.len() != y.len() || z.len() != x.len() {
            return Err(Error::Input(format!(
                "column lengths differ: z={}, y={}, x={}",
                z.len(),
                y.len(),
                x.len()
            )));
        }
        if let Some(i) = z.iter().position(|&t| t > 1) {
            return Err(Error::Input(format!("treatment at node {i} is not 0/1")));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("outcome at node {i} is not finite")));
        }
        Ok(Self { z, y, x })
    }

    /// Single covariate stratum.
    pub fn unstratified(z: Vec<u8>, y: Vec<f64>) -> Result<Self> {
        let x = vec![0; z.len()];
        Self::new(z, y, x)
    }

    pub fn from_rows(rows: &[NodeObservation]) -> Result<Self> {
        Self::new(
            rows.iter().map(|r| r.z).collect(),
            rows.iter().map(|r| r.y).collect(),
            rows.iter().map(|r| r.x).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn z(&self) -> &[u8] {
        &self.z
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[u32] {
        &self.x
    }

    pub fn get(&self, i: usize) -> NodeObservation {
        NodeObservation {
            z: self.z[i],
            y: self.y[i],
            x: self.x[i],
        }
    }

    pub fn is_treated(&self, i: usize) -> bool {
        self.z[i] == 1
    }

    pub fn n_treated(&self) -> usize {
        self.z.iter().filter(|&&t| t == 1).count()
    }

    pub fn n_controls(&self) -> usize {
        self.len() - self.n_treated()
    }

    /// Same treatments and strata with replaced outcomes.
    pub fn with_outcomes(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(self.z.clone(), y, self.x.clone())
    }
}
