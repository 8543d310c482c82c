//! JSON forms of matrices, instruments, POVMs and measurement models.
//!
//! Matrices are `{"dim": d, "entries": [[re, im], ...]}` in row-major order.
//! A non-square matrix carries an extra `"cols"` field and `dim` is its row count.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::instruments::{KrausInstrument, MeasurementModel, Povm};
use crate::operator::{c, ComplexMatrix, DensityOperator, Observable, StateVector};
use crate::{Error, NumericConfig, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn encode(m: &ComplexMatrix) -> Self {
        let (rows, cols) = m.shape();
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let z = m[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        Self {
            dim: rows,
            cols: (rows != cols).then_some(cols),
            entries,
        }
    }

    pub fn decode(&self) -> Result<ComplexMatrix> {
        let cols = self.cols.unwrap_or(self.dim);
        if self.entries.len() != self.dim * cols {
            return Err(Error::Malformed(format!(
                "matrix of shape {}x{} needs {} entries, found {}",
                self.dim,
                cols,
                self.dim * cols,
                self.entries.len()
            )));
        }
        if self.entries.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ComplexMatrix::from_fn(self.dim, cols, |i, j| {
            let [re, im] = self.entries[i * cols + j];
            c(re, im)
        }))
    }
}

pub fn encode_vector(v: &StateVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn decode_vector(entries: &[[f64; 2]]) -> Result<StateVector> {
    if entries.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(StateVector::from_iterator(
        entries.len(),
        entries.iter().map(|[re, im]| c(*re, *im)),
    ))
}

/// `#[serde(with = "codec::matrix")]` adapter for [`ComplexMatrix`] fields.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::encode(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexMatrix, D::Error> {
        MatrixJson::deserialize(d)?
            .decode()
            .map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "codec::vector")]` adapter for [`StateVector`] fields.
pub mod vector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &StateVector, s: S) -> std::result::Result<S::Ok, S::Error> {
        encode_vector(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<StateVector, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        decode_vector(&raw).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Observable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::encode(self.matrix()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Observable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = matrix::deserialize(d)?;
        Observable::new(m).map_err(serde::de::Error::custom)
    }
}

impl Serialize for DensityOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::encode(self.matrix()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = matrix::deserialize(d)?;
        DensityOperator::new(m).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentJson {
    pub outcomes: Vec<f64>,
    pub kraus: Vec<Vec<MatrixJson>>,
}

impl InstrumentJson {
    pub fn encode(instr: &KrausInstrument) -> Self {
        Self {
            outcomes: instr.outcomes().to_vec(),
            kraus: instr
                .kraus_sets()
                .iter()
                .map(|set| set.iter().map(MatrixJson::encode).collect())
                .collect(),
        }
    }

    pub fn decode(&self, cfg: &NumericConfig) -> Result<KrausInstrument> {
        let kraus = self
            .kraus
            .iter()
            .map(|set| set.iter().map(MatrixJson::decode).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        KrausInstrument::checked(self.outcomes.clone(), kraus, cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmJson {
    pub outcomes: Vec<f64>,
    pub effects: Vec<MatrixJson>,
}

impl PovmJson {
    pub fn encode(povm: &Povm) -> Self {
        Self {
            outcomes: povm.outcomes().to_vec(),
            effects: povm.effects().iter().map(MatrixJson::encode).collect(),
        }
    }

    pub fn decode(&self, cfg: &NumericConfig) -> Result<Povm> {
        let effects = self.effects.iter().map(MatrixJson::decode).collect::<Result<Vec<_>>>()?;
        Povm::checked(self.outcomes.clone(), effects, cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelJson {
    pub system_dim: usize,
    pub ancilla_dim: usize,
    pub ancilla_state: MatrixJson,
    pub unitary: MatrixJson,
    pub meter: MatrixJson,
}

impl ModelJson {
    pub fn encode(model: &MeasurementModel) -> Self {
        Self {
            system_dim: model.system_dim(),
            ancilla_dim: model.ancilla_dim(),
            ancilla_state: MatrixJson::encode(model.ancilla_state().matrix()),
            unitary: MatrixJson::encode(model.unitary()),
            meter: MatrixJson::encode(model.meter().matrix()),
        }
    }

    pub fn decode(&self, cfg: &NumericConfig) -> Result<MeasurementModel> {
        let sigma = DensityOperator::checked(self.ancilla_state.decode()?, cfg)?;
        if sigma.dim() != self.ancilla_dim {
            return Err(Error::DimensionMismatch {
                context: "ancilla state",
                expected: self.ancilla_dim,
                found: sigma.dim(),
            });
        }
        let meter = Observable::checked(self.meter.decode()?, cfg)?.with_label("M");
        MeasurementModel::checked(self.system_dim, sigma, self.unitary.decode()?, meter, cfg)
    }
}
