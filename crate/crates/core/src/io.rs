//! JSON encoding of matrices: `{"rows": r, "cols": c, "data": [[re, im], ...]}`
//! with `data` in row-major order.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{DilationError, Result};
use crate::linalg::{ComplexMatrix, C64};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = DilationError;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.data.len() != j.rows * j.cols {
            return Err(DilationError::DimensionMismatch(format!(
                "matrix data has {} entries, expected {}x{}",
                j.data.len(),
                j.rows,
                j.cols
            )));
        }
        if j.data.iter().flatten().any(|x| !x.is_finite()) {
            return Err(DilationError::InvalidInstance(
                "matrix has non-finite entries".into(),
            ));
        }
        Ok(ComplexMatrix::from_fn(j.rows, j.cols, |r, c| {
            let [re, im] = j.data[r * j.cols + c];
            C64::new(re, im)
        }))
    }
}

pub fn matrix_to_json(m: &ComplexMatrix) -> serde_json::Value {
    serde_json::to_value(MatrixJson::from(m)).expect("matrix serializes")
}

pub fn matrix_from_json(v: &serde_json::Value) -> Result<ComplexMatrix> {
    let j: MatrixJson = serde_json::from_value(v.clone())?;
    j.try_into()
}

/// `#[serde(with = "crate::io::matrix")]`
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(
        m: &ComplexMatrix,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<ComplexMatrix, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        ComplexMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "crate::io::matrix_list")]`
pub mod matrix_list {
    use super::*;

    pub fn serialize<S: Serializer>(
        ms: &[ComplexMatrix],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let js: Vec<MatrixJson> = ms.iter().map(MatrixJson::from).collect();
        js.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<ComplexMatrix>, D::Error> {
        let js = Vec::<MatrixJson>::deserialize(d)?;
        js.into_iter()
            .map(|j| ComplexMatrix::try_from(j).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_row_major() {
        let m = ComplexMatrix::from_fn(2, 3, |i, j| C64::new(i as f64, j as f64 + 0.5));
        let v = matrix_to_json(&m);
        assert_eq!(v["data"][1], serde_json::json!([0.0, 1.5]));
        assert_eq!(matrix_from_json(&v).unwrap(), m);
    }

    #[test]
    fn rejects_wrong_length() {
        let v = serde_json::json!({"rows": 2, "cols": 2, "data": [[1.0, 0.0]]});
        assert!(matrix_from_json(&v).is_err());
    }
}
