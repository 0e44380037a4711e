//! Wire format for complex matrices: `{"rows", "cols", "re", "im"}`,
//! row-major, IEEE doubles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, ComplexMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let (rows, cols) = m.shape();
        MatrixJson {
            rows,
            cols,
            re: (0..rows).map(|i| (0..cols).map(|j| m[(i, j)].re).collect()).collect(),
            im: (0..rows).map(|i| (0..cols).map(|j| m[(i, j)].im).collect()).collect(),
        }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        let shape_ok = |part: &Vec<Vec<f64>>| {
            part.len() == j.rows && part.iter().all(|row| row.len() == j.cols)
        };
        if !shape_ok(&j.re) || !shape_ok(&j.im) {
            return Err(Error::DimensionMismatch(format!(
                "matrix JSON declares {}x{} but re/im arrays disagree",
                j.rows, j.cols
            )));
        }
        let m = ComplexMatrix::from_fn(j.rows, j.cols, |r, c| c64(j.re[r][c], j.im[r][c]));
        if !crate::linalg::is_finite(&m) {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }
}

/// serde adaptor for `ComplexMatrix` fields.
pub mod matrix_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexMatrix, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        ComplexMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_layout() {
        let m = ComplexMatrix::from_fn(2, 3, |i, j| c64((3 * i + j) as f64, -(j as f64)));
        let text = serde_json::to_string(&MatrixJson::from(&m)).unwrap();
        assert_eq!(
            text,
            r#"{"rows":2,"cols":3,"re":[[0.0,1.0,2.0],[3.0,4.0,5.0]],"im":[[-0.0,-1.0,-2.0],[-0.0,-1.0,-2.0]]}"#
        );
        let back: MatrixJson = serde_json::from_str(&text).unwrap();
        assert_eq!(ComplexMatrix::try_from(back).unwrap(), m);
    }

    #[test]
    fn ragged_rows_rejected() {
        let j = MatrixJson {
            rows: 2,
            cols: 2,
            re: vec![vec![1.0, 2.0], vec![3.0]],
            im: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        };
        assert!(matches!(
            ComplexMatrix::try_from(j),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
