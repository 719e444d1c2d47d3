//! JSON matrix literals: `{"rows":n,"cols":m,"re":[...],"im":[...]}`, row-major.

use serde::{Deserialize, Serialize};

use crate::numkernel::{ComplexMatrix, LinalgError, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixLiteral {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    /// Omitted imaginary parts are read as zeros.
    #[serde(default)]
    pub im: Vec<f64>,
}

impl From<&ComplexMatrix> for MatrixLiteral {
    fn from(m: &ComplexMatrix) -> Self {
        let entries = m.to_row_major();
        Self {
            rows: m.rows(),
            cols: m.cols(),
            re: entries.iter().map(|z| z.re).collect(),
            im: entries.iter().map(|z| z.im).collect(),
        }
    }
}

impl TryFrom<&MatrixLiteral> for ComplexMatrix {
    type Error = LinalgError;

    fn try_from(lit: &MatrixLiteral) -> Result<Self, Self::Error> {
        let n = lit.rows * lit.cols;
        if lit.re.len() != n || !(lit.im.is_empty() || lit.im.len() == n) {
            return Err(LinalgError::Dimension(format!(
                "literal declares {}x{} but carries {} real and {} imaginary parts",
                lit.rows,
                lit.cols,
                lit.re.len(),
                lit.im.len()
            )));
        }
        let entries: Vec<C64> = (0..n)
            .map(|k| C64::new(lit.re[k], lit.im.get(k).copied().unwrap_or(0.0)))
            .collect();
        ComplexMatrix::from_row_major(lit.rows, lit.cols, &entries)
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        MatrixLiteral::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let lit = MatrixLiteral::deserialize(deserializer)?;
        ComplexMatrix::try_from(&lit).map_err(serde::de::Error::custom)
    }
}
