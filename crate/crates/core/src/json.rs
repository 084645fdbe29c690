//! JSON file formats.
//!
//! Matrix: `{"rows": n, "cols": m, "entries": [[re, im], ...]}`, row-major,
//! reals written with 17 significant digits. A state adds `"dim_a"` and
//! `"dim_b"` to the matrix object; a witness is
//! `{"c": c, "factors": [matrix, ...], "dim_a": n, "dim_b": m}`.

use serde::de::Error as _;
use serde::ser::{Error as _, SerializeSeq, SerializeStruct};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::cmatrix::{CMatrix, C64};
use crate::error::{Error, Result};
use crate::states::{DensityMatrix, PccSample};
use crate::witness::{make_witness, WitnessMap};

/// `x` with 17 significant digits, e.g. `2.5000000000000000e-1`.
pub fn format_real17(x: f64) -> String {
    format!("{x:.16e}")
}

/// `serialize_with` helper writing an `f64` with 17 significant digits.
pub fn real17<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return Err(S::Error::custom(format!("non-finite real {x}")));
    }
    let raw = RawValue::from_string(format_real17(*x)).map_err(S::Error::custom)?;
    raw.serialize(s)
}

struct Real17(f64);

impl Serialize for Real17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        real17(&self.0, s)
    }
}

struct Entries<'a>(&'a [C64]);

impl Serialize for Entries<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for z in self.0 {
            seq.serialize_element(&[Real17(z.re), Real17(z.im)])?;
        }
        seq.end()
    }
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("CMatrix", 3)?;
        st.serialize_field("rows", &self.rows())?;
        st.serialize_field("cols", &self.cols())?;
        st.serialize_field("entries", &Entries(self.entries()))?;
        st.end()
    }
}

#[derive(Deserialize)]
struct MatrixFile {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl TryFrom<MatrixFile> for CMatrix {
    type Error = Error;

    fn try_from(m: MatrixFile) -> Result<Self> {
        let data = m.entries.iter().map(|&[re, im]| C64::new(re, im)).collect();
        CMatrix::from_vec(m.rows, m.cols, data)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = MatrixFile::deserialize(d)?;
        CMatrix::try_from(m).map_err(D::Error::custom)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m = self.matrix();
        let mut st = s.serialize_struct("DensityMatrix", 5)?;
        st.serialize_field("dim_a", &self.dim_a())?;
        st.serialize_field("dim_b", &self.dim_b())?;
        st.serialize_field("rows", &m.rows())?;
        st.serialize_field("cols", &m.cols())?;
        st.serialize_field("entries", &Entries(m.entries()))?;
        st.end()
    }
}

#[derive(Deserialize)]
struct StateFile {
    dim_a: usize,
    dim_b: usize,
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

/// Parses and validates a state file.
pub fn state_from_json(text: &str) -> Result<DensityMatrix> {
    let f: StateFile = serde_json::from_str(text)?;
    let m = CMatrix::try_from(MatrixFile {
        rows: f.rows,
        cols: f.cols,
        entries: f.entries,
    })?;
    DensityMatrix::new(f.dim_a, f.dim_b, m)
}

pub fn state_to_json(rho: &DensityMatrix) -> Result<String> {
    Ok(serde_json::to_string_pretty(rho)?)
}

pub fn matrix_from_json(text: &str) -> Result<CMatrix> {
    Ok(serde_json::from_str(text)?)
}

pub fn matrix_to_json(m: &CMatrix) -> Result<String> {
    Ok(serde_json::to_string(m)?)
}

impl Serialize for WitnessMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("WitnessMap", 4)?;
        st.serialize_field("c", &Real17(self.c()))?;
        st.serialize_field("factors", self.factors())?;
        st.serialize_field("dim_a", &self.dim_a())?;
        st.serialize_field("dim_b", &self.dim_b())?;
        st.end()
    }
}

#[derive(Deserialize)]
struct WitnessFile {
    c: f64,
    factors: Vec<CMatrix>,
    dim_a: usize,
    dim_b: usize,
}

/// Parses and validates a witness file.
pub fn witness_from_json(text: &str) -> Result<WitnessMap> {
    let f: WitnessFile = serde_json::from_str(text)?;
    make_witness(f.c, f.factors, f.dim_a, f.dim_b)
}

pub fn witness_to_json(w: &WitnessMap) -> Result<String> {
    Ok(serde_json::to_string_pretty(w)?)
}

impl Serialize for PccSample {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let grid = CMatrix::from_real(self.dim_a, self.dim_b, &self.eigenvalues)
            .map_err(S::Error::custom)?;
        let mut st = s.serialize_struct("PccSample", 6)?;
        st.serialize_field("dim_a", &self.dim_a)?;
        st.serialize_field("dim_b", &self.dim_b)?;
        st.serialize_field("eigenvalues", &grid)?;
        st.serialize_field("basis_a", &self.basis_a)?;
        st.serialize_field("basis_b", &self.basis_b)?;
        st.serialize_field("p", &Real17(self.p()))?;
        st.end()
    }
}
