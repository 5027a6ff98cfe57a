//! Row-major wire representations for dense matrices and vectors.
//!
//! The serialized form is self-describing: a matrix is `{rows, cols, data}`
//! with `data` in row-major order, a vector is a plain sequence. These
//! adapters are used via `#[serde(with = ...)]` on the domain types.

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Serialize, Deserialize)]
struct MatrixRepr<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

fn to_repr<T: Scalar + Serialize>(m: &DMatrix<T>) -> MatrixRepr<T> {
    let mut data = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            data.push(m[(i, j)]);
        }
    }
    MatrixRepr { rows: m.nrows(), cols: m.ncols(), data }
}

fn from_repr<T: Scalar, E: serde::de::Error>(r: MatrixRepr<T>) -> Result<DMatrix<T>, E> {
    if r.data.len() != r.rows * r.cols {
        return Err(E::custom(format!(
            "matrix payload holds {} entries, header says {}x{}",
            r.data.len(),
            r.rows,
            r.cols
        )));
    }
    Ok(DMatrix::from_row_slice(r.rows, r.cols, &r.data))
}

pub mod mat {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S, T>(m: &DMatrix<T>, s: S) -> Result<S::Ok, S::Error>
    where
        S: Serializer,
        T: Scalar + Serialize,
    {
        to_repr(m).serialize(s)
    }

    pub fn deserialize<'de, D, T>(d: D) -> Result<DMatrix<T>, D::Error>
    where
        D: Deserializer<'de>,
        T: Scalar + DeserializeOwned,
    {
        from_repr(MatrixRepr::<T>::deserialize(d)?)
    }
}

pub mod opt_mat {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S, T>(m: &Option<DMatrix<T>>, s: S) -> Result<S::Ok, S::Error>
    where
        S: Serializer,
        T: Scalar + Serialize,
    {
        m.as_ref().map(to_repr).serialize(s)
    }

    pub fn deserialize<'de, D, T>(d: D) -> Result<Option<DMatrix<T>>, D::Error>
    where
        D: Deserializer<'de>,
        T: Scalar + DeserializeOwned,
    {
        match Option::<MatrixRepr<T>>::deserialize(d)? {
            Some(r) => Ok(Some(from_repr(r)?)),
            None => Ok(None),
        }
    }
}

pub mod vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S, T>(v: &DVector<T>, s: S) -> Result<S::Ok, S::Error>
    where
        S: Serializer,
        T: Scalar + Serialize,
    {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D, T>(d: D) -> Result<DVector<T>, D::Error>
    where
        D: Deserializer<'de>,
        T: Scalar + DeserializeOwned,
    {
        Ok(DVector::from_vec(Vec::<T>::deserialize(d)?))
    }
}

pub mod vec_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S, T>(vs: &[DVector<T>], s: S) -> Result<S::Ok, S::Error>
    where
        S: Serializer,
        T: Scalar + Serialize,
    {
        let rows: Vec<&[T]> = vs.iter().map(|v| v.as_slice()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D, T>(d: D) -> Result<Vec<DVector<T>>, D::Error>
    where
        D: Deserializer<'de>,
        T: Scalar + DeserializeOwned,
    {
        let rows = Vec::<Vec<T>>::deserialize(d)?;
        Ok(rows.into_iter().map(DVector::from_vec).collect())
    }
}
