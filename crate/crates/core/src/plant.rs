use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, EigenExtremes, LinalgError, Matrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("closed-loop matrix A - BK is not Hurwitz")]
    NotHurwitz,
    #[error("weight Q must be symmetric positive definite")]
    InvalidWeight,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Raw plant description `(A, B, K, Q)` as supplied by a user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantMatrices {
    pub a: Matrix,
    pub b: Matrix,
    pub k: Matrix,
    pub q: Matrix,
}

/// A stabilized plant with every constant the triggers and analysis need.
///
/// Built once from `(A, B, K, Q)`; `P` solves `A_cl^T P + P A_cl = -Q` with
/// `A_cl = A - BK`. Everything is immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantDesign {
    a: Matrix,
    b: Matrix,
    k: Matrix,
    q: Matrix,
    p: Matrix,
    a_cl: Matrix,
    bk: Matrix,
    pbk: Matrix,
    pb: Matrix,
    q_eig: EigenExtremes,
    p_eig: EigenExtremes,
    norm_a_cl: f64,
    norm_bk: f64,
    norm_pbk: f64,
}

impl PlantDesign {
    pub fn new(a: Matrix, b: Matrix, k: Matrix, q: Matrix) -> Result<Self, DesignError> {
        let n = a.rows();
        if !a.is_square() {
            return Err(DesignError::Dimension(format!(
                "A is {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if b.rows() != n {
            return Err(DesignError::Dimension(format!(
                "B has {} rows, A is {n}x{n}",
                b.rows()
            )));
        }
        let m = b.cols();
        if k.rows() != m || k.cols() != n {
            return Err(DesignError::Dimension(format!(
                "K is {}x{}, expected {m}x{n}",
                k.rows(),
                k.cols()
            )));
        }
        if q.rows() != n || q.cols() != n {
            return Err(DesignError::Dimension(format!(
                "Q is {}x{}, expected {n}x{n}",
                q.rows(),
                q.cols()
            )));
        }
        if !q.is_symmetric() || linalg::cholesky(&q).is_err() {
            return Err(DesignError::InvalidWeight);
        }

        let bk = b.matmul(&k)?;
        let a_cl = a.sub(&bk)?;
        let p = match linalg::solve_lyapunov(&a_cl, &q) {
            Ok(p) => p,
            Err(LinalgError::SingularSystem { .. } | LinalgError::NotPositiveDefinite) => {
                return Err(DesignError::NotHurwitz)
            }
            Err(e) => return Err(e.into()),
        };
        let pbk = p.matmul(&bk)?;
        let pb = p.matmul(&b)?;
        let q_eig = linalg::sym_eig_extremes(&q)?;
        let p_eig = linalg::sym_eig_extremes(&p)?;
        let norm_a_cl = linalg::spectral_norm(&a_cl)?;
        let norm_bk = linalg::spectral_norm(&bk)?;
        let norm_pbk = linalg::spectral_norm(&pbk)?;

        Ok(Self {
            a,
            b,
            k,
            q,
            p,
            a_cl,
            bk,
            pbk,
            pb,
            q_eig,
            p_eig,
            norm_a_cl,
            norm_bk,
            norm_pbk,
        })
    }

    pub fn from_matrices(m: PlantMatrices) -> Result<Self, DesignError> {
        Self::new(m.a, m.b, m.k, m.q)
    }

    /// The planar unstable benchmark plant: `A = [[0,1],[-2,3]]`, `B = [0,1]^T`,
    /// `K = [-1,4]`, `Q = I`. Closed-loop poles sit at `-0.5 ± 0.866i`.
    pub fn reference() -> Self {
        Self::from_matrices(PlantMatrices::reference()).expect("reference plant is stabilized")
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn k(&self) -> &Matrix {
        &self.k
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn p(&self) -> &Matrix {
        &self.p
    }

    pub fn a_cl(&self) -> &Matrix {
        &self.a_cl
    }

    pub fn bk(&self) -> &Matrix {
        &self.bk
    }

    pub fn pbk(&self) -> &Matrix {
        &self.pbk
    }

    pub fn pb(&self) -> &Matrix {
        &self.pb
    }

    pub fn q_eigen(&self) -> EigenExtremes {
        self.q_eig
    }

    pub fn p_eigen(&self) -> EigenExtremes {
        self.p_eig
    }

    pub fn norm_a_cl(&self) -> f64 {
        self.norm_a_cl
    }

    pub fn norm_bk(&self) -> f64 {
        self.norm_bk
    }

    pub fn norm_pbk(&self) -> f64 {
        self.norm_pbk
    }

    pub fn matrices(&self) -> PlantMatrices {
        PlantMatrices {
            a: self.a.clone(),
            b: self.b.clone(),
            k: self.k.clone(),
            q: self.q.clone(),
        }
    }

    /// `V(x) = x^T P x`.
    #[inline]
    pub fn lyapunov(&self, x: &[f64]) -> f64 {
        self.p.quad_form(x)
    }
}

impl PlantMatrices {
    pub fn reference() -> Self {
        Self {
            a: Matrix::from_rows(&[[0.0, 1.0], [-2.0, 3.0]]).unwrap(),
            b: Matrix::from_rows(&[[0.0], [1.0]]).unwrap(),
            k: Matrix::from_rows(&[[-1.0, 4.0]]).unwrap(),
            q: Matrix::identity(2),
        }
    }
}
