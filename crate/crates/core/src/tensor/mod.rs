//! Dense complex tensors with row/column mode partitions and the Einstein
//! product algebra.
//!
//! A tensor of shape `(I_1..I_M; J_1..J_N)` is stored flat in row-major
//! mixed-radix order (see [`Shape`]), so its matrix unfolding is simply the
//! flat buffer read as a `row_count x col_count` row-major matrix. Under that
//! map the Einstein product is matrix multiplication, and every spectral
//! quantity (singular values, Hermitian eigenvalues, inverses) is computed on
//! the unfolding.

mod io;
mod shape;

pub use io::{parse_tensor, write_tensor};
pub use shape::Shape;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Unitarily invariant norms evaluated on the unfolding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GaugeNorm {
    Frobenius,
    #[default]
    Spectral,
    Nuclear,
}

impl GaugeNorm {
    pub const ALL: [GaugeNorm; 3] = [GaugeNorm::Frobenius, GaugeNorm::Spectral, GaugeNorm::Nuclear];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor", into = "RawTensor")]
pub struct DenseTensor {
    shape: Shape,
    data: Vec<Complex64>,
}

/// JSON form: `{"rows": [..], "cols": [..], "re": [..], "im": [..]}` with
/// `im` optional (all zero when absent).
#[derive(Serialize, Deserialize)]
struct RawTensor {
    rows: Vec<usize>,
    cols: Vec<usize>,
    re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    im: Option<Vec<f64>>,
}

impl TryFrom<RawTensor> for DenseTensor {
    type Error = Error;
    fn try_from(raw: RawTensor) -> Result<Self> {
        let shape = Shape::new(raw.rows, raw.cols)?;
        let im = raw.im.unwrap_or_else(|| vec![0.0; raw.re.len()]);
        ensure!(
            im.len() == raw.re.len(),
            Shape,
            "re has {} entries but im has {}",
            raw.re.len(),
            im.len()
        );
        let data = raw
            .re
            .into_iter()
            .zip(im)
            .map(|(re, im)| Complex64::new(re, im))
            .collect();
        DenseTensor::new(shape, data)
    }
}

impl From<DenseTensor> for RawTensor {
    fn from(t: DenseTensor) -> Self {
        let im: Vec<f64> = t.data.iter().map(|z| z.im).collect();
        RawTensor {
            rows: t.shape.row_modes().to_vec(),
            cols: t.shape.col_modes().to_vec(),
            re: t.data.iter().map(|z| z.re).collect(),
            im: if im.iter().all(|&v| v == 0.0) { None } else { Some(im) },
        }
    }
}

fn check_same_shape(a: &DenseTensor, b: &DenseTensor) -> Result<()> {
    ensure!(
        a.shape == b.shape,
        Shape,
        "shape mismatch {} vs {}",
        a.shape,
        b.shape
    );
    Ok(())
}

impl DenseTensor {
    pub fn new(shape: Shape, data: Vec<Complex64>) -> Result<Self> {
        ensure!(
            data.len() == shape.len(),
            Shape,
            "{} entries supplied for shape {} ({} required)",
            data.len(),
            shape,
            shape.len()
        );
        ensure!(
            data.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            Domain,
            "tensor entries must be finite"
        );
        Ok(DenseTensor { shape, data })
    }

    pub fn from_real(shape: Shape, data: &[f64]) -> Result<Self> {
        DenseTensor::new(shape, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Build entry-by-entry from `(row, col)` unfolding indices.
    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let cols = shape.col_count();
        let data = (0..shape.len()).map(|k| f(k / cols, k % cols)).collect();
        DenseTensor::new(shape, data)
    }

    pub fn zeros(shape: Shape) -> Self {
        let data = vec![Complex64::new(0.0, 0.0); shape.len()];
        DenseTensor { shape, data }
    }

    /// Identity tensor: product of Kronecker deltas over paired modes.
    pub fn identity(shape: Shape) -> Result<Self> {
        ensure!(
            shape.is_square(),
            Shape,
            "identity requires row modes = col modes, got {shape}"
        );
        let mut t = DenseTensor::zeros(shape);
        let n = t.shape.row_count();
        for i in 0..n {
            t.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Ok(t)
    }

    /// Diagonal square tensor over `modes` with the given real diagonal.
    pub fn diagonal(modes: Vec<usize>, diag: &[f64]) -> Result<Self> {
        let shape = Shape::square(modes)?;
        let n = shape.row_count();
        ensure!(diag.len() == n, Shape, "diagonal needs {n} entries, got {}", diag.len());
        let mut t = DenseTensor::zeros(shape);
        for (i, &d) in diag.iter().enumerate() {
            t.data[i * n + i] = Complex64::new(d, 0.0);
        }
        DenseTensor::new(t.shape, t.data)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Flat entries in the documented row-major order.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// Entry at unfolding position `(row, col)`.
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.shape.col_count() + col]
    }

    /// Entry at multi-index `(i_1..i_M; j_1..j_N)`.
    pub fn get(&self, row_idx: &[usize], col_idx: &[usize]) -> Result<Complex64> {
        let r = Shape::linear_index(self.shape.row_modes(), row_idx)?;
        let c = Shape::linear_index(self.shape.col_modes(), col_idx)?;
        Ok(self.at(r, c))
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        check_same_shape(self, other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data,
        })
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        check_same_shape(self, other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data,
        })
    }

    pub fn scale(&self, c: f64) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn scale_complex(&self, c: Complex64) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    /// `self += c * other`, the accumulation used by the linear process
    /// generators.
    pub fn axpy(&mut self, c: f64, other: &DenseTensor) -> Result<()> {
        check_same_shape(self, other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * c;
        }
        Ok(())
    }

    /// Einstein product contracting `self`'s column modes against `other`'s
    /// row modes.
    ///
    /// Each output entry is accumulated from zero over the contracted
    /// index in ascending order, which is exactly the order of a plain
    /// row-by-column product of the unfoldings.
    pub fn einstein_product(&self, other: &DenseTensor) -> Result<DenseTensor> {
        ensure!(
            self.shape.col_modes() == other.shape.row_modes(),
            Shape,
            "contraction modes differ: {} vs {}",
            self.shape,
            other.shape
        );
        let rows = self.shape.row_count();
        let inner = self.shape.col_count();
        let cols = other.shape.col_count();
        let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
        for i in 0..rows {
            let arow = &self.data[i * inner..(i + 1) * inner];
            let orow = &mut out[i * cols..(i + 1) * cols];
            for (j, a) in arow.iter().enumerate() {
                let brow = &other.data[j * cols..(j + 1) * cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        let shape = Shape::new(
            self.shape.row_modes().to_vec(),
            other.shape.col_modes().to_vec(),
        )?;
        Ok(DenseTensor { shape, data: out })
    }

    pub fn conjugate_transpose(&self) -> DenseTensor {
        let rows = self.shape.row_count();
        let cols = self.shape.col_count();
        let mut data = vec![Complex64::new(0.0, 0.0); rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                data[j * rows + i] = self.data[i * cols + j].conj();
            }
        }
        DenseTensor {
            shape: self.shape.transposed(),
            data,
        }
    }

    pub fn trace(&self) -> Result<Complex64> {
        ensure!(self.shape.is_square(), Shape, "trace of non-square tensor {}", self.shape);
        let n = self.shape.row_count();
        Ok((0..n).map(|i| self.data[i * n + i]).sum())
    }

    /// `<a, b> = Tr(a^H * b)`, evaluated as the conjugated entrywise dot
    /// product (the diagonal of `a^H * b` summed in row order).
    pub fn inner_product(&self, other: &DenseTensor) -> Result<Complex64> {
        check_same_shape(self, other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm(&self, gauge: GaugeNorm) -> f64 {
        match gauge {
            GaugeNorm::Frobenius => self.frobenius_norm(),
            GaugeNorm::Spectral => self.singular_values().iter().cloned().fold(0.0, f64::max),
            GaugeNorm::Nuclear => self.singular_values().iter().sum(),
        }
    }

    pub fn singular_values(&self) -> Vec<f64> {
        if self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
            return vec![0.0; self.shape.row_count().min(self.shape.col_count())];
        }
        self.unfold().singular_values().iter().copied().collect()
    }

    pub fn unfold(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.shape.row_count(), self.shape.col_count(), &self.data)
    }

    pub fn fold(m: &DMatrix<Complex64>, shape: Shape) -> Result<DenseTensor> {
        ensure!(
            m.nrows() == shape.row_count() && m.ncols() == shape.col_count(),
            Shape,
            "matrix is {}x{}, shape {} needs {}x{}",
            m.nrows(),
            m.ncols(),
            shape,
            shape.row_count(),
            shape.col_count()
        );
        let data = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
            .collect();
        DenseTensor::new(shape, data)
    }

    /// Default Hermitian/unitary tolerance, `1e-10 * ||a||_F`.
    pub fn default_tolerance(&self) -> f64 {
        1e-10 * self.frobenius_norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if !self.shape.is_square() {
            return false;
        }
        let n = self.shape.row_count();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.data[i * n + j] - self.data[j * n + i].conj()).norm_sqr();
            }
        }
        acc.sqrt() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        if !self.shape.is_square() {
            return false;
        }
        let h = self.conjugate_transpose();
        let id = match DenseTensor::identity(self.shape.clone()) {
            Ok(id) => id,
            Err(_) => return false,
        };
        let close = |p: Result<DenseTensor>| {
            p.and_then(|p| p.sub(&id))
                .map(|d| d.frobenius_norm() <= tol)
                .unwrap_or(false)
        };
        close(h.einstein_product(self)) && close(self.einstein_product(&h))
    }

    /// Eigenvalues of the Hermitian unfolding, ascending.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        ensure!(
            self.is_hermitian(self.default_tolerance().max(1e-300)),
            Domain,
            "tensor is not Hermitian"
        );
        let m = self.unfold();
        let sym = (&m + m.adjoint()).scale(0.5);
        let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        Ok(ev)
    }

    pub fn lambda_max(&self) -> Result<f64> {
        Ok(*self.hermitian_eigenvalues()?.last().expect("nonempty"))
    }

    pub fn lambda_min(&self) -> Result<f64> {
        Ok(self.hermitian_eigenvalues()?[0])
    }

    pub fn inverse(&self) -> Result<DenseTensor> {
        ensure!(self.shape.is_square(), Shape, "inverse of non-square tensor {}", self.shape);
        let sv = self.singular_values();
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if smax == 0.0 || smin <= smax * 1e-13 {
            return Err(Error::Singular(format!(
                "unfolding has condition number above 1e13 (smin = {smin:e}, smax = {smax:e})"
            )));
        }
        let inv = self
            .unfold()
            .try_inverse()
            .ok_or_else(|| Error::Singular("LU factorization failed".into()))?;
        DenseTensor::fold(&inv, self.shape.clone())
    }
}
