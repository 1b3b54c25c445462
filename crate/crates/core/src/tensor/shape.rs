use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Mode extents of an order-(M+N) tensor, split into row modes `(I_1..I_M)`
/// and column modes `(J_1..J_N)`.
///
/// Index order is row-major mixed radix with the leftmost mode most
/// significant: the row index of `(i_1..i_M)` is
/// `((i_1 * I_2 + i_2) * I_3 + i_3) ...`, likewise for columns, and the flat
/// entry offset is `row * col_count + col`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawShape", into = "RawShape")]
pub struct Shape {
    row_modes: Vec<usize>,
    col_modes: Vec<usize>,
    row_count: usize,
    col_count: usize,
}

#[derive(Serialize, Deserialize)]
struct RawShape {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl TryFrom<RawShape> for Shape {
    type Error = Error;
    fn try_from(raw: RawShape) -> Result<Self> {
        Shape::new(raw.rows, raw.cols)
    }
}

impl From<Shape> for RawShape {
    fn from(s: Shape) -> Self {
        RawShape {
            rows: s.row_modes,
            cols: s.col_modes,
        }
    }
}

fn checked_product(modes: &[usize], what: &str) -> Result<usize> {
    modes.iter().try_fold(1usize, |acc, &m| {
        acc.checked_mul(m)
            .ok_or_else(|| Error::Shape(format!("{what} count overflows")))
    })
}

impl Shape {
    pub fn new(row_modes: Vec<usize>, col_modes: Vec<usize>) -> Result<Self> {
        ensure!(!row_modes.is_empty(), Shape, "at least one row mode is required");
        ensure!(!col_modes.is_empty(), Shape, "at least one column mode is required");
        ensure!(
            row_modes.iter().chain(&col_modes).all(|&m| m >= 1),
            Shape,
            "mode extents must be >= 1, got ({row_modes:?}; {col_modes:?})"
        );
        let row_count = checked_product(&row_modes, "row")?;
        let col_count = checked_product(&col_modes, "column")?;
        row_count
            .checked_mul(col_count)
            .ok_or_else(|| Error::Shape("entry count overflows".into()))?;
        Ok(Shape {
            row_modes,
            col_modes,
            row_count,
            col_count,
        })
    }

    /// Square shape `(modes; modes)`.
    pub fn square(modes: Vec<usize>) -> Result<Self> {
        Shape::new(modes.clone(), modes)
    }

    /// Plain matrix shape `(rows; cols)` with one mode on each side.
    pub fn matrix(rows: usize, cols: usize) -> Result<Self> {
        Shape::new(vec![rows], vec![cols])
    }

    pub fn row_modes(&self) -> &[usize] {
        &self.row_modes
    }

    pub fn col_modes(&self) -> &[usize] {
        &self.col_modes
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn col_count(&self) -> usize {
        self.col_count
    }

    pub fn len(&self) -> usize {
        self.row_count * self.col_count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_square(&self) -> bool {
        self.row_modes == self.col_modes
    }

    /// `(col_modes; row_modes)`.
    pub fn transposed(&self) -> Shape {
        Shape {
            row_modes: self.col_modes.clone(),
            col_modes: self.row_modes.clone(),
            row_count: self.col_count,
            col_count: self.row_count,
        }
    }

    /// Mixed-radix linearization of a multi-index over `modes`.
    pub fn linear_index(modes: &[usize], idx: &[usize]) -> Result<usize> {
        ensure!(
            modes.len() == idx.len(),
            Shape,
            "index has {} components, expected {}",
            idx.len(),
            modes.len()
        );
        let mut lin = 0usize;
        for (&m, &i) in modes.iter().zip(idx) {
            ensure!(i < m, Shape, "index {i} out of range for extent {m}");
            lin = lin * m + i;
        }
        Ok(lin)
    }

    /// Inverse of [`Shape::linear_index`].
    pub fn multi_index(modes: &[usize], mut lin: usize) -> Vec<usize> {
        let mut out = vec![0; modes.len()];
        for (slot, &m) in out.iter_mut().zip(modes).rev() {
            *slot = lin % m;
            lin /= m;
        }
        out
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |v: &[usize]| {
            v.iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join("x")
        };
        write!(f, "({}; {})", join(&self.row_modes), join(&self.col_modes))
    }
}
