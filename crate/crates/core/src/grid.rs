//! Uniform cell-centred grids on the unit box with no-flux boundaries.
//!
//! Faces are numbered so that boundary faces exist in every face field but
//! always carry zero; this keeps gradient and divergence exact adjoints.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GridError {
    #[error("grid dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("grid needs at least 2 cells per axis, got {0}")]
    TooCoarse(usize),
    #[error("{what} has length {got}, expected {expected}")]
    Shape { what: &'static str, expected: usize, got: usize },
}

/// A face between two cells (`left` has the smaller coordinate along `axis`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub axis: usize,
    pub cells: Option<(usize, usize)>,
    /// Index along the face-normal axis (0..=n) and the transverse cell index.
    pub normal_index: usize,
    pub transverse: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    dim: usize,
    n: usize,
    faces: Vec<Face>,
    interior: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
}

impl TryFrom<GridSpec> for Grid {
    type Error = GridError;
    fn try_from(s: GridSpec) -> Result<Self, GridError> {
        Grid::new(s.dim, s.n)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        GridSpec { dim: g.dim, n: g.n }
    }
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self, GridError> {
        if !(1..=2).contains(&dim) {
            return Err(GridError::Dimension(dim));
        }
        if n < 2 {
            return Err(GridError::TooCoarse(n));
        }
        let mut faces = Vec::new();
        if dim == 1 {
            for k in 0..=n {
                let cells = (k > 0 && k < n).then(|| (k - 1, k));
                faces.push(Face { axis: 0, cells, normal_index: k, transverse: 0 });
            }
        } else {
            for iy in 0..n {
                for ix in 0..=n {
                    let cells = (ix > 0 && ix < n).then(|| (iy * n + ix - 1, iy * n + ix));
                    faces.push(Face { axis: 0, cells, normal_index: ix, transverse: iy });
                }
            }
            for iy in 0..=n {
                for ix in 0..n {
                    let cells = (iy > 0 && iy < n).then(|| ((iy - 1) * n + ix, iy * n + ix));
                    faces.push(Face { axis: 1, cells, normal_index: iy, transverse: ix });
                }
            }
        }
        let interior = faces.iter().enumerate().filter_map(|(i, f)| f.cells.map(|_| i)).collect();
        Ok(Self { dim, n, faces, interior })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cell_count(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Indices of faces that separate two cells.
    pub fn interior_faces(&self) -> &[usize] {
        &self.interior
    }

    pub fn h<T: Real>(&self) -> T {
        T::one() / T::count(self.n)
    }

    /// Cell volume h^d.
    pub fn volume<T: Real>(&self) -> T {
        self.h::<T>().powi(self.dim as i32)
    }

    pub fn cell_center<T: Real>(&self, cell: usize) -> [T; 2] {
        let h = self.h::<T>();
        let half = T::lit(0.5);
        let (ix, iy) = (cell % self.n, cell / self.n);
        let x = (T::count(ix) + half) * h;
        if self.dim == 1 {
            [x, T::zero()]
        } else {
            [x, (T::count(iy) + half) * h]
        }
    }

    pub fn face_center<T: Real>(&self, face: usize) -> [T; 2] {
        let f = &self.faces[face];
        let h = self.h::<T>();
        let a = T::count(f.normal_index) * h;
        let b = (T::count(f.transverse) + T::lit(0.5)) * h;
        match (self.dim, f.axis) {
            (1, _) => [a, T::zero()],
            (_, 0) => [a, b],
            _ => [b, a],
        }
    }

    /// Bandwidth (in cells) of the bi-Laplacian stencil under row-major numbering.
    pub fn stencil_reach(&self) -> usize {
        if self.dim == 1 {
            2
        } else {
            2 * self.n
        }
    }

    fn check<T>(&self, what: &'static str, v: &[T], expected: usize) -> Result<(), GridError> {
        if v.len() == expected {
            Ok(())
        } else {
            Err(GridError::Shape { what, expected, got: v.len() })
        }
    }

    /// Two-point face differences; boundary faces are zero.
    pub fn gradient<T: Real>(&self, field: &[T]) -> Result<Vec<T>, GridError> {
        self.check("cell field", field, self.cell_count())?;
        let inv_h = T::count(self.n);
        Ok(self.faces.iter().map(|f| f.cells.map_or(T::zero(), |(l, r)| (field[r] - field[l]) * inv_h)).collect())
    }

    /// Net outflow per cell divided by h. Boundary face values are ignored.
    pub fn divergence<T: Real>(&self, faces: &[T]) -> Result<Vec<T>, GridError> {
        self.check("face field", faces, self.face_count())?;
        let inv_h = T::count(self.n);
        let mut out = vec![T::zero(); self.cell_count()];
        for &fi in &self.interior {
            let (l, r) = self.faces[fi].cells.expect("interior");
            let q = faces[fi] * inv_h;
            out[l] += q;
            out[r] -= q;
        }
        Ok(out)
    }

    pub fn laplacian<T: Real>(&self, field: &[T]) -> Result<Vec<T>, GridError> {
        self.divergence(&self.gradient(field)?)
    }

    /// Midpoint quadrature over the unit box.
    pub fn quad<T: Real>(&self, field: &[T]) -> T {
        field.iter().copied().sum::<T>() * self.volume::<T>()
    }

    /// Face pairing ⟨F, G⟩ with dual volume h^d per face.
    pub fn face_inner<T: Real>(&self, f: &[T], g: &[T]) -> T {
        self.interior.iter().map(|&i| f[i] * g[i]).sum::<T>() * self.volume::<T>()
    }

    /// ε·(quad(ΔW·Δφ) + quad(W·φ)) for scalar cell fields.
    pub fn reg_form<T: Real>(&self, w: &[T], phi: &[T], eps: T) -> Result<T, GridError> {
        self.check("test field", phi, self.cell_count())?;
        let lw = self.laplacian(w)?;
        let lp = self.laplacian(phi)?;
        let lap: T = lw.iter().zip(&lp).map(|(&a, &b)| a * b).sum();
        let mass: T = w.iter().zip(phi).map(|(&a, &b)| a * b).sum();
        Ok(eps * (lap + mass) * self.volume::<T>())
    }

    /// Rows of the Neumann Laplacian as sparse `(column, value)` lists.
    pub fn laplacian_rows<T: Real>(&self) -> Vec<Vec<(usize, T)>> {
        let inv_h2 = T::count(self.n * self.n);
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); self.cell_count()];
        for &fi in &self.interior {
            let (l, r) = self.faces[fi].cells.expect("interior");
            push(&mut rows[l], r, inv_h2);
            push(&mut rows[l], l, -inv_h2);
            push(&mut rows[r], l, inv_h2);
            push(&mut rows[r], r, -inv_h2);
        }
        rows
    }

    /// Rows of Δ·Δ + I, the matrix of the regularization form divided by h^d.
    pub fn regularization_rows<T: Real>(&self) -> Vec<Vec<(usize, T)>> {
        let lap = self.laplacian_rows::<T>();
        lap.iter()
            .enumerate()
            .map(|(p, row)| {
                let mut out = vec![(p, T::one())];
                for &(q, a) in row {
                    for &(r, b) in &lap[q] {
                        push(&mut out, r, a * b);
                    }
                }
                out.sort_by_key(|e| e.0);
                out
            })
            .collect()
    }
}

fn push<T: Real>(row: &mut Vec<(usize, T)>, col: usize, v: T) {
    match row.iter_mut().find(|e| e.0 == col) {
        Some(e) => e.1 += v,
        None => row.push((col, v)),
    }
}
