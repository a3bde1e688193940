//! Cell-major multi-component fields on a [`Grid`].

use std::ops::Deref;

use crate::grid::{Grid, GridError};
use crate::scalar::Real;

/// `ncomp` values per cell, stored cell-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField<T> {
    grid: Grid,
    ncomp: usize,
    data: Vec<T>,
}

impl<T: Real> CellField<T> {
    pub fn new(grid: Grid, ncomp: usize, data: Vec<T>) -> Result<Self, GridError> {
        let expected = grid.cell_count() * ncomp;
        if data.len() != expected {
            return Err(GridError::Shape { what: "field data", expected, got: data.len() });
        }
        Ok(Self { grid, ncomp, data })
    }

    pub fn from_fn(grid: Grid, ncomp: usize, mut f: impl FnMut(usize) -> Vec<T>) -> Result<Self, GridError> {
        let mut data = Vec::with_capacity(grid.cell_count() * ncomp);
        for cell in 0..grid.cell_count() {
            let v = f(cell);
            if v.len() != ncomp {
                return Err(GridError::Shape { what: "cell vector", expected: ncomp, got: v.len() });
            }
            data.extend(v);
        }
        Ok(Self { grid, ncomp, data })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn cells(&self) -> usize {
        self.grid.cell_count()
    }

    pub fn cell(&self, p: usize) -> &[T] {
        &self.data[p * self.ncomp..(p + 1) * self.ncomp]
    }

    pub fn cell_mut(&mut self, p: usize) -> &mut [T] {
        &mut self.data[p * self.ncomp..(p + 1) * self.ncomp]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn component(&self, a: usize) -> Vec<T> {
        self.data.iter().skip(a).step_by(self.ncomp).copied().collect()
    }

    /// Arithmetic mean of the two cell states adjacent to a face.
    pub fn face_average(&self, l: usize, r: usize) -> Vec<T> {
        let half = T::lit(0.5);
        self.cell(l).iter().zip(self.cell(r)).map(|(&a, &b)| (a + b) * half).collect()
    }

    /// Face gradients of every component, laid out face-major.
    pub fn gradients(&self) -> Vec<T> {
        let inv_h = T::count(self.grid.n());
        let mut out = vec![T::zero(); self.grid.face_count() * self.ncomp];
        for &fi in self.grid.interior_faces() {
            let (l, r) = self.grid.faces()[fi].cells.expect("interior");
            for a in 0..self.ncomp {
                out[fi * self.ncomp + a] = (self.cell(r)[a] - self.cell(l)[a]) * inv_h;
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn min_value(&self) -> T {
        self.data.iter().fold(T::infinity(), |m, &v| m.min(v))
    }
}

/// Physical state Z = (c₁,…,c_I, u) per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField<T>(CellField<T>);

/// Entropy variables W = (y₁,…,y_I, v) per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyVars<T>(CellField<T>);

macro_rules! newtype_field {
    ($name:ident) => {
        impl<T: Real> $name<T> {
            pub fn new(grid: Grid, ncomp: usize, data: Vec<T>) -> Result<Self, GridError> {
                CellField::new(grid, ncomp, data).map(Self)
            }

            pub fn from_fn(grid: Grid, ncomp: usize, f: impl FnMut(usize) -> Vec<T>) -> Result<Self, GridError> {
                CellField::from_fn(grid, ncomp, f).map(Self)
            }

            pub fn inner(&self) -> &CellField<T> {
                &self.0
            }

            pub fn inner_mut(&mut self) -> &mut CellField<T> {
                &mut self.0
            }

            pub fn into_inner(self) -> CellField<T> {
                self.0
            }
        }

        impl<T> Deref for $name<T> {
            type Target = CellField<T>;
            fn deref(&self) -> &CellField<T> {
                &self.0
            }
        }

        impl<T> From<CellField<T>> for $name<T> {
            fn from(f: CellField<T>) -> Self {
                Self(f)
            }
        }
    };
}

newtype_field!(StateField);
newtype_field!(EntropyVars);

impl<T: Real> StateField<T> {
    /// Energy component u as a scalar field.
    pub fn energy(&self) -> Vec<T> {
        self.component(self.ncomp() - 1)
    }

    /// Replaces every component below `floor` by `floor`.
    pub fn lifted(&self, floor: T) -> Self {
        let mut out = self.clone();
        for v in out.0.as_mut_slice() {
            *v = v.max(floor);
        }
        out
    }
}
