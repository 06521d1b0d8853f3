use crate::error::{Error, Result};

/// Discrete phase-space function: P1 even moments and P0 odd moments.
///
/// Even data is node-major (`node * n_even + k`), odd data cell-major
/// (`cell * n_odd + k`).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceField {
    pub n_even: usize,
    pub n_odd: usize,
    pub even: Vec<f64>,
    pub odd: Vec<f64>,
}

impl PhaseSpaceField {
    pub fn zeros(n_nodes: usize, n_cells: usize, n_even: usize, n_odd: usize) -> Self {
        Self {
            n_even,
            n_odd,
            even: vec![0.0; n_nodes * n_even],
            odd: vec![0.0; n_cells * n_odd],
        }
    }

    pub fn from_parts(n_even: usize, n_odd: usize, even: Vec<f64>, odd: Vec<f64>) -> Result<Self> {
        if n_even == 0 || even.len() % n_even != 0 {
            return Err(Error::SizeMismatch {
                context: "even moments",
                expected: n_even,
                found: even.len(),
            });
        }
        if n_odd == 0 || odd.len() % n_odd != 0 {
            return Err(Error::SizeMismatch {
                context: "odd moments",
                expected: n_odd,
                found: odd.len(),
            });
        }
        Ok(Self {
            n_even,
            n_odd,
            even,
            odd,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.even.len() / self.n_even
    }

    pub fn n_cells(&self) -> usize {
        self.odd.len() / self.n_odd
    }

    pub fn even_at(&self, node: usize) -> &[f64] {
        &self.even[node * self.n_even..(node + 1) * self.n_even]
    }

    pub fn odd_at(&self, cell: usize) -> &[f64] {
        &self.odd[cell * self.n_odd..(cell + 1) * self.n_odd]
    }

    pub fn len(&self) -> usize {
        self.even.len() + self.odd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Even block followed by the odd block.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.even.clone();
        v.extend_from_slice(&self.odd);
        v
    }

    pub fn from_vec(&self, v: &[f64]) -> Self {
        let ne = self.even.len();
        Self {
            n_even: self.n_even,
            n_odd: self.n_odd,
            even: v[..ne].to_vec(),
            odd: v[ne..].to_vec(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.even
            .iter()
            .zip(&other.even)
            .chain(self.odd.iter().zip(&other.odd))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
