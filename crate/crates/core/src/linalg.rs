//! Small symmetric matrices in dimension 2 or 3.

use nalgebra::{Matrix2, Matrix3, SymmetricEigen};

/// Velocity vector; components beyond the dimension are zero.
pub type Vector = [f64; 3];

/// Symmetric `dim × dim` matrix stored in a fixed 3×3 array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat {
    pub dim: usize,
    pub m: [[f64; 3]; 3],
}

impl SymMat {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, m: [[0.0; 3]; 3] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut a = Self::zeros(dim);
        for i in 0..dim {
            a.m[i][i] = s;
        }
        a
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut a = Self::zeros(diag.len());
        for (i, &x) in diag.iter().enumerate() {
            a.m[i][i] = x;
        }
        a
    }

    /// Builds from rows, symmetrizing `(A + Aᵀ)/2`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.len();
        let mut a = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                a.m[i][j] = 0.5 * (rows[i][j] + rows[j][i]);
            }
        }
        a
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.m[i][i]).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.m[i][i]).sum()
    }

    pub fn add(&self, o: &SymMat) -> SymMat {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &SymMat) -> SymMat {
        self.zip(o, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> SymMat {
        let mut r = *self;
        for row in r.m.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        r
    }

    fn zip(&self, o: &SymMat, f: impl Fn(f64, f64) -> f64) -> SymMat {
        let mut r = SymMat::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                r.m[i][j] = f(self.m[i][j], o.m[i][j]);
            }
        }
        r
    }

    /// Frobenius product `A : B`.
    pub fn contract(&self, o: &SymMat) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.m[i][j] * o.m[i][j];
            }
        }
        s
    }

    /// `uᵀ A u = A : (u⊗u)`.
    pub fn quad(&self, u: &Vector) -> f64 {
        self.bilinear(u, u)
    }

    pub fn bilinear(&self, u: &Vector, w: &Vector) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            let mut r = 0.0;
            for j in 0..self.dim {
                r += self.m[i][j] * w[j];
            }
            s += u[i] * r;
        }
        s
    }

    pub fn mul_vec(&self, u: &Vector) -> Vector {
        let mut r = [0.0; 3];
        for (i, ri) in r.iter_mut().enumerate().take(self.dim) {
            for j in 0..self.dim {
                *ri += self.m[i][j] * u[j];
            }
        }
        r
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.contract(self)
    }

    pub fn max_offdiag(&self) -> f64 {
        let mut s: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    s = s.max(self.m[i][j].abs());
                }
            }
        }
        s
    }

    /// Eigenvalues in descending order with unit eigenvectors as columns of
    /// the returned rotation. Each eigenvector is signed so that its
    /// largest-magnitude component is positive.
    pub fn eigen(&self) -> (Vec<f64>, [[f64; 3]; 3]) {
        let (vals, vecs): (Vec<f64>, Vec<Vec<f64>>) = match self.dim {
            2 => {
                let a = Matrix2::new(self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]);
                let e = SymmetricEigen::new(a);
                let vecs = (0..2)
                    .map(|k| e.eigenvectors.column(k).iter().copied().collect())
                    .collect();
                (e.eigenvalues.iter().copied().collect(), vecs)
            }
            _ => {
                let m = &self.m;
                let a = Matrix3::new(
                    m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
                );
                let e = SymmetricEigen::new(a);
                let vecs = (0..3)
                    .map(|k| e.eigenvectors.column(k).iter().copied().collect())
                    .collect();
                (e.eigenvalues.iter().copied().collect(), vecs)
            }
        };
        let mut order: Vec<usize> = (0..self.dim).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        let mut rot = [[0.0; 3]; 3];
        let mut sorted = Vec::with_capacity(self.dim);
        for (col, &k) in order.iter().enumerate() {
            sorted.push(vals[k]);
            let v = &vecs[k];
            let pivot = v
                .iter()
                .copied()
                .fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            for row in 0..self.dim {
                rot[row][col] = sign * v[row];
            }
        }
        (sorted, rot)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigen().0[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigen().0.last().expect("dimension is positive")
    }
}

/// The matrix `a(z) = |z|² Id − z⊗z`, a scaled projection onto `z⊥`.
pub fn projector_a(z: &[f64], dim: usize) -> SymMat {
    let r2: f64 = z[..dim].iter().map(|x| x * x).sum();
    let mut a = SymMat::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            a.m[i][j] = -z[i] * z[j];
        }
        a.m[i][i] += r2;
    }
    a
}

pub fn dot(u: &Vector, w: &Vector) -> f64 {
    u[0] * w[0] + u[1] * w[1] + u[2] * w[2]
}

pub fn norm_sq(u: &Vector) -> f64 {
    dot(u, u)
}
