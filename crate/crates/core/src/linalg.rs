//! Dense complex matrices and a nonsymmetric eigenvalue solver
//! (Householder reduction to Hessenberg form, then shifted QR with Givens rotations).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![ZERO; n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_diagonal(d: &[Complex64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.n {
            return Err(Error::Dimension(format!(
                "vector of length {} against {}x{} matrix",
                v.len(),
                self.n,
                self.n
            )));
        }
        Ok((0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.n).map(|i| self[(i, i)]).collect()
    }

    /// Largest modulus of an off-diagonal entry.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    m = m.max(self[(i, j)].norm());
                }
            }
        }
        m
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.n != other.n {
            return Err(Error::Dimension(format!("{} vs {}", self.n, other.n)));
        }
        Ok(CMatrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() })
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Reduce `a` in place to upper Hessenberg form by Householder similarity transforms.
pub fn hessenberg(a: &mut CMatrix) {
    let n = a.n;
    if n < 3 {
        return;
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        let len = n - k - 1;
        let x0 = a[(k + 1, k)];
        let tail: f64 = (k + 2..n).map(|i| a[(i, k)].norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let xnorm = (x0.norm_sqr() + tail).sqrt();
        let phase = if x0.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        v[0] = x0 - alpha;
        for i in 1..len {
            v[i] = a[(k + 1 + i, k)];
        }
        let vnorm = v[..len].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v[..len].iter_mut() {
            *z /= vnorm;
        }
        // A <- (I - 2 v v^H) A on rows k+1..n
        for j in k..n {
            let dot: Complex64 = (0..len).map(|i| v[i].conj() * a[(k + 1 + i, j)]).sum();
            let d2 = dot * 2.0;
            for i in 0..len {
                a[(k + 1 + i, j)] -= v[i] * d2;
            }
        }
        // A <- A (I - 2 v v^H) on columns k+1..n
        for i in 0..n {
            let dot: Complex64 = (0..len).map(|j| a[(i, k + 1 + j)] * v[j]).sum();
            let d2 = dot * 2.0;
            for j in 0..len {
                a[(i, k + 1 + j)] -= d2 * v[j].conj();
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
}

/// Rotation `G = [[c, s], [-conj(s), c]]` with `G [a; b] = [r; 0]`.
#[inline]
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, ZERO);
    }
    if an == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let r = an.hypot(bn);
    (an / r, (a / an) * b.conj() / r)
}

/// Eigenvalue of the 2x2 block `[[a, b], [c, d]]` closest to `d`.
fn wilkinson(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let l1 = d + half + disc;
    let l2 = d + half - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Eigenvalues of an upper Hessenberg matrix, destroying it.
pub fn hessenberg_qr(h: &mut CMatrix) -> Result<Vec<Complex64>> {
    let n = h.n;
    let mut eig = vec![ZERO; n];
    if n == 0 {
        return Ok(eig);
    }
    let scale = h.norm_fro().max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut rot: Vec<(f64, Complex64)> = vec![(1.0, ZERO); n];
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let mut diag = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if diag == 0.0 {
                diag = scale;
            }
            if sub <= eps * diag {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > 60 {
            return Err(Error::EigenFailure { lo: l, hi, iterations: iter });
        }
        let mu = if iter % 10 == 0 {
            // Exceptional shift to break cycles.
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for k in l..=hi {
            h[(k, k)] -= mu;
        }
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            rot[k] = (c, s);
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            h[(k + 1, k)] = ZERO;
        }
        for k in l..hi {
            let (c, s) = rot[k];
            for i in l..=(k + 1).min(hi) {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s.conj();
                h[(i, k + 1)] = -x * s + y * c;
            }
        }
        for k in l..=hi {
            h[(k, k)] += mu;
        }
    }
    Ok(eig)
}

/// All eigenvalues of a dense complex matrix.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    if !a.is_finite() {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let mut h = a.clone();
    hessenberg(&mut h);
    hessenberg_qr(&mut h)
}
