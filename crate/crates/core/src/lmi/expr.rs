use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::linalg::Matrix;

/// Matrix-valued affine function `C + Σ x_k D_k` of the flat decision vector.
#[derive(Clone, Debug)]
pub struct AffineExpr {
    pub(crate) constant: Matrix,
    pub(crate) terms: BTreeMap<usize, Matrix>,
}

impl AffineExpr {
    pub fn constant(m: Matrix) -> Self {
        Self { constant: m, terms: BTreeMap::new() }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::constant(Matrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(Matrix::identity(n))
    }

    pub(crate) fn from_terms(rows: usize, cols: usize, terms: BTreeMap<usize, Matrix>) -> Self {
        Self { constant: Matrix::zeros(rows, cols), terms }
    }

    pub fn rows(&self) -> usize {
        self.constant.rows()
    }

    pub fn cols(&self) -> usize {
        self.constant.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.constant.shape()
    }

    pub fn constant_part(&self) -> &Matrix {
        &self.constant
    }

    /// Indices of decision entries with a nonzero coefficient.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.keys().copied()
    }

    pub fn coefficient(&self, k: usize) -> Option<&Matrix> {
        self.terms.get(&k)
    }

    fn map(&self, f: impl Fn(&Matrix) -> Matrix) -> Self {
        Self {
            constant: f(&self.constant),
            terms: self.terms.iter().map(|(k, m)| (*k, f(m))).collect(),
        }
    }

    pub fn add(&self, rhs: &AffineExpr) -> Self {
        assert_eq!(self.shape(), rhs.shape(), "affine add shape mismatch");
        let mut out = self.clone();
        out.constant = &out.constant + &rhs.constant;
        for (k, m) in &rhs.terms {
            match out.terms.get_mut(k) {
                Some(e) => *e = &*e + m,
                None => {
                    out.terms.insert(*k, m.clone());
                }
            }
        }
        out
    }

    pub fn sub(&self, rhs: &AffineExpr) -> Self {
        self.add(&rhs.scale(-1.0))
    }

    pub fn add_const(&self, m: &Matrix) -> Self {
        let mut out = self.clone();
        out.constant = &out.constant + m;
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|m| m.scale(s))
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn transpose(&self) -> Self {
        self.map(Matrix::transpose)
    }

    /// `m · self`.
    pub fn lmul(&self, m: &Matrix) -> Self {
        self.map(|e| m.matmul(e))
    }

    /// `self · m`.
    pub fn rmul(&self, m: &Matrix) -> Self {
        self.map(|e| e.matmul(m))
    }

    /// `self + selfᵀ`.
    pub fn he(&self) -> Self {
        self.add(&self.transpose())
    }

    /// `mᵀ · self · m`.
    pub fn congruence(&self, m: &Matrix) -> Self {
        self.map(|e| m.tr_matmul(&e.matmul(m)))
    }

    /// Assembles a block matrix from rows of expressions.
    pub fn blocks(rows: &[Vec<AffineExpr>]) -> Self {
        assert!(!rows.is_empty());
        let ncols = rows[0].len();
        let heights: Vec<usize> = rows.iter().map(|r| r[0].rows()).collect();
        let widths: Vec<usize> = rows[0].iter().map(|e| e.cols()).collect();
        let total_r: usize = heights.iter().sum();
        let total_c: usize = widths.iter().sum();
        let mut out = AffineExpr::zeros(total_r, total_c);
        let mut r0 = 0;
        for (bi, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "ragged block rows");
            let mut c0 = 0;
            for (bj, e) in row.iter().enumerate() {
                assert_eq!(e.shape(), (heights[bi], widths[bj]), "block ({bi},{bj}) has wrong shape");
                out.constant.set_block(r0, c0, &e.constant);
                for (k, m) in &e.terms {
                    let slot = out.terms.entry(*k).or_insert_with(|| Matrix::zeros(total_r, total_c));
                    slot.set_block(r0, c0, m);
                }
                c0 += widths[bj];
            }
            r0 += heights[bi];
        }
        out
    }

    /// `[[a, b], [bᵀ, d]]`.
    pub fn sym2(a: &AffineExpr, b: &AffineExpr, d: &AffineExpr) -> Self {
        Self::blocks(&[
            alloc::vec![a.clone(), b.clone()],
            alloc::vec![b.transpose(), d.clone()],
        ])
    }

    pub fn eval(&self, x: &[f64]) -> Matrix {
        let mut out = self.constant.clone();
        for (k, m) in &self.terms {
            let v = x[*k];
            if v != 0.0 {
                for (o, e) in out.as_mut_slice().iter_mut().zip(m.as_slice()) {
                    *o += v * e;
                }
            }
        }
        out
    }
}
