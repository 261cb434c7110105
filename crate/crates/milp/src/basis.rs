//! Basis inverse representation: an LU factorization followed by a file of
//! product-form eta updates.

use crate::lu::{LuFactors, Singular};

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub(crate) struct BasisFactor {
    m: usize,
    lu: LuFactors,
    etas: Vec<Eta>,
    eta_nnz: usize,
    work: Vec<f64>,
}

impl BasisFactor {
    pub(crate) fn new(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        Ok(Self {
            m,
            lu: LuFactors::factorize(m, columns)?,
            etas: Vec::new(),
            eta_nnz: 0,
            work: vec![0.0; m],
        })
    }

    pub(crate) fn num_updates(&self) -> usize {
        self.etas.len()
    }

    pub(crate) fn eta_nnz(&self) -> usize {
        self.eta_nnz
    }

    /// `out = B^{-1} a` for a sparse column `a`; `out` indexed by position.
    pub(crate) fn ftran_sparse(&mut self, a: &[(usize, f64)], out: &mut [f64]) {
        self.work.iter_mut().for_each(|w| *w = 0.0);
        for &(i, v) in a {
            self.work[i] += v;
        }
        let mut work = std::mem::take(&mut self.work);
        self.ftran_dense(&mut work, out);
        self.work = work;
    }

    /// `out = B^{-1} rhs`; `rhs` indexed by row, consumed.
    pub(crate) fn ftran_dense(&self, rhs: &mut [f64], out: &mut [f64]) {
        self.lu.ftran(rhs, out);
        for eta in &self.etas {
            let xr = out[eta.pos] / eta.pivot;
            out[eta.pos] = xr;
            if xr != 0.0 {
                for &(i, a) in &eta.entries {
                    out[i] -= a * xr;
                }
            }
        }
    }

    /// `out = B^{-T} c`; `c` indexed by position (consumed), `out` by row.
    pub(crate) fn btran(&self, c: &mut [f64], out: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.pos];
            for &(i, a) in &eta.entries {
                s -= a * c[i];
            }
            c[eta.pos] = s / eta.pivot;
        }
        self.lu.btran(c, out);
    }

    /// Records the replacement of the column at `pos` by a column whose
    /// FTRAN image is `alpha`.
    pub(crate) fn update(&mut self, pos: usize, alpha: &[f64]) {
        debug_assert_eq!(alpha.len(), self.m);
        let entries: Vec<(usize, f64)> = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != pos && a.abs() > 1e-13)
            .map(|(i, &a)| (i, a))
            .collect();
        self.eta_nnz += entries.len();
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }
}
