//! Sparse left-looking LU factorization of a simplex basis.
//!
//! Columns are processed in ascending nonzero count; within a column the
//! pivot row is picked by threshold partial pivoting, preferring rows with
//! few nonzeros. The result satisfies `E_{m-1} ... E_0 B = U` where each
//! `E_t` eliminates below pivot `t`, and is used for FTRAN/BTRAN.

const DROP_TOL: f64 = 1e-14;
const PIVOT_THRESHOLD: f64 = 0.1;
const SINGULAR_TOL: f64 = 1e-11;

#[derive(Debug, Clone)]
pub(crate) struct LuFactors {
    m: usize,
    /// Pivot row of step `t`.
    prow: Vec<usize>,
    /// Basis position eliminated at step `t`.
    pcol: Vec<usize>,
    /// Multipliers of step `t`: `(row, l)`.
    lcols: Vec<Vec<(usize, f64)>>,
    /// Off-diagonal part of `U` column `k`: `(step t < k, u)`.
    ucols: Vec<Vec<(usize, f64)>>,
    udiag: Vec<f64>,
}

/// The basis is (numerically) singular. `positions` could not be pivoted;
/// `rows` are the rows left without a pivot, same length.
#[derive(Debug, Clone)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

impl LuFactors {
    pub(crate) fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (columns[p].len(), p));

        let mut row_count = vec![0usize; m];
        for col in columns {
            for &(i, _) in col {
                row_count[i] += 1;
            }
        }

        let mut lu = LuFactors {
            m,
            prow: Vec::with_capacity(m),
            pcol: Vec::with_capacity(m),
            lcols: Vec::with_capacity(m),
            ucols: Vec::with_capacity(m),
            udiag: Vec::with_capacity(m),
        };
        let mut row_step = vec![usize::MAX; m];
        let mut work = vec![0.0f64; m];
        let mut mark = vec![false; m];
        let mut pattern: Vec<usize> = Vec::new();
        let mut failed: Vec<usize> = Vec::new();

        for &p in &order {
            pattern.clear();
            for &(i, v) in &columns[p] {
                if !mark[i] {
                    mark[i] = true;
                    pattern.push(i);
                }
                work[i] += v;
            }
            // Apply previous eliminations in step order.
            for t in 0..lu.prow.len() {
                let piv = work[lu.prow[t]];
                if piv == 0.0 {
                    continue;
                }
                for &(i, l) in &lu.lcols[t] {
                    if !mark[i] {
                        mark[i] = true;
                        pattern.push(i);
                    }
                    work[i] -= l * piv;
                }
            }

            let mut ucol = Vec::new();
            let mut max_abs = 0.0f64;
            for &i in &pattern {
                let v = work[i];
                if row_step[i] != usize::MAX {
                    if v.abs() > DROP_TOL {
                        ucol.push((row_step[i], v));
                    }
                } else {
                    max_abs = max_abs.max(v.abs());
                }
            }

            if max_abs <= SINGULAR_TOL {
                failed.push(p);
                for &i in &pattern {
                    work[i] = 0.0;
                    mark[i] = false;
                }
                continue;
            }

            let threshold = PIVOT_THRESHOLD * max_abs;
            let mut best: Option<(usize, usize, f64)> = None;
            for &i in &pattern {
                if row_step[i] != usize::MAX {
                    continue;
                }
                let v = work[i].abs();
                if v < threshold {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bi, bc, bv)) => {
                        (row_count[i], std::cmp::Reverse(ord(v)), i)
                            < (bc, std::cmp::Reverse(ord(bv)), bi)
                    }
                };
                if better {
                    best = Some((i, row_count[i], v));
                }
            }
            let (r, _, _) = best.expect("pivot candidate exists above threshold");
            let pivot = work[r];
            let mut lcol = Vec::new();
            for &i in &pattern {
                if row_step[i] == usize::MAX && i != r {
                    let l = work[i] / pivot;
                    if l.abs() > DROP_TOL {
                        lcol.push((i, l));
                    }
                }
            }
            for &(i, _) in &columns[p] {
                row_count[i] = row_count[i].saturating_sub(1);
            }
            row_step[r] = lu.prow.len();
            lu.prow.push(r);
            lu.pcol.push(p);
            lu.lcols.push(lcol);
            lu.ucols.push(ucol);
            lu.udiag.push(pivot);

            for &i in &pattern {
                work[i] = 0.0;
                mark[i] = false;
            }
        }

        if failed.is_empty() {
            Ok(lu)
        } else {
            let rows: Vec<usize> = (0..m).filter(|&i| row_step[i] == usize::MAX).collect();
            debug_assert_eq!(rows.len(), failed.len());
            Err(Singular {
                positions: failed,
                rows,
            })
        }
    }

    /// Solves `B x = rhs`. `rhs` is indexed by row and is consumed as
    /// workspace; the result is indexed by basis position.
    pub(crate) fn ftran(&self, rhs: &mut [f64], out: &mut [f64]) {
        for t in 0..self.m {
            let v = rhs[self.prow[t]];
            if v != 0.0 {
                for &(i, l) in &self.lcols[t] {
                    rhs[i] -= l * v;
                }
            }
        }
        for k in (0..self.m).rev() {
            let r = self.prow[k];
            let z = rhs[r] / self.udiag[k];
            rhs[r] = z;
            if z != 0.0 {
                for &(t, u) in &self.ucols[k] {
                    rhs[self.prow[t]] -= u * z;
                }
            }
            out[self.pcol[k]] = z;
        }
    }

    /// Solves `B^T y = c`. `c` is indexed by basis position, `out` by row.
    pub(crate) fn btran(&self, c: &[f64], out: &mut [f64]) {
        let mut v = vec![0.0f64; self.m];
        for k in 0..self.m {
            let mut s = c[self.pcol[k]];
            for &(t, u) in &self.ucols[k] {
                s -= u * v[t];
            }
            v[k] = s / self.udiag[k];
        }
        for k in 0..self.m {
            out[self.prow[k]] = v[k];
        }
        for t in (0..self.m).rev() {
            let mut s = 0.0;
            for &(i, l) in &self.lcols[t] {
                s += l * out[i];
            }
            if s != 0.0 {
                out[self.prow[t]] -= s;
            }
        }
    }
}

fn ord(v: f64) -> u64 {
    // Non-negative finite floats order like their bit patterns.
    v.to_bits()
}
