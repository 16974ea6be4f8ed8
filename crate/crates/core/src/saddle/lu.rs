//! Left-looking sparse LU (Gilbert–Peierls) with threshold partial pivoting.

use crate::sparse::CsrMatrix;

/// Compressed sparse column storage.
#[derive(Clone, Debug)]
pub(super) struct Csc {
    pub n: usize,
    pub colptr: Vec<usize>,
    pub rowidx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csc {
    pub fn from_csr(a: &CsrMatrix) -> Csc {
        let t = a.transpose();
        Csc { n: a.nrows, colptr: t.row_ptr, rowidx: t.col_idx, values: t.values }
    }
}

/// `P A Q = L U`; `L` unit lower (diagonal stored first), `U` upper (diagonal stored last).
#[derive(Clone, Debug)]
pub(super) struct LuFactors {
    l: Csc,
    u: Csc,
    /// row `i` of A is pivot row `pinv[i]`
    pinv: Vec<usize>,
    /// column `k` of the factor is column `q[k]` of A
    q: Vec<usize>,
    pub min_pivot: f64,
}

pub(super) enum LuFailure {
    /// column position and best available pivot magnitude
    SmallPivot { step: usize, column: usize, pivot: f64 },
}

const NONE: usize = usize::MAX;

/// Factorizes `a` with column order `q`; pivots below `abs_tol` are rejected.
pub(super) fn factor(a: &Csc, q: &[usize], threshold: f64, abs_tol: f64) -> Result<LuFactors, LuFailure> {
    let n = a.n;
    let guess = 4 * a.values.len() + n;
    let mut lp = Vec::with_capacity(n + 1);
    let mut li = Vec::with_capacity(guess);
    let mut lx = Vec::with_capacity(guess);
    let mut up = Vec::with_capacity(n + 1);
    let mut ui = Vec::with_capacity(guess);
    let mut ux = Vec::with_capacity(guess);
    let mut pinv = vec![NONE; n];
    let mut x = vec![0.0; n];
    let mut mark = vec![0usize; n];
    let mut stamp = 0usize;
    let mut post: Vec<usize> = Vec::with_capacity(n);
    let mut stack: Vec<(usize, usize)> = Vec::with_capacity(n);
    let mut min_pivot = f64::INFINITY;

    for k in 0..n {
        lp.push(li.len());
        up.push(ui.len());
        let col = q[k];
        // symbolic: reach of A(:,col) in the graph of L
        stamp += 1;
        post.clear();
        for p in a.colptr[col]..a.colptr[col + 1] {
            let start = a.rowidx[p];
            if mark[start] == stamp {
                continue;
            }
            mark[start] = stamp;
            stack.push((start, 0));
            while let Some(top) = stack.len().checked_sub(1) {
                let (j, mut pos) = stack[top];
                let jc = pinv[j];
                let (lo, hi) = if jc == NONE { (0, 0) } else { (lp[jc] + 1, lp[jc + 1]) };
                let mut child = NONE;
                while lo + pos < hi {
                    let i = li[lo + pos];
                    pos += 1;
                    if mark[i] != stamp {
                        child = i;
                        break;
                    }
                }
                stack[top].1 = pos;
                if child == NONE {
                    stack.pop();
                    post.push(j);
                } else {
                    mark[child] = stamp;
                    stack.push((child, 0));
                }
            }
        }
        // numeric: x = L \ A(:,col) in topological order
        for p in a.colptr[col]..a.colptr[col + 1] {
            x[a.rowidx[p]] = a.values[p];
        }
        for &j in post.iter().rev() {
            let jc = pinv[j];
            if jc == NONE {
                continue;
            }
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for p in lp[jc] + 1..lp[jc + 1] {
                x[li[p]] -= lx[p] * xj;
            }
        }
        let mut ipiv = NONE;
        let mut best = -1.0;
        for &i in post.iter().rev() {
            if pinv[i] == NONE {
                let t = x[i].abs();
                if t > best {
                    best = t;
                    ipiv = i;
                }
            } else {
                ui.push(pinv[i]);
                ux.push(x[i]);
            }
        }
        if ipiv == NONE || best <= abs_tol || !best.is_finite() {
            return Err(LuFailure::SmallPivot { step: k, column: col, pivot: best.max(0.0) });
        }
        if pinv[col] == NONE && mark[col] == stamp && x[col].abs() >= threshold * best {
            ipiv = col;
        }
        let pivot = x[ipiv];
        min_pivot = min_pivot.min(pivot.abs());
        ui.push(k);
        ux.push(pivot);
        pinv[ipiv] = k;
        li.push(ipiv);
        lx.push(1.0);
        for &i in post.iter().rev() {
            if pinv[i] == NONE {
                li.push(i);
                lx.push(x[i] / pivot);
            }
            x[i] = 0.0;
        }
    }
    lp.push(li.len());
    up.push(ui.len());
    for r in li.iter_mut() {
        *r = pinv[*r];
    }
    Ok(LuFactors {
        l: Csc { n, colptr: lp, rowidx: li, values: lx },
        u: Csc { n, colptr: up, rowidx: ui, values: ux },
        pinv,
        q: q.to_vec(),
        min_pivot,
    })
}

impl LuFactors {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[self.pinv[i]] = b[i];
        }
        for j in 0..n {
            let yj = y[j];
            if yj != 0.0 {
                for p in self.l.colptr[j] + 1..self.l.colptr[j + 1] {
                    y[self.l.rowidx[p]] -= self.l.values[p] * yj;
                }
            }
        }
        for j in (0..n).rev() {
            let last = self.u.colptr[j + 1] - 1;
            y[j] /= self.u.values[last];
            let yj = y[j];
            if yj != 0.0 {
                for p in self.u.colptr[j]..last {
                    y[self.u.rowidx[p]] -= self.u.values[p] * yj;
                }
            }
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[self.q[k]] = y[k];
        }
        x
    }

    pub fn fill(&self) -> usize {
        self.l.values.len() + self.u.values.len()
    }
}
