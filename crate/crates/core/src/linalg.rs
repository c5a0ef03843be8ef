//! Dense complex linear algebra helpers.
//!
//! Everything here accepts zero-dimensional matrices: nalgebra's SVD and
//! Schur routines refuse empty input, so each wrapper short-circuits those
//! cases to the mathematically correct empty answer.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

/// Safety factor on top of `max(dim) * eps` for numerical rank decisions.
pub const RANK_SAFETY: f64 = 64.0;

/// Eigenvalues closer than this are merged into one candidate.
pub const EIG_CLUSTER: f64 = 1e-8;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn scalar(n: usize, s: Complex64) -> CMat {
    CMat::from_diagonal_element(n, n, s)
}

pub fn frob(m: &CMat) -> f64 {
    m.norm()
}

/// `||lhs - rhs||_F / (1 + ||lhs||_F + ||rhs||_F)`.
pub fn rel_residual(lhs: &CMat, rhs: &CMat) -> f64 {
    debug_assert_eq!(lhs.shape(), rhs.shape());
    frob(&(lhs - rhs)) / (1.0 + frob(lhs) + frob(rhs))
}

/// Plain transpose (no conjugation); bilinear pairings use this.
pub fn tr(m: &CMat) -> CMat {
    m.transpose()
}

/// Singular values (descending) together with a full right-singular basis.
///
/// The returned `v` is `cols x cols` and unitary; its columns are ordered to
/// match `sigma`, padded with the directions that carry no singular value.
pub struct FullSvd {
    pub sigma: Vec<f64>,
    pub u: CMat,
    pub v: CMat,
}

pub fn full_svd(m: &CMat) -> FullSvd {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return FullSvd {
            sigma: vec![],
            u: eye(rows),
            v: eye(cols),
        };
    }
    // Pad with zero rows so the thin SVD yields a square V.
    let padded = if rows < cols {
        let mut p = zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(true, true);
    let u_thin = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let k = order.len();
    let mut sigma = Vec::with_capacity(k.min(rows));
    let mut v = zeros(cols, cols);
    let mut u = zeros(rows, k.min(rows));
    for (dst, &src) in order.iter().enumerate() {
        v.set_column(dst, &v_t.row(src).adjoint());
        if dst < rows {
            sigma.push(svd.singular_values[src]);
            u.set_column(dst, &u_thin.column(src).rows(0, rows).into_owned());
        }
    }
    FullSvd { sigma, u, v }
}

/// Rank threshold `sigma_max * max(rows, cols) * eps * RANK_SAFETY`.
pub fn rank_threshold(sigma: &[f64], rows: usize, cols: usize) -> f64 {
    let smax = sigma.first().copied().unwrap_or(0.0);
    smax * (rows.max(cols) as f64) * f64::EPSILON * RANK_SAFETY
}

/// Result of a thresholded rank decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankInfo {
    pub rank: usize,
    pub threshold: f64,
    /// A singular value lying within a factor 10 of the threshold, if any.
    pub straddle: Option<f64>,
}

impl RankInfo {
    pub fn is_clear(&self) -> bool {
        self.straddle.is_none()
    }
}

pub fn rank_info(sigma: &[f64], rows: usize, cols: usize) -> RankInfo {
    let threshold = rank_threshold(sigma, rows, cols);
    let rank = sigma.iter().filter(|&&s| s > threshold).count();
    let straddle = sigma
        .iter()
        .copied()
        .find(|&s| s > threshold / 10.0 && s < threshold * 10.0 && s > 0.0);
    RankInfo {
        rank,
        threshold,
        straddle,
    }
}

pub fn rank(m: &CMat) -> RankInfo {
    let (r, c) = m.shape();
    let svd = full_svd(m);
    rank_info(&svd.sigma, r, c)
}

/// Orthonormal basis of the (right) null space, plus the rank decision used.
pub fn null_space(m: &CMat) -> (CMat, RankInfo) {
    let (r, c) = m.shape();
    let svd = full_svd(m);
    let info = rank_info(&svd.sigma, r, c);
    let basis = svd.v.columns(info.rank, c - info.rank).into_owned();
    (basis, info)
}

/// Orthonormal basis of the column span.
pub fn col_span(m: &CMat) -> (CMat, RankInfo) {
    let (r, c) = m.shape();
    let svd = full_svd(m);
    let info = rank_info(&svd.sigma, r, c);
    (svd.u.columns(0, info.rank).into_owned(), info)
}

/// Vertical concatenation of blocks with a common column count.
pub fn vstack(blocks: &[&CMat], cols: usize) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        debug_assert_eq!(b.ncols(), cols);
        out.view_mut((r0, 0), b.shape()).copy_from(*b);
        r0 += b.nrows();
    }
    out
}

/// Horizontal concatenation of blocks with a common row count.
pub fn hstack(blocks: &[&CMat], rows: usize) -> CMat {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), rows);
        out.view_mut((0, c0), b.shape()).copy_from(*b);
        c0 += b.ncols();
    }
    out
}

/// Eigenvalues from a complex Schur decomposition. `None` if it fails to converge.
pub fn eigenvalues(m: &CMat) -> Option<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Some(vec![]);
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000)?;
    let (_, t) = schur.unpack();
    Some((0..n).map(|i| t[(i, i)]).collect())
}

/// Complex Schur form `m = q t q^H` with `t` upper triangular.
pub fn schur(m: &CMat) -> Option<(CMat, CMat)> {
    let n = m.nrows();
    if n == 0 {
        return Some((zeros(0, 0), zeros(0, 0)));
    }
    let s = Schur::try_new(m.clone(), f64::EPSILON, 10_000)?;
    Some(s.unpack())
}

/// Eigendecomposition `m = v diag(d) v^{-1}` for matrices whose eigenvalues
/// are pairwise separated by more than `min_gap`. Columns of `v` have unit
/// norm.
pub fn eig_decompose(m: &CMat, min_gap: f64) -> Option<(CMat, Vec<Complex64>)> {
    let n = m.nrows();
    let (q, t) = schur(m)?;
    let d: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    if min_self_gap(&d) <= min_gap {
        return None;
    }
    let mut x = zeros(n, n);
    for i in 0..n {
        x[(i, i)] = c(1.0, 0.0);
        for j in (0..i).rev() {
            let mut acc = c(0.0, 0.0);
            for l in (j + 1)..=i {
                acc += t[(j, l)] * x[(l, i)];
            }
            x[(j, i)] = -acc / (t[(j, j)] - d[i]);
        }
    }
    let mut v = q * x;
    for mut col in v.column_iter_mut() {
        let nrm = col.norm();
        col /= c(nrm, 0.0);
    }
    Some((v, d))
}

/// Merge eigenvalues closer than `radius` (single-linkage) and return the
/// cluster means.
pub fn cluster(values: &[Complex64], radius: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() < radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut groups: Vec<(usize, Complex64, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => {
                g.1 += values[i];
                g.2 += 1;
            }
            None => groups.push((r, values[i], 1)),
        }
    }
    groups
        .into_iter()
        .map(|(_, s, cnt)| s / cnt as f64)
        .collect()
}

/// Minimum distance between an element of `a` and an element of `b`.
pub fn min_gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut g = f64::INFINITY;
    for x in a {
        for y in b {
            g = g.min((x - y).norm());
        }
    }
    g
}

/// Minimum pairwise distance within `a`.
pub fn min_self_gap(a: &[Complex64]) -> f64 {
    let mut g = f64::INFINITY;
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            g = g.min((a[i] - a[j]).norm());
        }
    }
    g
}

/// Coefficients of `det(tI - m)`, highest degree first (leading 1), computed
/// with Berkowitz's division-free recurrence.
pub fn charpoly(m: &CMat) -> Vec<Complex64> {
    let n = m.nrows();
    let one = c(1.0, 0.0);
    if n == 0 {
        return vec![one];
    }
    // v holds the charpoly of the leading principal r x r block.
    let mut v = vec![one, -m[(0, 0)]];
    for r in 1..n {
        // Partition the leading (r+1)x(r+1) block as [[A, col], [row, a]].
        let a = m[(r, r)];
        let row = m.view((r, 0), (1, r)).into_owned();
        let col = m.view((0, r), (r, 1)).into_owned();
        let lead = m.view((0, 0), (r, r)).into_owned();
        // Toeplitz column: 1, -a, -row*col, -row*A*col, ...
        let mut t = Vec::with_capacity(r + 2);
        t.push(one);
        t.push(-a);
        let mut w = col.clone();
        for _ in 0..r {
            t.push(-(&row * &w)[(0, 0)]);
            w = &lead * w;
        }
        // new = T * v where T is (r+2)x(r+1) lower-triangular Toeplitz.
        let mut next = vec![c(0.0, 0.0); r + 2];
        for (i, slot) in next.iter_mut().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                if i >= j && i - j < t.len() {
                    *slot += t[i - j] * vj;
                }
            }
        }
        v = next;
    }
    v
}

/// Monic polynomial with the given roots, highest degree first.
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut p = vec![c(1.0, 0.0)];
    for r in roots {
        let mut q = vec![c(0.0, 0.0); p.len() + 1];
        for (i, a) in p.iter().enumerate() {
            q[i] += a;
            q[i + 1] -= a * r;
        }
        p = q;
    }
    p
}

pub fn poly_eval(p: &[Complex64], t: Complex64) -> Complex64 {
    p.iter().fold(c(0.0, 0.0), |acc, a| acc * t + a)
}

/// `p(m)` by Horner's scheme (coefficients highest degree first).
pub fn poly_eval_matrix(p: &[Complex64], m: &CMat) -> CMat {
    let n = m.nrows();
    let mut acc = zeros(n, n);
    for a in p {
        acc = &acc * m + scalar(n, *a);
    }
    acc
}

/// `prod_j (m - z_j I)`.
pub fn shifted_product(m: &CMat, roots: &[Complex64]) -> CMat {
    let n = m.nrows();
    roots
        .iter()
        .fold(eye(n), |acc, z| acc * (m - scalar(n, *z)))
}

/// Matrix divided difference `(p(eta) I - p(beta)) (eta I - beta)^{-1}` for
/// the monic polynomial `p(t) = prod_j (t - z_j)`.
///
/// Computed as `q(beta)` where `q(t) = (p(t) - p(eta)) / (t - eta)` is
/// obtained by synthetic division, so it is defined for every `eta`.
pub fn divided_difference(eta: Complex64, beta: &CMat, roots: &[Complex64]) -> CMat {
    let p = poly_from_roots(roots);
    let deg = p.len() - 1;
    let n = beta.nrows();
    if deg == 0 {
        return zeros(n, n);
    }
    // Quotient coefficients, highest first: b_0 = p_0, b_i = p_i + eta * b_{i-1}.
    let mut q = Vec::with_capacity(deg);
    let mut b = p[0];
    q.push(b);
    for pi in p.iter().take(deg).skip(1) {
        b = pi + eta * b;
        q.push(b);
    }
    poly_eval_matrix(&q, beta)
}

/// Relative coefficientwise residual between two polynomials (padded on the
/// high-degree side).
pub fn poly_residual(a: &[Complex64], b: &[Complex64]) -> f64 {
    let len = a.len().max(b.len());
    let pad = |p: &[Complex64]| {
        let mut v = vec![c(0.0, 0.0); len - p.len()];
        v.extend_from_slice(p);
        v
    };
    let (a, b) = (pad(a), pad(b));
    let norm = |v: &[Complex64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let diff: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    norm(&diff) / (1.0 + norm(&a) + norm(&b))
}

/// `p(t) * t^shift`, highest degree first.
pub fn poly_shift(p: &[Complex64], shift: usize) -> Vec<Complex64> {
    let mut v = p.to_vec();
    v.extend(std::iter::repeat_n(c(0.0, 0.0), shift));
    v
}

/// Solve `m x = rhs` for square invertible `m`.
pub fn solve(m: &CMat, rhs: &CMat) -> Option<CMat> {
    if m.nrows() == 0 {
        return Some(zeros(0, rhs.ncols()));
    }
    m.clone().lu().solve(rhs)
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    solve(m, &eye(m.nrows()))
}

/// Largest principal angle (radians) between the column spans of two
/// matrices with orthonormal columns of equal count.
pub fn max_principal_angle(a: &CMat, b: &CMat) -> f64 {
    if a.ncols() == 0 {
        return 0.0;
    }
    let m = a.adjoint() * b;
    let svd = full_svd(&m);
    let smin = svd.sigma.last().copied().unwrap_or(0.0).min(1.0);
    smin.acos()
}
