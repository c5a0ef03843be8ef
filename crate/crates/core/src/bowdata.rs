//! Matrix data of a bow complex and its validators.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    charpoly, cluster, eigenvalues, hstack, null_space, poly_residual, poly_shift, scalar,
    shifted_product, tr, vstack, zeros, CMat, EIG_CLUSTER,
};
use crate::report::ValidationReport;
use crate::topology::{compute_dimensions, DimensionVector, TopologicalData};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DERIVED_TOL: f64 = 1e-6;

/// All matrices of a bow complex.
///
/// The NUT chain `beta_{n,0}, ..., beta_{n,k}` shares its endpoints with the
/// lambda chain: `beta_{n,0}` is `beta[n]` and `beta_{n,k}` is `beta[0]`.
/// Only the interior `beta_{n,1}..beta_{n,k-1}` is stored in `beta_chain`;
/// use [`BowDatum::beta_n`] to address the whole chain.
#[derive(Debug, Clone, PartialEq)]
pub struct BowDatum {
    pub topo: TopologicalData,
    pub dims: DimensionVector,
    /// `beta[i]`: `d_i x d_i`, `i = 0..=n`.
    pub beta: Vec<CMat>,
    /// `a[i]`: `d_{i+1} x d_i`.
    pub a: Vec<CMat>,
    /// `alpha[i]`: `d_{i+1} x 1`.
    pub alpha: Vec<CMat>,
    /// `gamma[i]`: `1 x d_i`.
    pub gamma: Vec<CMat>,
    /// Interior chain endomorphisms `beta_{n,1}..beta_{n,k-1}`.
    pub beta_chain: Vec<CMat>,
    /// `mxi[j-1] = M_{xi_j}`: `dn_j x dn_{j-1}`.
    pub mxi: Vec<CMat>,
    /// `mpsi[j-1] = M_{psi_j}`: `dn_{j-1} x dn_j`.
    pub mpsi: Vec<CMat>,
}

impl BowDatum {
    /// All-zero datum of the right shapes.
    pub fn zeros(topo: TopologicalData) -> Result<Self> {
        let dims = compute_dimensions(&topo)?;
        let (n, k) = (topo.n, topo.k);
        let d = &dims.d;
        let dn = &dims.dn;
        Ok(BowDatum {
            beta: (0..=n).map(|i| zeros(d[i], d[i])).collect(),
            a: (0..n).map(|i| zeros(d[i + 1], d[i])).collect(),
            alpha: (0..n).map(|i| zeros(d[i + 1], 1)).collect(),
            gamma: (0..n).map(|i| zeros(1, d[i])).collect(),
            beta_chain: (1..k).map(|j| zeros(dn[j], dn[j])).collect(),
            mxi: (1..=k).map(|j| zeros(dn[j], dn[j - 1])).collect(),
            mpsi: (1..=k).map(|j| zeros(dn[j - 1], dn[j])).collect(),
            topo,
            dims,
        })
    }

    pub fn n(&self) -> usize {
        self.topo.n
    }

    pub fn k(&self) -> usize {
        self.topo.k
    }

    /// `beta_{n,j}` for `j = 0..=k`.
    pub fn beta_n(&self, j: usize) -> &CMat {
        if j == 0 {
            &self.beta[self.n()]
        } else if j == self.k() {
            &self.beta[0]
        } else {
            &self.beta_chain[j - 1]
        }
    }

    pub fn beta_n_mut(&mut self, j: usize) -> &mut CMat {
        let (n, k) = (self.n(), self.k());
        if j == 0 {
            &mut self.beta[n]
        } else if j == k {
            &mut self.beta[0]
        } else {
            &mut self.beta_chain[j - 1]
        }
    }

    /// Every stored matrix with a field path, in a fixed order.
    pub fn named_matrices(&self) -> Vec<(String, &CMat)> {
        let mut out = Vec::new();
        let groups: [(&str, &Vec<CMat>); 7] = [
            ("beta", &self.beta),
            ("A", &self.a),
            ("alpha", &self.alpha),
            ("gamma", &self.gamma),
            ("beta_chain", &self.beta_chain),
            ("m_xi", &self.mxi),
            ("m_psi", &self.mpsi),
        ];
        for (name, list) in groups {
            for (i, m) in list.iter().enumerate() {
                out.push((format!("{name}[{i}]"), m));
            }
        }
        out
    }

    pub fn named_matrices_mut(&mut self) -> Vec<(String, &mut CMat)> {
        let mut out = Vec::new();
        let groups: [(&str, &mut Vec<CMat>); 7] = [
            ("beta", &mut self.beta),
            ("A", &mut self.a),
            ("alpha", &mut self.alpha),
            ("gamma", &mut self.gamma),
            ("beta_chain", &mut self.beta_chain),
            ("m_xi", &mut self.mxi),
            ("m_psi", &mut self.mpsi),
        ];
        for (name, list) in groups {
            for (i, m) in list.iter_mut().enumerate() {
                out.push((format!("{name}[{i}]"), m));
            }
        }
        out
    }

    /// Expected shapes, in the order of [`BowDatum::named_matrices`].
    pub fn expected_shapes(dims: &DimensionVector) -> Vec<(String, (usize, usize))> {
        let (d, dn) = (&dims.d, &dims.dn);
        let (n, k) = (dims.n(), dims.k());
        let mut out = Vec::new();
        for i in 0..=n {
            out.push((format!("beta[{i}]"), (d[i], d[i])));
        }
        for i in 0..n {
            out.push((format!("A[{i}]"), (d[i + 1], d[i])));
        }
        for i in 0..n {
            out.push((format!("alpha[{i}]"), (d[i + 1], 1)));
        }
        for i in 0..n {
            out.push((format!("gamma[{i}]"), (1, d[i])));
        }
        for j in 1..k {
            out.push((format!("beta_chain[{}]", j - 1), (dn[j], dn[j])));
        }
        for j in 1..=k {
            out.push((format!("m_xi[{}]", j - 1), (dn[j], dn[j - 1])));
        }
        for j in 1..=k {
            out.push((format!("m_psi[{}]", j - 1), (dn[j - 1], dn[j])));
        }
        out
    }

    pub fn check_shapes(&self) -> Result<()> {
        let dims = compute_dimensions(&self.topo)?;
        if dims != self.dims {
            return Err(Error::Field {
                path: "dims".into(),
                message: "cached dimensions disagree with the topology".into(),
            });
        }
        let lens = [
            ("beta", self.beta.len(), self.n() + 1),
            ("A", self.a.len(), self.n()),
            ("alpha", self.alpha.len(), self.n()),
            ("gamma", self.gamma.len(), self.n()),
            ("beta_chain", self.beta_chain.len(), self.k() - 1),
            ("m_xi", self.mxi.len(), self.k()),
            ("m_psi", self.mpsi.len(), self.k()),
        ];
        for (name, got, want) in lens {
            if got != want {
                return Err(Error::Field {
                    path: name.into(),
                    message: format!("expected {want} matrices, found {got}"),
                });
            }
        }
        for ((field, m), (_, expected)) in self
            .named_matrices()
            .into_iter()
            .zip(Self::expected_shapes(&dims))
        {
            if m.shape() != expected {
                return Err(Error::ShapeMismatch {
                    field,
                    expected,
                    found: m.shape(),
                });
            }
        }
        Ok(())
    }

    /// Applies the gauge transformation `beta_i -> g_i beta_i g_i^{-1}`,
    /// `A_i -> g_{i+1} A_i g_i^{-1}`, `alpha_i -> g_{i+1} alpha_i`,
    /// `gamma_i -> gamma_i g_i^{-1}`, and the matching change on the NUT
    /// chain with `h_0 = g_n`, `h_k = g_0`.
    ///
    /// `g` holds `g_0..g_n` with inverses; `h` holds the interior
    /// `h_1..h_{k-1}` with inverses.
    pub fn gauge(&self, g: &[(CMat, CMat)], h: &[(CMat, CMat)]) -> BowDatum {
        let (n, k) = (self.n(), self.k());
        let mut out = self.clone();
        for i in 0..=n {
            out.beta[i] = &g[i].0 * &self.beta[i] * &g[i].1;
        }
        for i in 0..n {
            out.a[i] = &g[i + 1].0 * &self.a[i] * &g[i].1;
            out.alpha[i] = &g[i + 1].0 * &self.alpha[i];
            out.gamma[i] = &self.gamma[i] * &g[i].1;
        }
        let chain = |j: usize| -> &(CMat, CMat) {
            if j == 0 {
                &g[n]
            } else if j == k {
                &g[0]
            } else {
                &h[j - 1]
            }
        };
        for j in 1..k {
            out.beta_chain[j - 1] = &h[j - 1].0 * &self.beta_chain[j - 1] * &h[j - 1].1;
        }
        for j in 1..=k {
            out.mxi[j - 1] = &chain(j).0 * &self.mxi[j - 1] * &chain(j - 1).1;
            out.mpsi[j - 1] = &chain(j - 1).0 * &self.mpsi[j - 1] * &chain(j).1;
        }
        out
    }
}

/// Checks the Sylvester relations on the lambda chain and the factorised
/// relations on the NUT chain.
pub fn validate_relations(b: &BowDatum, tol: f64) -> Result<ValidationReport> {
    b.check_shapes()?;
    let mut rep = ValidationReport::new(tol);
    for i in 0..b.n() {
        let lhs = &b.beta[i + 1] * &b.a[i] - &b.a[i] * &b.beta[i];
        let rhs = &b.alpha[i] * &b.gamma[i];
        rep.push_matrices(format!("sylvester[{i}]"), &lhs, &rhs);
    }
    for j in 1..=b.k() {
        let z = b.topo.z[j - 1];
        let (xi, psi) = (&b.mxi[j - 1], &b.mpsi[j - 1]);
        let right = b.beta_n(j);
        let left = b.beta_n(j - 1);
        rep.push_matrices(
            format!("chain_right[{j}]"),
            right,
            &(xi * psi + scalar(right.nrows(), z)),
        );
        rep.push_matrices(
            format!("chain_left[{j}]"),
            left,
            &(psi * xi + scalar(left.nrows(), z)),
        );
    }
    Ok(rep)
}

/// Composite maps `(M_xi_hat, M_psi_hat)` along the NUT chain:
/// `M_xi_hat = M_{xi_k} ... M_{xi_1}` (`d_0 x d_n`) and
/// `M_psi_hat = M_{psi_1} ... M_{psi_k}` (`d_n x d_0`).
pub fn aggregate_maps(b: &BowDatum) -> Result<(CMat, CMat)> {
    b.check_shapes()?;
    Ok(aggregate_unchecked(b))
}

pub(crate) fn aggregate_unchecked(b: &BowDatum) -> (CMat, CMat) {
    let dn0 = b.dims.dn[0];
    let mut x = CMat::identity(dn0, dn0);
    for m in &b.mxi {
        x = m * x;
    }
    let mut y = CMat::identity(dn0, dn0);
    for m in &b.mpsi {
        y *= m;
    }
    (x, y)
}

/// Consequences of the chain relations: intertwinings, characteristic
/// polynomial telescoping, composite products and traces.
pub fn check_chain_invariants(b: &BowDatum, tol: f64) -> Result<ValidationReport> {
    b.check_shapes()?;
    let mut rep = ValidationReport::new(tol);
    let k = b.k();
    for j in 1..=k {
        let z = b.topo.z[j - 1];
        let (xi, psi) = (&b.mxi[j - 1], &b.mpsi[j - 1]);
        let right = b.beta_n(j);
        let left = b.beta_n(j - 1);
        rep.push_matrices(
            format!("intertwine_psi[{j}]"),
            &(psi * right),
            &(left * psi),
        );
        rep.push_matrices(format!("intertwine_xi[{j}]"), &(xi * left), &(right * xi));

        let nd = b.topo.nd[j - 1];
        let p_right = charpoly(&(right - scalar(right.nrows(), z)));
        let p_left = charpoly(&(left - scalar(left.nrows(), z)));
        let (hi, lo) = if nd >= 0 {
            (p_right, poly_shift(&p_left, nd as usize))
        } else {
            (p_left, poly_shift(&p_right, nd.unsigned_abs() as usize))
        };
        let residual = poly_residual(&hi, &lo);
        rep.push_value(format!("charpoly[{j}]"), residual, residual);

        let dtr = right.trace() - left.trace() - z * nd as f64;
        let scale = 1.0 + right.trace().norm() + left.trace().norm() + (z * nd as f64).norm();
        rep.push_value(format!("trace[{j}]"), dtr.norm(), dtr.norm() / scale);
    }
    let (x, y) = aggregate_unchecked(b);
    let z = &b.topo.z;
    let n = b.n();
    rep.push_matrices("composite_xy", &(&x * &y), &shifted_product(&b.beta[0], z));
    rep.push_matrices("composite_yx", &(&y * &x), &shifted_product(&b.beta[n], z));
    rep.push_matrices(
        "aggregate_psi",
        &(&y * &b.beta[0]),
        &(&b.beta[n] * &y),
    );
    rep.push_matrices(
        "aggregate_xi",
        &(&x * &b.beta[n]),
        &(&b.beta[0] * &x),
    );
    // The literal reading M_psi beta_0 = beta_n M_xi only type-checks when
    // d_0 = d_n; it is listed for reference and never affects the verdict.
    if b.dims.d[0] == b.dims.d[n] {
        rep.push_informational("literal_psi_xi", &(&y * &b.beta[0]), &(&b.beta[n] * &x));
    }
    Ok(rep)
}

/// Which half of the pointwise exactness failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactnessSide {
    /// A common kernel vector of `eta - beta_i`, `gamma_i`, `A_i`.
    Injectivity,
    /// A common left kernel vector of `eta - beta_{i+1}`, `A_i`, `alpha_i`.
    Surjectivity,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExactnessOutcome {
    Pass,
    Fail {
        eta: Complex64,
        side: ExactnessSide,
        witness: CMat,
    },
    Indeterminate {
        reason: String,
    },
}

impl ExactnessOutcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, ExactnessOutcome::Pass)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactnessReport {
    pub index: usize,
    /// Cluster means that were tested.
    pub candidates: Vec<Complex64>,
    pub outcome: ExactnessOutcome,
}

/// Pointwise exactness of the `i`-th three-term complex, decided at the
/// finitely many `eta` where it can fail: the eigenvalues of `beta_i`
/// (injectivity) and of `beta_{i+1}` (surjectivity).
pub fn check_exactness(b: &BowDatum, i: usize) -> Result<ExactnessReport> {
    b.check_shapes()?;
    if i >= b.n() {
        return Err(Error::Structure(format!(
            "exactness index {i} out of range 0..{}",
            b.n()
        )));
    }
    let (bi, bj) = (&b.beta[i], &b.beta[i + 1]);
    let (a, alpha, gamma) = (&b.a[i], &b.alpha[i], &b.gamma[i]);
    let mut candidates = Vec::new();

    let Some(ev) = eigenvalues(bi) else {
        return Ok(indeterminate(i, candidates, format!("eigensolver on beta[{i}]")));
    };
    for eta in cluster(&ev, EIG_CLUSTER) {
        candidates.push(eta);
        let shifted = scalar(bi.nrows(), eta) - bi;
        let stack = vstack(&[&shifted, gamma, a], bi.ncols());
        let (kernel, info) = null_space(&stack);
        if let Some(s) = info.straddle {
            return Ok(indeterminate(
                i,
                candidates,
                format!("rank of injectivity stack at eta={eta}: sigma {s:e} near threshold {:e}", info.threshold),
            ));
        }
        if kernel.ncols() > 0 {
            return Ok(ExactnessReport {
                index: i,
                candidates,
                outcome: ExactnessOutcome::Fail {
                    eta,
                    side: ExactnessSide::Injectivity,
                    witness: kernel.columns(0, 1).into_owned(),
                },
            });
        }
    }

    let Some(ev) = eigenvalues(bj) else {
        return Ok(indeterminate(
            i,
            candidates,
            format!("eigensolver on beta[{}]", i + 1),
        ));
    };
    for eta in cluster(&ev, EIG_CLUSTER) {
        candidates.push(eta);
        let shifted = scalar(bj.nrows(), eta) - bj;
        let row = hstack(&[&shifted, a, alpha], bj.nrows());
        let (kernel, info) = null_space(&tr(&row));
        if let Some(s) = info.straddle {
            return Ok(indeterminate(
                i,
                candidates,
                format!("rank of surjectivity stack at eta={eta}: sigma {s:e} near threshold {:e}", info.threshold),
            ));
        }
        if kernel.ncols() > 0 {
            return Ok(ExactnessReport {
                index: i,
                candidates,
                outcome: ExactnessOutcome::Fail {
                    eta,
                    side: ExactnessSide::Surjectivity,
                    witness: tr(&kernel.columns(0, 1).into_owned()),
                },
            });
        }
    }
    Ok(ExactnessReport {
        index: i,
        candidates,
        outcome: ExactnessOutcome::Pass,
    })
}

fn indeterminate(index: usize, candidates: Vec<Complex64>, reason: String) -> ExactnessReport {
    ExactnessReport {
        index,
        candidates,
        outcome: ExactnessOutcome::Indeterminate { reason },
    }
}

/// Runs [`check_exactness`] for every `i`.
pub fn check_all_exactness(b: &BowDatum) -> Result<Vec<ExactnessReport>> {
    (0..b.n()).map(|i| check_exactness(b, i)).collect()
}
