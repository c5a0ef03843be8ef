//! Orthogonal and symplectic structures on bow data.
//!
//! Naming follows the bow datum: `A_i` is the `d_{i+1} x d_i` block and
//! `alpha_i` the column. Pairing matrices are oriented so that
//! `beta_i^T K_i = K_i beta_{n-i}` holds literally, with `K_i` of shape
//! `d_i x d_{n-i}`. All transposes are plain (bilinear, not Hermitian).

use serde::{Deserialize, Serialize};

use num_complex::Complex64;

use crate::bowdata::{aggregate_unchecked, BowDatum};
use crate::error::{Error, Result};
use crate::linalg::{c, eigenvalues, eye, frob, full_svd, scalar, solve, tr, CMat};
use crate::monad::{assemble_monad, fiber_of, BlockIndex, SurfacePoint};
use crate::report::ValidationReport;
use crate::topology::{DimensionVector, TopologicalData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    #[serde(rename = "SO")]
    So,
    #[serde(rename = "Sp")]
    Sp,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::So => "SO",
            Flavor::Sp => "Sp",
        }
    }
}

impl std::str::FromStr for Flavor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SO" | "so" => Ok(Flavor::So),
            "Sp" | "sp" | "SP" => Ok(Flavor::Sp),
            other => Err(Error::Field {
                path: "pairing.flavor".into(),
                message: format!("unknown flavor {other:?}"),
            }),
        }
    }
}

/// Pairing matrices `K_0..K_n` and signs `f_0..f_{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingDatum {
    pub flavor: Flavor,
    pub k: Vec<CMat>,
    pub f: Vec<f64>,
    /// Input was given in the mirrored orientation (`K_i` stored transposed).
    pub transposed: bool,
}

/// The sign constants fixed by the flavor.
pub fn standard_signs(flavor: Flavor, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| match flavor {
            Flavor::So => 1.0,
            Flavor::Sp => {
                if 2 * i < n {
                    1.0
                } else {
                    -1.0
                }
            }
        })
        .collect()
}

/// Checks the charge symmetry required by an SO/Sp structure.
pub fn check_flavor_charges(t: &TopologicalData, dims: &DimensionVector, flavor: Flavor) -> Result<()> {
    let fail = |reason: String| Error::FlavorChargeMismatch {
        flavor: flavor.name().into(),
        reason,
    };
    let n = t.n;
    if let Some(j) = t.nd.iter().position(|&v| v != 0) {
        return Err(fail(format!("nd[{j}] = {} is nonzero", t.nd[j])));
    }
    for i in 0..n {
        if t.m[i] != -t.m[n - 1 - i] {
            return Err(fail(format!(
                "m[{i}] = {} is not minus m[{}] = {}",
                t.m[i],
                n - 1 - i,
                t.m[n - 1 - i]
            )));
        }
    }
    for i in 0..=n {
        if dims.d[i] != dims.d[n - i] {
            return Err(fail(format!("d[{i}] != d[{}]", n - i)));
        }
    }
    if flavor == Flavor::Sp && n % 2 == 1 {
        return Err(fail("symplectic rank must be even".into()));
    }
    Ok(())
}

impl PairingDatum {
    /// The reference choice of pairing matrices.
    ///
    /// Compatibility of the column identities forces `K_j = -K_{n-j}^T` for
    /// SO and `K_j = K_{n-j}^T` for Sp. The reference choice takes
    /// `K_i = I` throughout for Sp, and for SO `K_i = I` when `2i < n`,
    /// `K_i = -I` when `2i > n`; the self-paired middle block of SO would
    /// have to be skew, so it must be empty.
    pub fn standard(t: &TopologicalData, dims: &DimensionVector, flavor: Flavor) -> Result<Self> {
        check_flavor_charges(t, dims, flavor)?;
        let n = t.n;
        if flavor == Flavor::So && n % 2 == 0 && dims.d[n / 2] != 0 {
            return Err(Error::FlavorChargeMismatch {
                flavor: "SO".into(),
                reason: format!(
                    "middle block d[{}] = {} must vanish for the reference pairing",
                    n / 2,
                    dims.d[n / 2]
                ),
            });
        }
        let k = (0..=n)
            .map(|i| {
                let id = eye(dims.d[i]);
                match flavor {
                    Flavor::So if 2 * i > n => -id,
                    _ => id,
                }
            })
            .collect();
        Ok(PairingDatum {
            flavor,
            k,
            f: standard_signs(flavor, n),
            transposed: false,
        })
    }

    /// `K_i` in the working orientation.
    pub fn k_mat(&self, i: usize) -> CMat {
        if self.transposed {
            self.k[i].transpose()
        } else {
            self.k[i].clone()
        }
    }
}

fn check_pairing_shapes(b: &BowDatum, p: &PairingDatum) -> Result<()> {
    let n = b.n();
    if p.k.len() != n + 1 {
        return Err(Error::Field {
            path: "pairing.K".into(),
            message: format!("expected {} matrices, found {}", n + 1, p.k.len()),
        });
    }
    if p.f.len() != n {
        return Err(Error::Field {
            path: "pairing.f".into(),
            message: format!("expected {n} signs, found {}", p.f.len()),
        });
    }
    for i in 0..=n {
        let want = (b.dims.d[i], b.dims.d[n - i]);
        let got = p.k_mat(i).shape();
        if got != want {
            return Err(Error::ShapeMismatch {
                field: format!("pairing.K[{i}]"),
                expected: want,
                found: got,
            });
        }
    }
    Ok(())
}

/// Residuals of the identities tying the bow datum to the pairing:
///
/// * `beta_i^T K_i = K_i beta_{n-i}`
/// * `K_i A_{n-i-1} = A_i^T K_{i+1}`
/// * `K_i alpha_{n-i-1} = f_i gamma_i^T`
/// * `-alpha_i^T K_{i+1} = f_i gamma_{n-i-1}`
/// * `M_psi_hat^T K_n = K_0 M_psi_hat` and `M_xi_hat^T K_0 = K_n M_xi_hat`
pub fn verify_pairing_relations(b: &BowDatum, p: &PairingDatum, tol: f64) -> Result<ValidationReport> {
    b.check_shapes()?;
    check_flavor_charges(&b.topo, &b.dims, p.flavor)?;
    check_pairing_shapes(b, p)?;
    let n = b.n();
    let k: Vec<CMat> = (0..=n).map(|i| p.k_mat(i)).collect();
    let mut rep = ValidationReport::new(tol);

    let signs = standard_signs(p.flavor, n);
    rep.push_check(
        "signs",
        p.f == signs,
        format!("expected {signs:?}, found {:?}", p.f),
    );
    for (i, ki) in k.iter().enumerate() {
        let svd = full_svd(ki);
        let ok = match (svd.sigma.first(), svd.sigma.last()) {
            (Some(&hi), Some(&lo)) => svd.sigma.len() == ki.nrows().max(ki.ncols()) && lo > 1e-8 * hi,
            _ => ki.is_empty(),
        };
        rep.push_check(format!("nondegenerate[{i}]"), ok, format!("sigma = {:?}", svd.sigma));
    }

    for i in 0..=n {
        rep.push_matrices(
            format!("adjoint[{i}]"),
            &(tr(&b.beta[i]) * &k[i]),
            &(&k[i] * &b.beta[n - i]),
        );
    }
    for i in 0..n {
        let j = n - i - 1;
        let f = c(p.f[i], 0.0);
        rep.push_matrices(
            format!("link[{i}]"),
            &(&k[i] * &b.a[j]),
            &(tr(&b.a[i]) * &k[i + 1]),
        );
        rep.push_matrices(
            format!("column[{i}]"),
            &(&k[i] * &b.alpha[j]),
            &(tr(&b.gamma[i]) * f),
        );
        rep.push_matrices(
            format!("row[{i}]"),
            &(-(tr(&b.alpha[i]) * &k[i + 1])),
            &(&b.gamma[j] * f),
        );
    }
    let (x, y) = aggregate_unchecked(b);
    rep.push_matrices("self_adjoint_psi", &(tr(&y) * &k[n]), &(&k[0] * &y));
    rep.push_matrices("self_adjoint_xi", &(tr(&x) * &k[0]), &(&k[n] * &x));
    Ok(rep)
}

/// Distance below which `eta` counts as a pole of a resolvent.
pub const POLE_TOL: f64 = 1e-8;

/// `((eta - beta)^{-1})^T gamma^T`, refusing `eta` near the spectrum.
fn resolvent_column(beta: &CMat, gamma: &CMat, eta: Complex64, name: &str) -> Result<CMat> {
    let spectrum = eigenvalues(beta).ok_or_else(|| Error::Eigensolver(name.into()))?;
    if let Some(distance) = spectrum
        .iter()
        .map(|l| (l - eta).norm())
        .filter(|&dist| dist < POLE_TOL)
        .reduce(f64::min)
    {
        return Err(Error::PoleAtEta {
            eta: eta.to_string(),
            matrix: name.into(),
            distance,
        });
    }
    let shifted = tr(&(scalar(beta.nrows(), eta) - beta));
    solve(&shifted, &tr(gamma)).ok_or_else(|| Error::PoleAtEta {
        eta: eta.to_string(),
        matrix: name.into(),
        distance: 0.0,
    })
}

/// The functional `(a, a') -> gamma_i (eta - beta_i)^{-1} a + a'` as a column.
fn section_functional(b: &BowDatum, i: usize, eta: Complex64) -> Result<CMat> {
    let col = resolvent_column(&b.beta[i], &b.gamma[i], eta, &format!("beta[{i}]"))?;
    let d = col.nrows();
    let mut u = CMat::zeros(d + 1, 1);
    u.view_mut((0, 0), (d, 1)).copy_from(&col);
    u[(d, 0)] = c(1.0, 0.0);
    Ok(u)
}

/// Gram matrix of the meromorphic pairing between sections of `P_i` and
/// `P_{n-i-1}` at `eta`: `f_i U V^T`, a `(d_i + 1) x (d_{n-i-1} + 1)` matrix of
/// rank one. Sections are `(a, a')` with `a` in `C^{d_i}` and `a'` scalar.
pub fn p_pairing_matrix(b: &BowDatum, p: &PairingDatum, i: usize, eta: Complex64) -> Result<CMat> {
    let n = b.n();
    if i >= n {
        return Err(Error::Field {
            path: "i".into(),
            message: format!("pairing index {i} out of range 0..{n}"),
        });
    }
    if p.f.len() != n {
        return Err(Error::Field {
            path: "pairing.f".into(),
            message: format!("expected {n} signs, found {}", p.f.len()),
        });
    }
    let u = section_functional(b, i, eta)?;
    let v = section_functional(b, n - i - 1, eta)?;
    Ok(u * tr(&v) * c(p.f[i], 0.0))
}

/// `+1` when the pairing on the bundle is symmetric, `-1` when skew.
pub fn flavor_sign(flavor: Flavor) -> f64 {
    match flavor {
        Flavor::So => 1.0,
        Flavor::Sp => -1.0,
    }
}

/// Largest relative defect of `G_i = s G_{n-i-1}^T` over all `i`, where
/// `s` is the flavor sign.
pub fn gram_symmetry_defect(b: &BowDatum, p: &PairingDatum, eta: Complex64) -> Result<f64> {
    let n = b.n();
    let s = c(flavor_sign(p.flavor), 0.0);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let gi = p_pairing_matrix(b, p, i, eta)?;
        let gj = tr(&p_pairing_matrix(b, p, n - i - 1, eta)?) * s;
        worst = worst.max(frob(&(&gi - &gj)) / (1.0 + frob(&gi) + frob(&gj)));
    }
    Ok(worst)
}

/// The pairing form on a fiber, in the basis returned by `fiber_at`.
#[derive(Debug, Clone)]
pub struct FiberForm {
    pub form: CMat,
    /// `||form - s form^T|| / (1 + 2 ||form||)` with `s` the flavor sign.
    pub symmetry_defect: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// The symmetry defect is below the tolerance.
    pub symmetric: bool,
}

/// `sum_i <u_{P_i}, v_{P_{n-i-1}}>_i` for the columns `u, v` of `basis`,
/// given in `B + C` coordinates.
pub fn pairing_on_basis(
    b: &BowDatum,
    p: &PairingDatum,
    index: &BlockIndex,
    eta: Complex64,
    basis: &CMat,
) -> Result<CMat> {
    let n = b.n();
    let r = basis.ncols();
    let mut form = CMat::zeros(r, r);
    for i in 0..n {
        let g = p_pairing_matrix(b, p, i, eta)?;
        let (bi, bj) = (&index.b[i], &index.b[n - i - 1]);
        let ui = basis.rows(bi.offset, bi.len);
        let vj = basis.rows(bj.offset, bj.len);
        form += ui.transpose() * g * vj;
    }
    Ok(form)
}

/// Evaluates `sum_i <u_{P_i}, v_{P_{n-i-1}}>_i` on the P-coordinates of the
/// fiber basis at `x`. Vectors in `im Amap` pair to zero, so the form is
/// well defined on the fiber.
pub fn fiber_form(b: &BowDatum, p: &PairingDatum, x: &SurfacePoint, tol: f64) -> Result<FiberForm> {
    let n = b.n();
    let m = assemble_monad(b, x)?;
    let fiber = fiber_of(&m)?;
    if fiber.rank != n {
        return Err(Error::FiberRank {
            rank: fiber.rank,
            expected: n,
        });
    }
    let form = pairing_on_basis(b, p, &m.index, x.eta, &fiber.basis)?;
    let s = c(flavor_sign(p.flavor), 0.0);
    let symmetry_defect = frob(&(&form - tr(&form) * s)) / (1.0 + 2.0 * frob(&form));
    let svd = full_svd(&form);
    let sigma_max = svd.sigma.first().copied().unwrap_or(0.0);
    let sigma_min = svd.sigma.last().copied().unwrap_or(0.0);
    if n > 0 && sigma_min < tol {
        return Err(Error::DegenerateForm {
            point: format!("({}, {}, {})", x.xi, x.psi, x.eta),
            sigma: sigma_min,
        });
    }
    Ok(FiberForm {
        form,
        symmetry_defect,
        sigma_min,
        sigma_max,
        symmetric: symmetry_defect < tol,
    })
}

/// Residual of the rank-one component identity
/// `R_i^T K_i A_{n-i-1} - A_i^T K_{i+1} R_{n-i-1} = f_i R_i^T gamma_i^T gamma_{n-i-1} R_{n-i-1}`
/// with `R_i = (eta - beta_i)^{-1}`.
pub fn component_identity_residual(b: &BowDatum, p: &PairingDatum, i: usize, eta: Complex64) -> Result<f64> {
    let n = b.n();
    let j = n - i - 1;
    let resolvent = |l: usize| -> Result<CMat> {
        let d = b.dims.d[l];
        crate::linalg::inverse(&(scalar(d, eta) - &b.beta[l])).ok_or_else(|| Error::PoleAtEta {
            eta: eta.to_string(),
            matrix: format!("beta[{l}]"),
            distance: 0.0,
        })
    };
    let (ri, rj) = (resolvent(i)?, resolvent(j)?);
    let lhs = tr(&ri) * p.k_mat(i) * &b.a[j] - tr(&b.a[i]) * p.k_mat(i + 1) * &rj;
    let rhs = tr(&ri) * tr(&b.gamma[i]) * &b.gamma[j] * &rj * c(p.f[i], 0.0);
    Ok(frob(&(&lhs - &rhs)) / (1.0 + frob(&lhs) + frob(&rhs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bowdata::validate_relations;
    use crate::generator::{canonical_example, gaussian, generate_mirror, rng_from_seed, standard_topology};
    use crate::generator::ginibre;
    use crate::linalg::{eig_decompose, inverse};
    use rand::Rng;
    use crate::monad::{fiber_at, random_points};

    fn mirror(name: &str) -> (BowDatum, PairingDatum) {
        let e = canonical_example(name).unwrap();
        (e.datum, e.pairing.unwrap())
    }

    fn rank_one(m: &CMat) -> bool {
        let s = full_svd(m).sigma;
        s[0] > 0.0 && s.iter().skip(1).all(|&x| x < 1e-12 * s[0])
    }

    #[test]
    fn signs_follow_flavor() {
        assert_eq!(standard_signs(Flavor::So, 3), vec![1.0, 1.0, 1.0]);
        assert_eq!(standard_signs(Flavor::Sp, 2), vec![1.0, -1.0]);
        assert_eq!(standard_signs(Flavor::Sp, 4), vec![1.0, 1.0, -1.0, -1.0]);
        assert_eq!("Sp".parse::<Flavor>().unwrap(), Flavor::Sp);
        assert!("U".parse::<Flavor>().is_err());
    }

    #[test]
    fn mirrors_pass_pairing_relations() {
        for name in ["so2-mirror", "sp1-mirror"] {
            let (b, p) = mirror(name);
            let rep = verify_pairing_relations(&b, &p, 1e-9).unwrap();
            assert!(rep.verdict, "{name}: {rep:?}");
            assert!(validate_relations(&b, 1e-9).unwrap().verdict);
        }
    }

    #[test]
    fn larger_mirrors_pass() {
        for (m, m0, flavor) in [
            (vec![1, 0, 0, -1], 1, Flavor::So),
            (vec![0, 1, -1, 0], 2, Flavor::Sp),
            (vec![1, -1], 2, Flavor::Sp),
        ] {
            let t = standard_topology(&m, &[0], m0);
            let (b, p) = generate_mirror(&t, flavor, 5).unwrap_or_else(|e| panic!("{m:?} {flavor:?}: {e}"));
            let rep = verify_pairing_relations(&b, &p, 1e-8).unwrap();
            assert!(rep.verdict, "{m:?} {flavor:?}: {}", rep.max_relative());
        }
    }

    #[test]
    fn broken_adjointness_is_measured() {
        let (mut b, p) = mirror("sp1-mirror");
        b.beta[0][(0, 0)] += c(0.5, 0.0);
        let rep = verify_pairing_relations(&b, &p, 1e-9).unwrap();
        let r = rep.get("adjoint[0]").unwrap();
        let want = 0.5 / (1.0 + frob(&tr(&b.beta[0])) + frob(&b.beta[2]));
        assert!((r.relative - want).abs() < 1e-12);
        assert!(!rep.verdict);
    }

    #[test]
    fn single_interval_checks_only_applicable_identities() {
        let t = standard_topology(&[0], &[0], 1);
        let mut b = BowDatum::zeros(t).unwrap();
        b.gamma[0][(0, 0)] = c(1.0, 0.0);
        b.alpha[0][(0, 0)] = c(-1.0, 0.0);
        let p = PairingDatum {
            flavor: Flavor::So,
            k: vec![eye(1), -eye(1)],
            f: vec![1.0],
            transposed: false,
        };
        let rep = verify_pairing_relations(&b, &p, 1e-9).unwrap();
        let names: Vec<&str> = rep.residuals.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "adjoint[0]",
                "adjoint[1]",
                "link[0]",
                "column[0]",
                "row[0]",
                "self_adjoint_psi",
                "self_adjoint_xi"
            ]
        );
    }

    #[test]
    fn charge_mismatch_is_an_error() {
        let t = standard_topology(&[1, 0], &[0], 1);
        let dims = crate::topology::compute_dimensions(&t).unwrap();
        assert!(matches!(
            PairingDatum::standard(&t, &dims, Flavor::So),
            Err(Error::FlavorChargeMismatch { .. })
        ));
    }

    #[test]
    fn empty_gram_is_the_sign() {
        let b = BowDatum::zeros(standard_topology(&[0], &[0], 0)).unwrap();
        let p = PairingDatum {
            flavor: Flavor::So,
            k: vec![eye(0), eye(0)],
            f: vec![1.0],
            transposed: false,
        };
        let g = p_pairing_matrix(&b, &p, 0, c(0.3, 0.1)).unwrap();
        assert_eq!(g, CMat::from_element(1, 1, c(1.0, 0.0)));
    }

    #[test]
    fn scalar_gram_uses_the_resolvent() {
        let mut b = BowDatum::zeros(standard_topology(&[0], &[0], 1)).unwrap();
        b.gamma[0][(0, 0)] = c(1.0, 0.0);
        let p = PairingDatum {
            flavor: Flavor::So,
            k: vec![eye(1), -eye(1)],
            f: vec![1.0],
            transposed: false,
        };
        let g = p_pairing_matrix(&b, &p, 0, c(2.0, 0.0)).unwrap();
        let want = CMat::from_row_slice(2, 2, &[c(0.25, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(1.0, 0.0)]);
        assert!(frob(&(g.clone() - want)) < 1e-15);
        assert!(rank_one(&g));
        assert!(matches!(
            p_pairing_matrix(&b, &p, 0, c(1e-10, 0.0)),
            Err(Error::PoleAtEta { .. })
        ));
    }

    #[test]
    fn gram_matrices_are_rank_one() {
        let (b, p) = mirror("sp1-mirror");
        let mut rng = rng_from_seed(3);
        for _ in 0..10 {
            let eta = gaussian(&mut rng) * 3.0;
            for i in 0..b.n() {
                assert!(rank_one(&p_pairing_matrix(&b, &p, i, eta).unwrap()));
            }
        }
    }

    #[test]
    fn gram_symmetry_on_random_pairs() {
        for name in ["so2-mirror", "sp1-mirror"] {
            let (b, p) = mirror(name);
            let n = b.n();
            let s = flavor_sign(p.flavor);
            let mut rng = rng_from_seed(17);
            for _ in 0..100 {
                let eta = gaussian(&mut rng) * 3.0;
                let i = rng.random_range(0..n);
                let j = n - i - 1;
                let u = ginibre(&mut rng, b.dims.d[i] + 1, 1);
                let v = ginibre(&mut rng, b.dims.d[j] + 1, 1);
                let lhs = (tr(&u) * p_pairing_matrix(&b, &p, i, eta).unwrap() * &v)[(0, 0)];
                let rhs = (tr(&v) * p_pairing_matrix(&b, &p, j, eta).unwrap() * &u)[(0, 0)] * s;
                assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()), "{name}");
            }
            assert!(gram_symmetry_defect(&b, &p, c(0.7, -0.2)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn fiber_form_has_the_flavor_symmetry() {
        for name in ["so2-mirror", "sp1-mirror"] {
            let (b, p) = mirror(name);
            let mut rng = rng_from_seed(29);
            for x in random_points(&b, 20, &mut rng).unwrap() {
                let ff = fiber_form(&b, &p, &x, 1e-6).unwrap();
                assert!(ff.symmetric, "{name}: {}", ff.symmetry_defect);
                assert!(ff.sigma_min > 1e-6, "{name}: {}", ff.sigma_min);
            }
        }
    }

    #[test]
    fn fiber_form_transforms_by_congruence() {
        let (b, p) = mirror("so2-mirror");
        let mut rng = rng_from_seed(31);
        let x = random_points(&b, 1, &mut rng).unwrap()[0];
        let m = assemble_monad(&b, &x).unwrap();
        let fiber = fiber_at(&b, &x).unwrap();
        let g = ginibre(&mut rng, 2, 2);
        let form = pairing_on_basis(&b, &p, &m.index, x.eta, &fiber.basis).unwrap();
        let moved = pairing_on_basis(&b, &p, &m.index, x.eta, &(&fiber.basis * &g)).unwrap();
        let want = tr(&g) * form * &g;
        assert!(frob(&(&moved - &want)) < 1e-10 * (1.0 + frob(&want)));
    }

    #[test]
    fn component_identity_at_random_eta() {
        for name in ["so2-mirror", "sp1-mirror"] {
            let (b, p) = mirror(name);
            let mut rng = rng_from_seed(41);
            for _ in 0..10 {
                let eta = gaussian(&mut rng) * 3.0;
                for i in 0..b.n() {
                    let r = component_identity_residual(&b, &p, i, eta).unwrap();
                    assert!(r < 1e-6, "{name} i={i}: {r}");
                }
            }
        }
    }

    /// Residue of `<(a, 0), (b, 0)>_i` at a simple eigenvalue `l` of `beta_i`,
    /// by the trapezoidal rule on a small circle, against
    /// `{Res_l (eta - beta_i)^{-1} a, A_{n-i-1} b}_i` through `K_i`.
    #[test]
    fn residues_match_the_k_pairing() {
        let t = standard_topology(&[0, 1, -1, 0], &[0], 2);
        let (b, p) = generate_mirror(&t, Flavor::Sp, 8).unwrap();
        let n = b.n();
        let mut rng = rng_from_seed(43);
        let mut checked = 0;
        for i in 0..n {
            let j = n - i - 1;
            let (di, dj) = (b.dims.d[i], b.dims.d[j]);
            if di == 0 || dj == 0 {
                continue;
            }
            let (v, lams) = eig_decompose(&b.beta[i], 1e-6).unwrap();
            let vinv = inverse(&v).unwrap();
            let mut poles = eigenvalues(&b.beta[i]).unwrap();
            poles.extend(eigenvalues(&b.beta[j]).unwrap());
            for (e, &l) in lams.iter().enumerate() {
                let radius = 0.3
                    * poles
                        .iter()
                        .map(|q| (q - l).norm())
                        .filter(|&dist| dist > 1e-9)
                        .fold(1.0, f64::min);
                let a = ginibre(&mut rng, di, 1);
                let bv = ginibre(&mut rng, dj, 1);
                let mut ua = CMat::zeros(di + 1, 1);
                ua.view_mut((0, 0), (di, 1)).copy_from(&a);
                let mut vb = CMat::zeros(dj + 1, 1);
                vb.view_mut((0, 0), (dj, 1)).copy_from(&bv);
                let steps = 256;
                let mut res = c(0.0, 0.0);
                for s in 0..steps {
                    let w = Complex64::from_polar(radius, std::f64::consts::TAU * s as f64 / steps as f64);
                    let g = p_pairing_matrix(&b, &p, i, l + w).unwrap();
                    res += (tr(&ua) * g * &vb)[(0, 0)] * w;
                }
                res /= steps as f64;
                let proj = v.column(e) * vinv.row(e);
                let want = (tr(&(proj * &a)) * p.k_mat(i) * &b.a[j] * &bv)[(0, 0)];
                assert!((res - want).norm() < 1e-6 * (1.0 + want.norm()), "i={i}: {res} vs {want}");
                checked += 1;
            }
        }
        assert!(checked > 0);
    }
}
