//! Random and canonical bow data satisfying every relation.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bowdata::{
    check_all_exactness, check_chain_invariants, validate_relations, BowDatum, ExactnessOutcome,
    DERIVED_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{
    c, eig_decompose, eigenvalues, full_svd, inverse, min_gap, min_self_gap, null_space,
    rank_info, scalar, schur, zeros, CMat,
};
use crate::orthosymplectic::{Flavor, PairingDatum};
use crate::topology::{compute_dimensions, validate_topology, TopologicalData};

pub const MAX_RETRIES: usize = 20;
/// Required spectral separation of freshly drawn endomorphisms.
pub const SPECTRAL_SEPARATION: f64 = 1e-3;
/// Minimum eigenvalue gap accepted by [`solve_sylvester`].
pub const SYLVESTER_GAP: f64 = 1e-6;
/// Residual tolerance a generated datum must meet.
pub const GENERATION_TOL: f64 = 1e-10;

pub type GenRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> GenRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Standard complex Gaussian scalar, `E|z|^2 = 1`.
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    c(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ginibre matrix: iid standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Invertible Ginibre matrix together with its inverse.
fn random_gauge<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (CMat, CMat) {
    loop {
        let g = ginibre(rng, n, n);
        if let Some(gi) = inverse(&g) {
            if gi.norm() < 1e4 {
                return (g, gi);
            }
        }
    }
}

/// Solves `p x - x q = rhs` by reducing both sides to complex Schur form.
pub fn solve_sylvester(p: &CMat, q: &CMat, rhs: &CMat) -> Result<CMat> {
    let (m, r) = (p.nrows(), q.nrows());
    if rhs.shape() != (m, r) {
        return Err(Error::ShapeMismatch {
            field: "C".into(),
            expected: (m, r),
            found: rhs.shape(),
        });
    }
    let (u, tp) = schur(p).ok_or_else(|| Error::Eigensolver("P".into()))?;
    let (v, tq) = schur(q).ok_or_else(|| Error::Eigensolver("Q".into()))?;
    let dp: Vec<Complex64> = (0..m).map(|i| tp[(i, i)]).collect();
    let dq: Vec<Complex64> = (0..r).map(|i| tq[(i, i)]).collect();
    let gap = min_gap(&dp, &dq);
    if gap <= SYLVESTER_GAP {
        return Err(Error::SpectraOverlap {
            gap,
            threshold: SYLVESTER_GAP,
        });
    }
    let f = u.adjoint() * rhs * &v;
    let mut y = zeros(m, r);
    for j in 0..r {
        let mut col = f.column(j).into_owned();
        for l in 0..j {
            col += y.column(l) * tq[(l, j)];
        }
        for a in (0..m).rev() {
            let mut s = col[a];
            for b in (a + 1)..m {
                s -= tp[(a, b)] * y[(b, j)];
            }
            y[(a, j)] = s / (tp[(a, a)] - tq[(j, j)]);
        }
    }
    Ok(u * y * v.adjoint())
}

/// Factors `cm = l r` with inner dimension `inner`.
///
/// The leading factors come from the SVD (`l = U_s S^{1/2}`,
/// `r = S^{1/2} V_s^H`). Surplus inner directions are filled with unit
/// vectors from the left null space (as columns of `l`, paired with zero rows
/// of `r`), then from the right null space (as rows of `r`, paired with zero
/// columns of `l`). When `cm` has full row rank the surplus columns of `l`
/// are random and the rows of `r` zero.
pub fn rank_factorization<R: Rng + ?Sized>(
    cm: &CMat,
    inner: usize,
    rng: &mut R,
) -> Result<(CMat, CMat)> {
    let (rows, cols) = cm.shape();
    let svd = full_svd(cm);
    let info = rank_info(&svd.sigma, rows, cols);
    let s = info.rank;
    if s > inner {
        return Err(Error::RankTooLarge { rank: s, inner });
    }
    let mut l = zeros(rows, inner);
    let mut r = zeros(inner, cols);
    for i in 0..s {
        let sq = c(svd.sigma[i].sqrt(), 0.0);
        l.set_column(i, &(svd.u.column(i) * sq));
        r.set_row(i, &(svd.v.column(i).adjoint() * sq));
    }
    let extra = inner - s;
    if extra == 0 {
        return Ok((l, r));
    }
    let (left_null, _) = null_space(&cm.adjoint());
    let u = left_null.ncols();
    let unit = |rng: &mut R, basis: &CMat| -> CMat {
        let w = basis * ginibre(rng, basis.ncols(), 1);
        let nrm = w.norm();
        w / c(nrm, 0.0)
    };
    if u == 0 {
        for i in s..inner {
            l.set_column(i, &unit(rng, &crate::linalg::eye(rows)).column(0));
        }
        return Ok((l, r));
    }
    let right_null = svd.v.columns(s, cols - s).into_owned();
    for (slot, i) in (s..inner).enumerate() {
        if slot < u {
            l.set_column(i, &unit(rng, &left_null).column(0));
        } else if right_null.ncols() > 0 {
            r.set_row(i, &unit(rng, &right_null).column(0).transpose());
        }
    }
    Ok((l, r))
}

/// The NUT chain `beta_{n,0..k}` and the maps between neighbours.
struct Chain {
    betas: Vec<CMat>,
    mxi: Vec<CMat>,
    mpsi: Vec<CMat>,
}

/// Builds the NUT chain outwards from the step where `dn` is smallest.
///
/// Steps on the left of that valley shrink (`nd_j <= 0`) and are built
/// backwards, steps on its right grow and are built forwards, so every
/// factorisation has enough inner room.
fn build_chain<R: Rng + ?Sized>(t: &TopologicalData, dn: &[usize], rng: &mut R) -> Result<Chain> {
    let k = t.k;
    let nd = &t.nd;
    if let Some(j) = nd.iter().position(|v| v.abs() >= 2) {
        return Err(Error::Infeasible(format!(
            "|nd[{j}]| = {} >= 2 forces a repeated eigenvalue {} on the chain, which \
             breaks pointwise exactness",
            nd[j].abs(),
            t.z[j]
        )));
    }
    let valley = nd.iter().rposition(|&v| v < 0).map_or(0, |p| p + 1);
    if let Some(j) = nd[..valley].iter().position(|&v| v > 0) {
        return Err(Error::Infeasible(format!(
            "nd[{j}] > 0 precedes a negative entry; only sequences that decrease then \
             increase along the chain are generated"
        )));
    }
    let start = if valley < k { valley + 1 } else { k };
    let z = |j: usize| t.z[j - 1];

    let mut betas: Vec<Option<CMat>> = vec![None; k + 1];
    let mut mxi: Vec<Option<CMat>> = vec![None; k];
    let mut mpsi: Vec<Option<CMat>> = vec![None; k];

    let x = ginibre(rng, dn[start], dn[start - 1]);
    let y = ginibre(rng, dn[start - 1], dn[start]);
    betas[start] = Some(&x * &y + scalar(dn[start], z(start)));
    betas[start - 1] = Some(&y * &x + scalar(dn[start - 1], z(start)));
    mxi[start - 1] = Some(x);
    mpsi[start - 1] = Some(y);

    for j in (start + 1)..=k {
        let prev = betas[j - 1].as_ref().expect("built");
        let target = prev - scalar(dn[j - 1], z(j));
        let (l, r) = rank_factorization(&target, dn[j], rng)?;
        let (g, gi) = random_gauge(rng, dn[j]);
        let psi = l * &g;
        let xi = gi * r;
        betas[j] = Some(&xi * &psi + scalar(dn[j], z(j)));
        mxi[j - 1] = Some(xi);
        mpsi[j - 1] = Some(psi);
    }
    for j in (1..start).rev() {
        let next = betas[j].as_ref().expect("built");
        let target = next - scalar(dn[j], z(j));
        let (l, r) = rank_factorization(&target, dn[j - 1], rng)?;
        let (g, gi) = random_gauge(rng, dn[j - 1]);
        let xi = l * &g;
        let psi = gi * r;
        betas[j - 1] = Some(&psi * &xi + scalar(dn[j - 1], z(j)));
        mxi[j - 1] = Some(xi);
        mpsi[j - 1] = Some(psi);
    }
    Ok(Chain {
        betas: betas.into_iter().map(|b| b.expect("built")).collect(),
        mxi: mxi.into_iter().map(|b| b.expect("built")).collect(),
        mpsi: mpsi.into_iter().map(|b| b.expect("built")).collect(),
    })
}

/// Random diagonalizable matrix whose spectrum is separated from itself and
/// from `avoid` by [`SPECTRAL_SEPARATION`].
fn random_diagonalizable<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    avoid: &[Complex64],
) -> Option<(CMat, Vec<Complex64>)> {
    for _ in 0..100 {
        let d: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
        if min_self_gap(&d) < SPECTRAL_SEPARATION || min_gap(&d, avoid) < SPECTRAL_SEPARATION {
            continue;
        }
        let (v, vi) = random_gauge(rng, dim);
        let m = &v * CMat::from_diagonal(&nalgebra::DVector::from_vec(d.clone())) * vi;
        return Some((m, d));
    }
    None
}

/// Solves `beta1 a - a beta0 = alpha gamma` when `beta0` and `beta1` share
/// eigenvalues. Works in eigen-coordinates: for every shared pair one of the
/// matching components of `alpha` or `gamma` is set to zero and the
/// corresponding entry of `a` is drawn at random (it is unconstrained).
/// Zeros go on the longer of the two vectors, so the shorter one stays
/// generic and neither vanishes unless `d_0 = d_1` equals the number of
/// shared pairs.
fn resonant_link<R: Rng + ?Sized>(
    rng: &mut R,
    beta0: &CMat,
    beta1: &CMat,
) -> std::result::Result<(CMat, CMat, CMat), String> {
    let (d0, d1) = (beta0.nrows(), beta1.nrows());
    let (v0, e0) = eig_decompose(beta0, SYLVESTER_GAP).ok_or("beta[0] has a repeated eigenvalue")?;
    let (v1, e1) = eig_decompose(beta1, SYLVESTER_GAP).ok_or("beta[1] has a repeated eigenvalue")?;
    let v0i = inverse(&v0).ok_or("beta[0] eigenbasis is singular")?;
    let mut at = ginibre(rng, d1, 1);
    let mut gt = ginibre(rng, 1, d0);
    let mut shared = Vec::new();
    for (a, x) in e1.iter().enumerate() {
        for (b, y) in e0.iter().enumerate() {
            let gap = (x - y).norm();
            let scale = 1.0 + x.norm().max(y.norm());
            if gap < 1e-8 * scale {
                shared.push((a, b));
            } else if gap < SPECTRAL_SEPARATION {
                return Err(format!("eigenvalues {x} and {y} are nearly but not exactly shared"));
            }
        }
    }
    for &(a, b) in &shared {
        if d0 >= d1 {
            gt[(0, b)] = c(0.0, 0.0);
        } else {
            at[(a, 0)] = c(0.0, 0.0);
        }
    }
    let mut a_t = zeros(d1, d0);
    for a in 0..d1 {
        for b in 0..d0 {
            a_t[(a, b)] = if shared.contains(&(a, b)) {
                gaussian(rng)
            } else {
                at[(a, 0)] * gt[(0, b)] / (e1[a] - e0[b])
            };
        }
    }
    let big_a = &v1 * a_t * &v0i;
    let alpha = &v1 * at;
    let gamma = gt * &v0i;
    Ok((big_a, alpha, gamma))
}

enum Attempt {
    /// Retrying cannot help.
    Hard(Error),
    /// A random draw was unlucky; try again.
    Soft(String),
}

impl From<Error> for Attempt {
    fn from(e: Error) -> Self {
        match e {
            Error::SpectraOverlap { .. } | Error::Eigensolver(_) => Attempt::Soft(e.to_string()),
            other => Attempt::Hard(other),
        }
    }
}

/// Checks a candidate against the full validation suite.
pub fn verify_generated(b: &BowDatum) -> std::result::Result<(), String> {
    let rel = validate_relations(b, GENERATION_TOL).map_err(|e| e.to_string())?;
    if !rel.verdict {
        return Err(format!("relations: max residual {:e}", rel.max_relative()));
    }
    let inv = check_chain_invariants(b, DERIVED_TOL).map_err(|e| e.to_string())?;
    if !inv.verdict {
        return Err(format!("chain invariants: max residual {:e}", inv.max_relative()));
    }
    for rep in check_all_exactness(b).map_err(|e| e.to_string())? {
        match rep.outcome {
            ExactnessOutcome::Pass => {}
            ExactnessOutcome::Fail { eta, side, .. } => {
                return Err(format!("exactness[{}] fails at eta = {eta} ({side:?})", rep.index))
            }
            ExactnessOutcome::Indeterminate { reason } => {
                return Err(format!("exactness[{}] indeterminate: {reason}", rep.index))
            }
        }
    }
    Ok(())
}

fn checked_dims(t: &TopologicalData) -> Result<crate::topology::DimensionVector> {
    let violations = validate_topology(t)?;
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidTopology(msg.join("; ")));
    }
    compute_dimensions(t)
}

fn retry<F>(mut draw: F) -> Result<BowDatum>
where
    F: FnMut() -> std::result::Result<BowDatum, Attempt>,
{
    let mut last = String::new();
    for _ in 0..MAX_RETRIES {
        match draw() {
            Ok(b) => match verify_generated(&b) {
                Ok(()) => return Ok(b),
                Err(e) => last = e,
            },
            Err(Attempt::Soft(e)) => last = e,
            Err(Attempt::Hard(e)) => return Err(e),
        }
    }
    Err(Error::RetriesExhausted {
        attempts: MAX_RETRIES,
        last,
    })
}

/// Random datum for the given charges, reproducible from `seed`.
///
/// The NUT chain is built from Ginibre factors, the interior endomorphisms
/// `beta_1..beta_{n-1}` are random diagonalizable matrices with separated
/// spectra, `alpha_i`, `gamma_i` are Ginibre and each `A_i` solves its
/// Sylvester relation. For `n = 1` the two ends of the lambda chain share
/// spectra and the link is solved in eigen-coordinates instead.
pub fn generate(t: &TopologicalData, seed: u64) -> Result<BowDatum> {
    let dims = checked_dims(t)?;
    let mut rng = rng_from_seed(seed);
    retry(|| draw(t, &dims, &mut rng))
}

fn eigen_or_soft(m: &CMat, name: &str) -> std::result::Result<Vec<Complex64>, Attempt> {
    eigenvalues(m).ok_or_else(|| Attempt::Soft(format!("eigensolver failed on {name}")))
}

fn draw<R: Rng + ?Sized>(
    t: &TopologicalData,
    dims: &crate::topology::DimensionVector,
    rng: &mut R,
) -> std::result::Result<BowDatum, Attempt> {
    let (n, k) = (t.n, t.k);
    let d = &dims.d;
    let chain = build_chain(t, &dims.dn, rng)?;
    let mut b = BowDatum::zeros(t.clone())?;
    b.beta[0] = chain.betas[k].clone();
    b.beta[n] = chain.betas[0].clone();
    b.beta_chain = chain.betas[1..k].to_vec();
    b.mxi = chain.mxi;
    b.mpsi = chain.mpsi;
    if n == 1 {
        let (a, alpha, gamma) = resonant_link(rng, &b.beta[0], &b.beta[1]).map_err(Attempt::Soft)?;
        b.a[0] = a;
        b.alpha[0] = alpha;
        b.gamma[0] = gamma;
        return Ok(b);
    }
    let mut avoid = eigen_or_soft(&b.beta[0], "beta[0]")?;
    avoid.extend(eigen_or_soft(&b.beta[n], "beta[n]")?);
    for i in 1..n {
        let (m, spec) = random_diagonalizable(rng, d[i], &avoid)
            .ok_or_else(|| Attempt::Soft(format!("could not separate the spectrum of beta[{i}]")))?;
        avoid.extend(spec);
        b.beta[i] = m;
    }
    for i in 0..n {
        let alpha = ginibre(rng, d[i + 1], 1);
        let gamma = ginibre(rng, 1, d[i]);
        b.a[i] = solve_sylvester(&b.beta[i + 1], &b.beta[i], &(&alpha * &gamma))?;
        b.alpha[i] = alpha;
        b.gamma[i] = gamma;
    }
    Ok(b)
}

fn symmetric<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = ginibre(rng, n, n);
    (&g + g.transpose()) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

fn skew<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = ginibre(rng, n, n);
    (&g - g.transpose()) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

/// Random datum carrying an SO or Sp structure with the reference pairing
/// of [`PairingDatum::standard`].
///
/// Half of the lambda chain is drawn freely and the other half is defined
/// through the pairing identities; the chain maps are symmetric (Sp) or
/// skew (SO). Supported for a single NUT and even `n`.
pub fn generate_mirror(t: &TopologicalData, flavor: Flavor, seed: u64) -> Result<(BowDatum, PairingDatum)> {
    let dims = checked_dims(t)?;
    if t.k != 1 || t.n % 2 != 0 {
        return Err(Error::Unsupported(format!(
            "mirror generation needs k = 1 and even n (got k = {}, n = {})",
            t.k, t.n
        )));
    }
    let pairing = PairingDatum::standard(t, &dims, flavor)?;
    let mut rng = rng_from_seed(seed);
    let b = retry(|| {
        let b = draw_mirror(t, &dims, &pairing, &mut rng)?;
        let rep = crate::orthosymplectic::verify_pairing_relations(&b, &pairing, GENERATION_TOL)?;
        if rep.verdict {
            Ok(b)
        } else {
            Err(Attempt::Soft(format!(
                "pairing relations: max residual {:e}",
                rep.max_relative()
            )))
        }
    })?;
    Ok((b, pairing))
}

fn draw_mirror<R: Rng + ?Sized>(
    t: &TopologicalData,
    dims: &crate::topology::DimensionVector,
    p: &PairingDatum,
    rng: &mut R,
) -> std::result::Result<BowDatum, Attempt> {
    let n = t.n;
    let h = n / 2;
    let d = &dims.d;
    let z = t.z[0];
    let mut b = BowDatum::zeros(t.clone())?;
    let (x, y) = match p.flavor {
        Flavor::Sp => (symmetric(rng, d[0]), symmetric(rng, d[0])),
        Flavor::So => (skew(rng, d[0]), skew(rng, d[0])),
    };
    b.beta[0] = &x * &y + scalar(d[0], z);
    b.beta[n] = &y * &x + scalar(d[n], z);
    b.mxi[0] = x;
    b.mpsi[0] = y;

    let kinv: Vec<CMat> = p
        .k
        .iter()
        .map(|m| inverse(m).ok_or_else(|| Attempt::Hard(Error::Unsupported("singular K".into()))))
        .collect::<std::result::Result<_, _>>()?;
    let mut avoid = eigen_or_soft(&b.beta[0], "beta[0]")?;
    for i in 1..h {
        let (m, spec) = random_diagonalizable(rng, d[i], &avoid)
            .ok_or_else(|| Attempt::Soft(format!("could not separate the spectrum of beta[{i}]")))?;
        avoid.extend(spec);
        b.beta[n - i] = &kinv[i] * m.transpose() * &p.k[i];
        b.beta[i] = m;
    }
    if h > 0 {
        // Sp: K_h = I, so beta_h must be symmetric. SO: d_h = 0.
        let m = symmetric(rng, d[h]);
        let spec = eigen_or_soft(&m, "beta[h]")?;
        if min_self_gap(&spec) < SPECTRAL_SEPARATION || min_gap(&spec, &avoid) < SPECTRAL_SEPARATION {
            return Err(Attempt::Soft("middle spectrum not separated".into()));
        }
        b.beta[h] = m;
    }
    for i in 0..h {
        let alpha = ginibre(rng, d[i + 1], 1);
        let gamma = ginibre(rng, 1, d[i]);
        let a = solve_sylvester(&b.beta[i + 1], &b.beta[i], &(&alpha * &gamma))?;
        let j = n - i - 1;
        let f = c(p.f[i], 0.0);
        b.a[j] = &kinv[i] * a.transpose() * &p.k[i + 1];
        b.alpha[j] = &kinv[i] * gamma.transpose() * f;
        b.gamma[j] = -(alpha.transpose() * &p.k[i + 1]) * f;
        b.a[i] = a;
        b.alpha[i] = alpha;
        b.gamma[i] = gamma;
    }
    Ok(b)
}

/// Charges with evenly spaced holonomies on a unit circle and NUTs at
/// `z_j = j (1 + 0.3 i)`.
pub fn standard_topology(m: &[i64], nd: &[i64], m0: i64) -> TopologicalData {
    let (n, k) = (m.len(), nd.len());
    TopologicalData {
        n,
        k,
        ell: 1.0,
        lambda: (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect(),
        m: m.to_vec(),
        nd: nd.to_vec(),
        m0,
        z: (0..k).map(|j| c(j as f64, 0.3 * j as f64)).collect(),
    }
}

/// Charges used by the round-trip suites: `nd_j = 1` for every NUT and the
/// total charge `k` spread over `m` as evenly as possible.
pub fn suite_topology(n: usize, k: usize, m0: i64) -> TopologicalData {
    let m: Vec<i64> = (0..n)
        .map(|i| (k / n + usize::from(i < k % n)) as i64)
        .collect();
    standard_topology(&m, &vec![1; k], m0)
}

#[derive(Debug, Clone)]
pub struct CanonicalExample {
    pub name: &'static str,
    pub topo: TopologicalData,
    pub datum: BowDatum,
    pub pairing: Option<PairingDatum>,
}

/// Named reference data. Every entry passes its full validation suite.
pub fn canonical_examples() -> Vec<CanonicalExample> {
    let single = {
        let topo = standard_topology(&[1], &[1], 0);
        let mut b = BowDatum::zeros(topo.clone()).expect("valid charges");
        b.beta[0] = CMat::from_element(1, 1, topo.z[0]);
        b.gamma[0] = CMat::from_element(1, 1, c(1.0, 0.0));
        CanonicalExample {
            name: "u1-single-nut",
            topo,
            datum: b,
            pairing: None,
        }
    };
    let generated = |name, topo: TopologicalData, seed| CanonicalExample {
        name,
        datum: generate(&topo, seed).expect("canonical generation"),
        topo,
        pairing: None,
    };
    let mirrored = |name, topo: TopologicalData, flavor, seed| {
        let (datum, pairing) = generate_mirror(&topo, flavor, seed).expect("canonical mirror");
        CanonicalExample {
            name,
            topo,
            datum,
            pairing: Some(pairing),
        }
    };
    vec![
        single,
        generated("u1-charge", standard_topology(&[0], &[0], 1), 1),
        generated("u2-basic", standard_topology(&[0, 1], &[1], 1), 7),
        mirrored("so2-mirror", standard_topology(&[1, -1], &[0], 1), Flavor::So, 11),
        mirrored("sp1-mirror", standard_topology(&[0, 0], &[0], 1), Flavor::Sp, 13),
    ]
}

/// Looks up one of [`canonical_examples`] by name.
pub fn canonical_example(name: &str) -> Option<CanonicalExample> {
    canonical_examples().into_iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frob, rank};

    fn m(rows: usize, cols: usize, v: &[f64]) -> CMat {
        CMat::from_iterator(rows, cols, v.iter().map(|&x| c(x, 0.0))).transpose()
    }

    #[test]
    fn sylvester_scalar() {
        let x = solve_sylvester(&m(1, 1, &[1.0]), &m(1, 1, &[0.0]), &m(1, 1, &[1.0])).unwrap();
        assert!((x[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn sylvester_diagonal_left() {
        let p = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0)]));
        let x = solve_sylvester(&p, &m(1, 1, &[0.0]), &CMat::from_element(2, 1, c(1.0, 0.0))).unwrap();
        assert!((x[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((x[(1, 0)] - c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn sylvester_overlap_is_rejected() {
        let z = m(1, 1, &[0.0]);
        assert!(matches!(
            solve_sylvester(&z, &z, &m(1, 1, &[3.0])),
            Err(Error::SpectraOverlap { .. })
        ));
    }

    #[test]
    fn sylvester_matches_closed_form_for_diagonals() {
        let mut rng = rng_from_seed(5);
        let dp: Vec<Complex64> = (0..4).map(|_| gaussian(&mut rng) + c(5.0, 0.0)).collect();
        let dq: Vec<Complex64> = (0..3).map(|_| gaussian(&mut rng)).collect();
        let p = CMat::from_diagonal(&nalgebra::DVector::from_vec(dp.clone()));
        let q = CMat::from_diagonal(&nalgebra::DVector::from_vec(dq.clone()));
        let rhs = ginibre(&mut rng, 4, 3);
        let x = solve_sylvester(&p, &q, &rhs).unwrap();
        for a in 0..4 {
            for b in 0..3 {
                let want = rhs[(a, b)] / (dp[a] - dq[b]);
                assert!((x[(a, b)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn sylvester_general_residual() {
        let mut rng = rng_from_seed(9);
        let p = ginibre(&mut rng, 5, 5);
        let q = ginibre(&mut rng, 3, 3) + scalar(3, c(4.0, 0.0));
        let rhs = ginibre(&mut rng, 5, 3);
        let x = solve_sylvester(&p, &q, &rhs).unwrap();
        let res = frob(&(&p * &x - &x * &q - &rhs)) / (1.0 + frob(&rhs));
        assert!(res < 1e-10, "{res}");
    }

    #[test]
    fn rank_factorization_examples() {
        let mut rng = rng_from_seed(1);
        let (l, r) = rank_factorization(&m(1, 1, &[0.0]), 1, &mut rng).unwrap();
        assert_eq!(frob(&(&l * &r)), 0.0);

        let cm = m(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let (l, r) = rank_factorization(&cm, 1, &mut rng).unwrap();
        assert!(frob(&(&l * &r - &cm)) < 1e-14);
        assert!((l[(0, 0)] * r[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!(l[(1, 0)].norm() < 1e-14 && r[(0, 1)].norm() < 1e-14);

        assert!(matches!(
            rank_factorization(&m(2, 2, &[1.0, 0.0, 0.0, 1.0]), 1, &mut rng),
            Err(Error::RankTooLarge { rank: 2, inner: 1 })
        ));
    }

    #[test]
    fn rank_factorization_fills_surplus_directions() {
        let mut rng = rng_from_seed(2);
        // rank 1, inner 3 in dimension 3: both factors reach rank 3 only if
        // the surplus uses left and right null directions.
        let u = ginibre(&mut rng, 3, 1);
        let v = ginibre(&mut rng, 1, 3);
        let cm = &u * &v;
        let (l, r) = rank_factorization(&cm, 3, &mut rng).unwrap();
        assert!(frob(&(&l * &r - &cm)) / (1.0 + frob(&cm)) < 1e-10);
        assert_eq!(rank(&l).rank, 3);
        assert_eq!(rank(&r).rank, 1);
        // Full-rank target with more inner room.
        let cm = ginibre(&mut rng, 2, 2);
        let (l, r) = rank_factorization(&cm, 3, &mut rng).unwrap();
        assert!(frob(&(&l * &r - &cm)) / (1.0 + frob(&cm)) < 1e-10);
        assert_eq!((rank(&l).rank, rank(&r).rank), (2, 2));
    }

    #[test]
    fn generate_u2_basic_shapes() {
        let t = standard_topology(&[0, 1], &[1], 1);
        let b = generate(&t, 7).unwrap();
        assert_eq!(b.dims.d, vec![2, 2, 1]);
        assert_eq!(b.dims.dn, vec![1, 2]);
        assert!(verify_generated(&b).is_ok());
    }

    #[test]
    fn generate_u1_single_nut_family() {
        let t = standard_topology(&[1], &[1], 0);
        let b = generate(&t, 3).unwrap();
        assert_eq!(b.beta[0][(0, 0)], t.z[0]);
        assert!(b.gamma[0][(0, 0)].norm() > 0.0);
        assert_eq!(b.beta[1].shape(), (0, 0));
    }

    #[test]
    fn generate_rejects_negative_dimension() {
        let t = standard_topology(&[3, -2], &[1], 0);
        assert!(matches!(generate(&t, 0), Err(Error::InvalidTopology(_))));
    }

    #[test]
    fn generate_handles_negative_steps() {
        for nd in [[-1, 1], [-1, 0], [0, 1], [-1, -1]] {
            let total: i64 = nd.iter().sum();
            let t = standard_topology(&[total, 0], &nd, 2);
            let b = generate(&t, 4).unwrap_or_else(|e| panic!("{nd:?}: {e}"));
            assert!(verify_generated(&b).is_ok());
        }
    }

    #[test]
    fn generate_reports_infeasible_patterns() {
        let t = standard_topology(&[2], &[2], 1);
        assert!(matches!(generate(&t, 0), Err(Error::Infeasible(_))));
        let t = standard_topology(&[0, 0], &[1, -1], 1);
        assert!(matches!(generate(&t, 0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        let t = suite_topology(3, 2, 2);
        assert_eq!(generate(&t, 42).unwrap(), generate(&t, 42).unwrap());
    }

    #[test]
    fn canonical_examples_validate() {
        let ex = canonical_examples();
        let names: Vec<&str> = ex.iter().map(|e| e.name).collect();
        assert_eq!(
            names,
            ["u1-single-nut", "u1-charge", "u2-basic", "so2-mirror", "sp1-mirror"]
        );
        for e in &ex {
            assert!(verify_generated(&e.datum).is_ok(), "{}", e.name);
        }
        let single = &ex[0].datum;
        let rel = validate_relations(single, 1e-12).unwrap();
        assert!(rel.residuals.iter().all(|r| r.absolute == 0.0));
    }

    #[test]
    fn mirror_requires_single_nut() {
        let t = standard_topology(&[0, 0], &[0, 0], 1);
        assert!(matches!(
            generate_mirror(&t, Flavor::Sp, 0),
            Err(Error::Unsupported(_))
        ));
    }
}
