//! The monad of a bow datum evaluated at points of the surface
//! `xi psi = prod_j (eta - z_j)`, its cohomology, and local freeness.
//!
//! Spaces, in block order:
//!
//! * `A`: `C^{d_i}` for `i < n`, then `C^{d_0}, C^{d_n}, C^{d_0}, C^{d_n}`;
//! * `B`: `C^{d_i + 1}` for `i < n`, then `C^{d_0} + C^{d_n}`;
//! * `C = D`: `C^{d_i}` for `i = 0..=n`;
//! * `F = C^{d_0} + C^{d_n}`.
//!
//! `Amap = [alpha; -beta~] : A -> B + C` and `Bmap = [delta, gamma] : B + C -> D`.
//! The fiber of the bundle is `ker Bmap / im Amap`.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bowdata::{aggregate_unchecked, BowDatum};
use crate::error::{Error, Result};
use crate::generator::rng_from_seed;
use crate::linalg::{
    c, cluster, col_span, full_svd, divided_difference, eigenvalues, eye, frob, null_space, poly_eval,
    poly_from_roots, scalar, CMat, EIG_CLUSTER,
};

/// Relative tolerance on `xi psi = prod (eta - z_j)`.
pub const SURFACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub xi: Complex64,
    pub psi: Complex64,
    pub eta: Complex64,
}

impl SurfacePoint {
    pub fn new(xi: Complex64, psi: Complex64, eta: Complex64) -> Self {
        SurfacePoint { xi, psi, eta }
    }

    /// The point over `eta` with the given `xi != 0`; `psi` is solved for.
    pub fn from_xi_eta(xi: Complex64, eta: Complex64, z: &[Complex64]) -> Result<Self> {
        if xi.norm() == 0.0 {
            return Err(Error::Field {
                path: "xi".into(),
                message: "psi cannot be derived when xi = 0".into(),
            });
        }
        let p = poly_eval(&poly_from_roots(z), eta);
        Ok(SurfacePoint::new(xi, p / xi, eta))
    }

    /// `|xi psi - prod (eta - z_j)| / (1 + |xi psi| + |prod|)`.
    pub fn defect(&self, z: &[Complex64]) -> f64 {
        let p = poly_eval(&poly_from_roots(z), self.eta);
        let lhs = self.xi * self.psi;
        (lhs - p).norm() / (1.0 + lhs.norm() + p.norm())
    }

    pub fn check(&self, z: &[Complex64]) -> Result<()> {
        let defect = self.defect(z);
        if defect > SURFACE_TOL {
            return Err(Error::SurfaceViolation {
                xi: self.xi.to_string(),
                psi: self.psi.to_string(),
                eta: self.eta.to_string(),
                defect,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

/// Offsets of every block of the four monad spaces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockIndex {
    pub a: Vec<Block>,
    pub b: Vec<Block>,
    pub c: Vec<Block>,
    pub d: Vec<Block>,
}

fn layout(entries: Vec<(String, usize)>) -> Vec<Block> {
    let mut offset = 0;
    entries
        .into_iter()
        .map(|(name, len)| {
            let blk = Block { name, offset, len };
            offset += len;
            blk
        })
        .collect()
}

fn total(blocks: &[Block]) -> usize {
    blocks.last().map_or(0, |b| b.offset + b.len)
}

impl BlockIndex {
    pub fn new(d: &[usize]) -> Self {
        let n = d.len() - 1;
        let (d0, dn) = (d[0], d[n]);
        let mut a: Vec<(String, usize)> = (0..n).map(|i| (format!("P{i}"), d[i])).collect();
        a.extend([
            ("R1".to_string(), d0),
            ("R2".to_string(), dn),
            ("R3".to_string(), d0),
            ("R4".to_string(), dn),
        ]);
        let mut b: Vec<(String, usize)> = (0..n).map(|i| (format!("P{i}"), d[i] + 1)).collect();
        b.push(("R".to_string(), d0 + dn));
        let c: Vec<(String, usize)> = (0..=n).map(|i| (format!("C{i}"), d[i])).collect();
        let dd: Vec<(String, usize)> = (0..=n).map(|i| (format!("D{i}"), d[i])).collect();
        BlockIndex {
            a: layout(a),
            b: layout(b),
            c: layout(c),
            d: layout(dd),
        }
    }

    pub fn dim_a(&self) -> usize {
        total(&self.a)
    }
    pub fn dim_b(&self) -> usize {
        total(&self.b)
    }
    pub fn dim_c(&self) -> usize {
        total(&self.c)
    }
    pub fn dim_d(&self) -> usize {
        total(&self.d)
    }

    fn find<'a>(blocks: &'a [Block], name: &str) -> &'a Block {
        blocks.iter().find(|b| b.name == name).expect("known block")
    }
}

#[derive(Debug, Clone)]
pub struct MonadAtPoint {
    pub point: SurfacePoint,
    /// `(dim B + dim C) x dim A`.
    pub amap: CMat,
    /// `dim D x (dim B + dim C)`.
    pub bmap: CMat,
    /// `dim A x (d_0 + d_n)`.
    pub mu: CMat,
    pub index: BlockIndex,
    /// Row of `beta~` into `C_0` on the four R-blocks.
    pub lift0: CMat,
    /// Row of `beta~` into `C_n` on the four R-blocks.
    pub liftn: CMat,
    /// The resolution matrix `G` on the R-blocks.
    pub g: CMat,
}

fn put(m: &mut CMat, r0: usize, c0: usize, blk: &CMat) {
    if !blk.is_empty() {
        m.view_mut((r0, c0), blk.shape()).copy_from(blk);
    }
}

/// Assembles the monad maps at `x`.
///
/// The components of `beta~` on the R-blocks that land in `C_0` and `C_n`
/// use the matrix divided differences
/// `S = (p(eta) - p(beta_0)) (eta - beta_0)^{-1}` and the analogue `T` for
/// `beta_n`, with `p(t) = prod (t - z_j)`. The map from `F` is
/// `mu = [[-S, 0], [0, -T], [psi, M_xi_hat], [-M_psi_hat, -xi]]`, which
/// composes to zero with both `alpha` and `beta~`.
pub fn assemble_monad(b: &BowDatum, x: &SurfacePoint) -> Result<MonadAtPoint> {
    b.check_shapes()?;
    x.check(&b.topo.z)?;
    let n = b.n();
    let d = &b.dims.d;
    let (d0, dn) = (d[0], d[n]);
    let (xi, psi, eta) = (x.xi, x.psi, x.eta);
    let idx = BlockIndex::new(d);
    let (dim_a, dim_b, dim_c, dim_d) = (idx.dim_a(), idx.dim_b(), idx.dim_c(), idx.dim_d());
    let (mx, my) = aggregate_unchecked(b);
    let s = divided_difference(eta, &b.beta[0], &b.topo.z);
    let t = divided_difference(eta, &b.beta[n], &b.topo.z);
    let shift = |i: usize| scalar(d[i], eta) - &b.beta[i];

    let mut amap = CMat::zeros(dim_b + dim_c, dim_a);
    let mut bmap = CMat::zeros(dim_d, dim_b + dim_c);
    let a_blk = |name: &str| BlockIndex::find(&idx.a, name).offset;
    let b_blk = |name: &str| BlockIndex::find(&idx.b, name).offset;
    let c_off = |i: usize| dim_b + idx.c[i].offset;
    let d_off = |i: usize| idx.d[i].offset;

    for i in 0..n {
        let (ca, rb) = (a_blk(&format!("P{i}")), b_blk(&format!("P{i}")));
        put(&mut amap, rb, ca, &shift(i));
        put(&mut amap, rb + d[i], ca, &(-&b.gamma[i]));
        put(&mut amap, c_off(i), ca, &(-eye(d[i])));
        put(&mut amap, c_off(i + 1), ca, &(-&b.a[i]));

        put(&mut bmap, d_off(i), rb, &eye(d[i]));
        put(&mut bmap, d_off(i + 1), rb, &b.a[i]);
        put(&mut bmap, d_off(i + 1), rb + d[i], &b.alpha[i]);
    }

    // Resolution of R: G : C^{d0} + C^{dn} + C^{d0} + C^{dn} -> C^{d0} + C^{dn}.
    let mut g = CMat::zeros(d0 + dn, 2 * (d0 + dn));
    put(&mut g, 0, 0, &shift(0));
    put(&mut g, d0, d0, &shift(n));
    put(&mut g, 0, d0 + dn, &scalar(d0, xi));
    put(&mut g, d0, d0 + dn, &(-&my));
    put(&mut g, 0, 2 * d0 + dn, &mx);
    put(&mut g, d0, 2 * d0 + dn, &(-scalar(dn, psi)));
    let r1 = a_blk("R1");
    put(&mut amap, b_blk("R"), r1, &g);

    let mut lift0 = CMat::zeros(d0, 2 * (d0 + dn));
    put(&mut lift0, 0, 0, &scalar(d0, psi));
    put(&mut lift0, 0, d0, &mx);
    put(&mut lift0, 0, d0 + dn, &s);
    let mut liftn = CMat::zeros(dn, 2 * (d0 + dn));
    put(&mut liftn, 0, 0, &(-&my));
    put(&mut liftn, 0, d0, &(-scalar(dn, xi)));
    put(&mut liftn, 0, 2 * d0 + dn, &t);
    put(&mut amap, c_off(0), r1, &(-&lift0));
    put(&mut amap, c_off(n), r1, &(-&liftn));

    let rb = b_blk("R");
    put(&mut bmap, d_off(0), rb, &scalar(d0, psi));
    put(&mut bmap, d_off(0), rb + d0, &mx);
    put(&mut bmap, d_off(n), rb, &(-&my));
    put(&mut bmap, d_off(n), rb + d0, &(-scalar(dn, xi)));
    for i in 0..=n {
        put(&mut bmap, d_off(i), c_off(i), &shift(i));
    }

    let mut mu = CMat::zeros(dim_a, d0 + dn);
    put(&mut mu, a_blk("R1"), 0, &(-&s));
    put(&mut mu, a_blk("R2"), d0, &(-&t));
    put(&mut mu, a_blk("R3"), 0, &scalar(d0, psi));
    put(&mut mu, a_blk("R3"), d0, &mx);
    put(&mut mu, a_blk("R4"), 0, &(-&my));
    put(&mut mu, a_blk("R4"), d0, &(-scalar(dn, xi)));

    Ok(MonadAtPoint {
        point: *x,
        amap,
        bmap,
        mu,
        index: idx,
        lift0,
        liftn,
        g,
    })
}

impl MonadAtPoint {
    /// `||Bmap Amap||_F / (1 + ||Bmap||_F ||Amap||_F)`.
    pub fn composition_residual(&self) -> f64 {
        frob(&(&self.bmap * &self.amap)) / (1.0 + frob(&self.bmap) * frob(&self.amap))
    }

    /// Relative residuals of the two lift squares over `C_0` and `C_n`.
    pub fn lift_residuals(&self, b: &BowDatum) -> (f64, f64) {
        let n = b.n();
        let d = &b.dims.d;
        let (d0, dn) = (d[0], d[n]);
        let (mx, my) = aggregate_unchecked(b);
        let eta = self.point.eta;
        let (top, bottom) = (self.g.rows(0, d0), self.g.rows(d0, dn));
        let lhs0 = (scalar(d0, eta) - &b.beta[0]) * &self.lift0;
        let rhs0 = top * self.point.psi + &mx * bottom;
        let lhsn = (scalar(dn, eta) - &b.beta[n]) * &self.liftn;
        let rhsn = -(&my * top) - bottom * self.point.xi;
        (
            crate::linalg::rel_residual(&lhs0, &rhs0),
            crate::linalg::rel_residual(&lhsn, &rhsn),
        )
    }
}

fn clear_or_err(info: crate::linalg::RankInfo, context: &str) -> Result<()> {
    match info.straddle {
        None => Ok(()),
        Some(sigma) => Err(Error::RankIndeterminate {
            context: context.into(),
            sigma,
            threshold: info.threshold,
        }),
    }
}

#[derive(Debug, Clone)]
pub struct Fiber {
    /// Orthonormal basis of the complement of `im Amap` inside `ker Bmap`.
    pub basis: CMat,
    pub rank: usize,
    pub kernel_dim: usize,
    pub image_rank: usize,
    pub composition_residual: f64,
}

/// Fiber of the bundle at `x` as the orthogonal complement of `im Amap`
/// inside `ker Bmap`.
pub fn fiber_at(b: &BowDatum, x: &SurfacePoint) -> Result<Fiber> {
    let m = assemble_monad(b, x)?;
    fiber_of(&m)
}

pub fn fiber_of(m: &MonadAtPoint) -> Result<Fiber> {
    let (kernel, kinfo) = null_space(&m.bmap);
    clear_or_err(kinfo, "kernel of Bmap")?;
    let (image, iinfo) = col_span(&m.amap);
    clear_or_err(iinfo, "image of Amap")?;
    let kernel_dim = kernel.ncols();
    let image_rank = image.ncols();
    let rank = kernel_dim.checked_sub(image_rank).ok_or(Error::FiberRank {
        rank: 0,
        expected: kernel_dim,
    })?;
    // Coordinates of im Amap in the kernel basis; the fiber is their
    // orthogonal complement.
    let coords = kernel.adjoint() * &image;
    let comp = full_svd(&coords.adjoint())
        .v
        .columns(image_rank, rank)
        .into_owned();
    Ok(Fiber {
        basis: &kernel * comp,
        rank,
        kernel_dim,
        image_rank,
        composition_residual: m.composition_residual(),
    })
}

#[derive(Debug, Clone)]
pub struct LocalFreeness {
    pub pass: bool,
    /// A vector of `ker Amap` orthogonal to `im mu`, on failure.
    pub witness: Option<CMat>,
    pub kernel_dim: usize,
    pub mu_rank: usize,
    /// `d_0 + d_n`: the rank of the kernel sheaf of `Amap`.
    pub expected_kernel: usize,
}

/// Tor criterion at `x`: `beta~` must be injective on `ker alpha` modulo the
/// fiber of the kernel sheaf, i.e. `dim ker Amap = d_0 + d_n`.
///
/// Where `mu` is injective at `x` this is literally `ker Amap = im mu`. At
/// NUT points with `psi = 0` and `k >= 2` the divided difference `S` is
/// singular and `mu` loses rank while the kernel sheaf does not; comparing
/// with `im mu` there would report spurious failures.
pub fn is_locally_free_at(b: &BowDatum, x: &SurfacePoint) -> Result<LocalFreeness> {
    let m = assemble_monad(b, x)?;
    local_freeness_of(&m)
}

pub fn local_freeness_of(m: &MonadAtPoint) -> Result<LocalFreeness> {
    let (kernel, kinfo) = null_space(&m.amap);
    clear_or_err(kinfo, "kernel of Amap")?;
    let (image, minfo) = col_span(&m.mu);
    clear_or_err(minfo, "image of mu")?;
    let (kernel_dim, mu_rank) = (kernel.ncols(), image.ncols());
    let expected_kernel = m.mu.ncols();
    if kernel_dim <= expected_kernel {
        return Ok(LocalFreeness {
            pass: true,
            witness: None,
            kernel_dim,
            mu_rank,
            expected_kernel,
        });
    }
    let residue = &kernel - &image * (image.adjoint() * &kernel);
    let (span, _) = col_span(&residue);
    let witness = span.columns(0, 1).into_owned();
    Ok(LocalFreeness {
        pass: false,
        witness: Some(witness),
        kernel_dim,
        mu_rank,
        expected_kernel,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub samples: usize,
    pub structured: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointKind {
    Random,
    Structured { label: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PointStatus {
    Pass,
    Fail,
    Indeterminate { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub point: SurfacePoint,
    pub kind: PointKind,
    pub status: PointStatus,
    pub fiber_rank: Option<usize>,
    pub composition_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub expected_rank: usize,
    pub points: Vec<ScanPoint>,
    /// Positions in `points` whose rank decisions were indeterminate.
    pub indeterminate: Vec<usize>,
}

impl ScanReport {
    pub fn all_pass(&self) -> bool {
        self.points.iter().all(|p| p.status == PointStatus::Pass)
    }

    pub fn ranks_ok(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.fiber_rank == Some(self.expected_rank))
    }

    pub fn failures(&self) -> impl Iterator<Item = &ScanPoint> {
        self.points.iter().filter(|p| p.status == PointStatus::Fail)
    }
}

/// Every eigenvalue of every endomorphism in the datum.
pub fn all_eigenvalues(b: &BowDatum) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    let chain = b.beta_chain.iter();
    for (i, m) in b.beta.iter().chain(chain).enumerate() {
        out.extend(eigenvalues(m).ok_or_else(|| Error::Eigensolver(format!("endomorphism {i}")))?);
    }
    Ok(out)
}

/// Structured points: over every eigenvalue and NUT position, a few
/// admissible values of `xi`, including both branches over a NUT.
pub fn structured_points(b: &BowDatum) -> Result<Vec<(SurfacePoint, String)>> {
    let z = &b.topo.z;
    let p = poly_from_roots(z);
    let mut etas = all_eigenvalues(b)?;
    etas.extend(z.iter().copied());
    let mut out = Vec::new();
    for eta in cluster(&etas, EIG_CLUSTER) {
        // Snap to a NUT when within clustering distance so the point lies
        // exactly on the surface.
        let nut = z.iter().copied().find(|zj| (zj - eta).norm() < EIG_CLUSTER);
        let eta = nut.unwrap_or(eta);
        let pv = poly_eval(&p, eta);
        if nut.is_some() {
            for (xi, psi) in [(0.0, 0.0), (0.0, 1.0), (0.0, 10.0), (1.0, 0.0), (10.0, 0.0)] {
                out.push((
                    SurfacePoint::new(c(xi, 0.0), c(psi, 0.0), eta),
                    format!("nut eta={eta} xi={xi} psi={psi}"),
                ));
            }
        } else {
            for xi in [1.0, 10.0] {
                out.push((
                    SurfacePoint::new(c(xi, 0.0), pv / xi, eta),
                    format!("eigenvalue eta={eta} xi={xi}"),
                ));
            }
        }
    }
    Ok(out)
}

/// Random points: `eta` uniform in a disk twice the spread of all
/// eigenvalues (radius at least 1), kept `1e-4` away from the structured
/// `eta` values; `|xi|` log-uniform in `[0.1, 10]` with uniform phase.
pub fn random_points<R: Rng + ?Sized>(b: &BowDatum, count: usize, rng: &mut R) -> Result<Vec<SurfacePoint>> {
    let z = &b.topo.z;
    let mut special = all_eigenvalues(b)?;
    special.extend(z.iter().copied());
    let center = if special.is_empty() {
        c(0.0, 0.0)
    } else {
        special.iter().sum::<Complex64>() / special.len() as f64
    };
    let radius = special
        .iter()
        .map(|e| (e - center).norm())
        .fold(0.0, f64::max)
        * 2.0;
    let radius = radius.max(1.0);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let r = radius * rng.random::<f64>().sqrt();
        let th = std::f64::consts::TAU * rng.random::<f64>();
        let eta = center + Complex64::from_polar(r, th);
        let mag = 10f64.powf(rng.random_range(-1.0..=1.0));
        let phase = std::f64::consts::TAU * rng.random::<f64>();
        if special.iter().any(|s| (s - eta).norm() < 1e-4) {
            continue;
        }
        out.push(SurfacePoint::from_xi_eta(Complex64::from_polar(mag, phase), eta, z)?);
    }
    Ok(out)
}

fn evaluate(b: &BowDatum, point: SurfacePoint, kind: PointKind) -> Result<ScanPoint> {
    let m = assemble_monad(b, &point)?;
    let composition = m.composition_residual();
    let (status, fiber_rank) = match (local_freeness_of(&m), fiber_of(&m)) {
        (Ok(lf), Ok(f)) => (
            if lf.pass { PointStatus::Pass } else { PointStatus::Fail },
            Some(f.rank),
        ),
        (Err(e), _) | (_, Err(e)) => match e {
            Error::RankIndeterminate { .. } => (
                PointStatus::Indeterminate {
                    reason: e.to_string(),
                },
                None,
            ),
            other => return Err(other),
        },
    };
    Ok(ScanPoint {
        point,
        kind,
        status,
        fiber_rank,
        composition_residual: Some(composition),
    })
}

/// Local freeness and fiber rank at random and structured points.
/// Points are evaluated in parallel; the report order is fixed by the seed.
pub fn scan_local_freeness(b: &BowDatum, config: &ScanConfig) -> Result<ScanReport> {
    b.check_shapes()?;
    let mut rng = rng_from_seed(config.seed);
    let mut todo: Vec<(SurfacePoint, PointKind)> = random_points(b, config.samples, &mut rng)?
        .into_iter()
        .map(|p| (p, PointKind::Random))
        .collect();
    if config.structured {
        todo.extend(
            structured_points(b)?
                .into_iter()
                .map(|(p, label)| (p, PointKind::Structured { label })),
        );
    }
    let points: Vec<ScanPoint> = todo
        .into_par_iter()
        .map(|(p, kind)| evaluate(b, p, kind))
        .collect::<Result<_>>()?;
    let indeterminate = points
        .iter()
        .enumerate()
        .filter(|(_, p)| matches!(p.status, PointStatus::Indeterminate { .. }))
        .map(|(i, _)| i)
        .collect();
    Ok(ScanReport {
        expected_rank: b.n(),
        points,
        indeterminate,
    })
}
