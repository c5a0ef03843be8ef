//! Topological charges of an instanton on a multi-Taub-NUT space and the
//! dimension bookkeeping derived from them.
//!
//! All arithmetic here is exact integer arithmetic; the NUT positions and
//! holonomy logs are carried along but never enter a dimension formula.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Charges and geometric parameters of a `U(n)` instanton on `TN_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologicalData {
    /// Rank of the structure group.
    pub n: usize,
    /// Number of NUTs.
    pub k: usize,
    /// Asymptotic circle length.
    pub ell: f64,
    /// Holonomy eigenvalue logs, strictly increasing in `[0, ell)`.
    pub lambda: Vec<f64>,
    /// Monopole charges `m_1..m_n`.
    pub m: Vec<i64>,
    /// Coefficients `n_1..n_k` of `c_1(E)` on the exceptional divisors.
    pub nd: Vec<i64>,
    /// Instanton number.
    pub m0: i64,
    /// NUT positions in the eta-plane.
    pub z: Vec<Complex64>,
}

/// Lengths of the torsion sheaves: `d_0..d_n` along the lambda-chain and
/// `d_{n,0}..d_{n,k}` along the NUT chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionVector {
    pub d: Vec<usize>,
    pub dn: Vec<usize>,
}

impl DimensionVector {
    pub fn n(&self) -> usize {
        self.d.len() - 1
    }

    pub fn k(&self) -> usize {
        self.dn.len() - 1
    }
}

/// A violated semantic invariant of [`TopologicalData`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonPositiveLength { ell: f64 },
    LambdaOrder { index: usize },
    LambdaRange { index: usize },
    ChargeBalance { sum_m: i64, sum_nd: i64 },
    NegativeInstantonNumber { m0: i64 },
    DuplicateNut { first: usize, second: usize },
    NegativeDimension { name: String, value: i64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NonPositiveLength { ell } => write!(f, "circle length {ell} is not positive"),
            Violation::LambdaOrder { index } => {
                write!(f, "lambda[{index}] does not exceed lambda[{}]", index - 1)
            }
            Violation::LambdaRange { index } => write!(f, "lambda[{index}] lies outside [0, ell)"),
            Violation::ChargeBalance { sum_m, sum_nd } => {
                write!(f, "charge balance: sum m = {sum_m} but sum nd = {sum_nd}")
            }
            Violation::NegativeInstantonNumber { m0 } => write!(f, "instanton number {m0} < 0"),
            Violation::DuplicateNut { first, second } => {
                write!(f, "NUT positions z[{first}] and z[{second}] coincide")
            }
            Violation::NegativeDimension { name, value } => write!(f, "{name} = {value} < 0"),
        }
    }
}

impl TopologicalData {
    /// Checks list lengths against `n` and `k`.
    pub fn check_structure(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Structure("n must be positive".into()));
        }
        if self.k == 0 {
            return Err(Error::Structure("k must be positive".into()));
        }
        let lens = [
            ("lambda", self.lambda.len(), self.n),
            ("m", self.m.len(), self.n),
            ("nd", self.nd.len(), self.k),
            ("z", self.z.len(), self.k),
        ];
        for (name, got, want) in lens {
            if got != want {
                return Err(Error::Structure(format!(
                    "{name} has length {got}, expected {want}"
                )));
            }
        }
        Ok(())
    }

    /// Signed lengths `d_0..d_n` and `d_{n,0}..d_{n,k}` before the
    /// nonnegativity check.
    pub fn signed_dimensions(&self) -> (Vec<i64>, Vec<i64>) {
        let tri_plus: i64 = self.nd.iter().map(|&v| v * (v + 1) / 2).sum();
        let mut d = Vec::with_capacity(self.n + 1);
        let mut acc = tri_plus + self.m0;
        d.push(acc);
        for &mi in &self.m {
            acc -= mi;
            d.push(acc);
        }
        let dn = (0..=self.k)
            .map(|j| {
                let lower: i64 = self.nd[..j].iter().map(|&v| (v * v + v) / 2).sum();
                let upper: i64 = self.nd[j..].iter().map(|&v| (v * v - v) / 2).sum();
                self.m0 + lower + upper
            })
            .collect();
        (d, dn)
    }
}

/// Lists every violated invariant; structural problems are returned as `Err`.
pub fn validate_topology(t: &TopologicalData) -> Result<Vec<Violation>> {
    t.check_structure()?;
    let mut out = Vec::new();
    if !(t.ell > 0.0) {
        out.push(Violation::NonPositiveLength { ell: t.ell });
    }
    for (i, &l) in t.lambda.iter().enumerate() {
        if !(l >= 0.0 && l < t.ell) {
            out.push(Violation::LambdaRange { index: i });
        }
        if i > 0 && !(l > t.lambda[i - 1]) {
            out.push(Violation::LambdaOrder { index: i });
        }
    }
    let sum_m: i64 = t.m.iter().sum();
    let sum_nd: i64 = t.nd.iter().sum();
    if sum_m != sum_nd {
        out.push(Violation::ChargeBalance { sum_m, sum_nd });
    }
    if t.m0 < 0 {
        out.push(Violation::NegativeInstantonNumber { m0: t.m0 });
    }
    for i in 0..t.k {
        for j in (i + 1)..t.k {
            if t.z[i] == t.z[j] {
                out.push(Violation::DuplicateNut { first: i, second: j });
            }
        }
    }
    let (d, dn) = t.signed_dimensions();
    for (i, &v) in d.iter().enumerate() {
        if v < 0 {
            out.push(Violation::NegativeDimension {
                name: format!("d[{i}]"),
                value: v,
            });
        }
    }
    for (j, &v) in dn.iter().enumerate() {
        if v < 0 {
            out.push(Violation::NegativeDimension {
                name: format!("dn[{j}]"),
                value: v,
            });
        }
    }
    Ok(out)
}

pub fn compute_dimensions(t: &TopologicalData) -> Result<DimensionVector> {
    t.check_structure()?;
    let (d, dn) = t.signed_dimensions();
    let to_usize = |vals: Vec<i64>, label: &str| -> Result<Vec<usize>> {
        vals.into_iter()
            .enumerate()
            .map(|(i, v)| {
                usize::try_from(v).map_err(|_| Error::NegativeDimension {
                    name: format!("{label}[{i}]"),
                    value: v,
                })
            })
            .collect()
    };
    Ok(DimensionVector {
        d: to_usize(d, "d")?,
        dn: to_usize(dn, "dn")?,
    })
}

/// Chern-class bookkeeping of the compactified bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChernSummary {
    /// Coefficients of `c_1(E)` on the exceptional divisors.
    pub c1: Vec<i64>,
    pub c2: i64,
    /// Degrees of the flag pieces on `C_0`: `m_1 + ... + m_i`.
    pub flag_degrees: Vec<i64>,
}

pub fn chern_summary(t: &TopologicalData) -> Result<ChernSummary> {
    t.check_structure()?;
    let flag_degrees = t
        .m
        .iter()
        .scan(0i64, |acc, &mi| {
            *acc += mi;
            Some(*acc)
        })
        .collect();
    Ok(ChernSummary {
        c1: t.nd.clone(),
        c2: t.m0,
        flag_degrees,
    })
}
