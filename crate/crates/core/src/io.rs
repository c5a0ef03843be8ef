//! Text formats: bow files, topology files and the bow-complex export.
//!
//! Files are JSON in a canonical layout: object keys sorted, every float
//! written with 17 significant digits (`{:.16e}`), complex scalars as
//! `[re, im]`, matrices as row-major nested arrays and empty matrices as
//! `{"cols": c, "rows": r}`. Serializing a parsed canonical file gives back
//! the same bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde_json::Value;

use crate::bowdata::BowDatum;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use crate::orthosymplectic::{Flavor, PairingDatum};
use crate::topology::{compute_dimensions, TopologicalData};

pub const BOW_FORMAT: &str = "bowforge/1";
pub const TOPOLOGY_FORMAT: &str = "bowforge-topology/1";
pub const EXPORT_FORMAT: &str = "bowforge-complex/1";

/// A JSON tree with integers and floats kept apart, so output formatting
/// is fixed by the schema rather than by the value.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Arr(Vec<Node>),
    Obj(BTreeMap<String, Node>),
}

impl Node {
    pub fn obj<I, K>(entries: I) -> Node
    where
        I: IntoIterator<Item = (K, Node)>,
        K: Into<String>,
    {
        Node::Obj(entries.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn complex(z: Complex64) -> Node {
        Node::Arr(vec![Node::Float(z.re), Node::Float(z.im)])
    }

    pub fn matrix(m: &CMat) -> Node {
        if m.is_empty() {
            return Node::obj([("cols", Node::Int(m.ncols() as i64)), ("rows", Node::Int(m.nrows() as i64))]);
        }
        Node::Arr(
            (0..m.nrows())
                .map(|r| Node::Arr((0..m.ncols()).map(|j| Node::complex(m[(r, j)])).collect()))
                .collect(),
        )
    }

    pub fn matrices(ms: &[CMat]) -> Node {
        Node::Arr(ms.iter().map(Node::matrix).collect())
    }

    fn depth(&self) -> Option<usize> {
        match self {
            Node::Obj(_) => None,
            Node::Arr(items) => items
                .iter()
                .try_fold(0, |acc, it| it.depth().map(|d| acc.max(d)))
                .map(|d| d + 1),
            _ => Some(0),
        }
    }

    /// Canonical text, terminated by a newline.
    pub fn to_canonical(&self) -> Result<String> {
        let mut out = String::new();
        self.write(&mut out, 0)?;
        out.push('\n');
        Ok(out)
    }

    fn write(&self, out: &mut String, indent: usize) -> Result<()> {
        let pad = |out: &mut String, k: usize| out.extend(std::iter::repeat_n(' ', 2 * k));
        match self {
            Node::Null => out.push_str("null"),
            Node::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Node::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Node::Float(x) => {
                if !x.is_finite() {
                    return Err(Error::Field {
                        path: "<float>".into(),
                        message: format!("{x} cannot be written"),
                    });
                }
                let _ = write!(out, "{x:.16e}");
            }
            Node::Str(s) => out.push_str(&serde_json::to_string(s).expect("string encodes")),
            Node::Arr(items) if items.is_empty() => out.push_str("[]"),
            Node::Arr(items) if self.depth().is_some_and(|d| d <= 3) => {
                out.push('[');
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    it.write(out, indent)?;
                }
                out.push(']');
            }
            Node::Arr(items) => {
                out.push_str("[\n");
                for (i, it) in items.iter().enumerate() {
                    pad(out, indent + 1);
                    it.write(out, indent + 1)?;
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                pad(out, indent);
                out.push(']');
            }
            Node::Obj(map) if map.is_empty() => out.push_str("{}"),
            Node::Obj(map) => {
                out.push_str("{\n");
                for (i, (k, v)) in map.iter().enumerate() {
                    pad(out, indent + 1);
                    out.push_str(&serde_json::to_string(k).expect("string encodes"));
                    out.push_str(": ");
                    v.write(out, indent + 1)?;
                    out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
                }
                pad(out, indent);
                out.push('}');
            }
        }
        Ok(())
    }
}

/// Optional bookkeeping carried alongside a datum.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metadata {
    pub seed: Option<u64>,
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BowFile {
    pub datum: BowDatum,
    pub pairing: Option<PairingDatum>,
    pub metadata: Option<Metadata>,
}

impl BowFile {
    pub fn new(datum: BowDatum) -> Self {
        BowFile {
            datum,
            pairing: None,
            metadata: None,
        }
    }
}

fn topology_node(t: &TopologicalData) -> Node {
    let ints = |v: &[i64]| Node::Arr(v.iter().map(|&x| Node::Int(x)).collect());
    Node::obj([
        ("ell", Node::Float(t.ell)),
        ("k", Node::Int(t.k as i64)),
        ("lambda", Node::Arr(t.lambda.iter().map(|&x| Node::Float(x)).collect())),
        ("m", ints(&t.m)),
        ("m0", Node::Int(t.m0)),
        ("n", Node::Int(t.n as i64)),
        ("nd", ints(&t.nd)),
        ("z", Node::Arr(t.z.iter().map(|&z| Node::complex(z)).collect())),
    ])
}

fn bow_node(b: &BowDatum) -> Node {
    Node::obj([
        ("A", Node::matrices(&b.a)),
        ("alpha", Node::matrices(&b.alpha)),
        ("beta", Node::matrices(&b.beta)),
        ("beta_chain", Node::matrices(&b.beta_chain)),
        ("gamma", Node::matrices(&b.gamma)),
        ("m_psi", Node::matrices(&b.mpsi)),
        ("m_xi", Node::matrices(&b.mxi)),
    ])
}

fn pairing_node(p: &PairingDatum) -> Node {
    Node::obj([
        ("K", Node::matrices(&p.k)),
        ("f", Node::Arr(p.f.iter().map(|&x| Node::Float(x)).collect())),
        ("flavor", Node::Str(p.flavor.name().into())),
        (
            "orientation",
            Node::Str(if p.transposed { "transposed" } else { "standard" }.into()),
        ),
    ])
}

/// Canonical text of a bow file.
pub fn serialize(f: &BowFile) -> Result<String> {
    f.datum.check_shapes()?;
    let mut root = BTreeMap::new();
    root.insert("format".to_string(), Node::Str(BOW_FORMAT.into()));
    root.insert("topology".to_string(), topology_node(&f.datum.topo));
    root.insert("bow".to_string(), bow_node(&f.datum));
    if let Some(p) = &f.pairing {
        root.insert("pairing".to_string(), pairing_node(p));
    }
    if let Some(m) = &f.metadata {
        let mut meta = BTreeMap::new();
        if let Some(s) = m.seed {
            meta.insert("seed".to_string(), Node::Int(s as i64));
        }
        if let Some(p) = &m.provenance {
            meta.insert("provenance".to_string(), Node::Str(p.clone()));
        }
        root.insert("metadata".to_string(), Node::Obj(meta));
    }
    Node::Obj(root).to_canonical()
}

pub fn serialize_topology(t: &TopologicalData) -> Result<String> {
    Node::obj([
        ("format", Node::Str(TOPOLOGY_FORMAT.into())),
        ("topology", topology_node(t)),
    ])
    .to_canonical()
}

fn field(path: &str, message: impl Into<String>) -> Error {
    Error::Field {
        path: path.into(),
        message: message.into(),
    }
}

fn read_json(bytes: &[u8]) -> Result<Value> {
    serde_json::from_slice(bytes).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn get<'a>(v: &'a Value, path: &str, key: &str) -> Result<&'a Value> {
    v.as_object()
        .ok_or_else(|| field(path, "expected an object"))?
        .get(key)
        .ok_or_else(|| field(&join(path, key), "missing"))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| field(path, "expected a number"))
}

fn as_i64(v: &Value, path: &str) -> Result<i64> {
    v.as_i64().ok_or_else(|| field(path, "expected an integer"))
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .and_then(|x| usize::try_from(x).ok())
        .ok_or_else(|| field(path, "expected a nonnegative integer"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| field(path, "expected an array"))
}

fn as_complex(v: &Value, path: &str) -> Result<Complex64> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(c(as_f64(re, path)?, as_f64(im, path)?)),
        _ => Err(field(path, "expected a complex scalar [re, im]")),
    }
}

fn as_matrix(v: &Value, path: &str) -> Result<CMat> {
    if v.is_object() {
        let rows = as_usize(get(v, path, "rows")?, &join(path, "rows"))?;
        let cols = as_usize(get(v, path, "cols")?, &join(path, "cols"))?;
        if rows != 0 && cols != 0 {
            return Err(field(path, "shape records are only for empty matrices"));
        }
        return Ok(CMat::zeros(rows, cols));
    }
    let rows = as_array(v, path)?;
    if rows.is_empty() {
        return Err(field(path, "empty matrices must be written as {rows, cols}"));
    }
    let mut data = Vec::new();
    let mut ncols = None;
    for (r, row) in rows.iter().enumerate() {
        let rpath = format!("{path}[{r}]");
        let row = as_array(row, &rpath)?;
        if *ncols.get_or_insert(row.len()) != row.len() {
            return Err(field(&rpath, "ragged matrix rows"));
        }
        for (j, e) in row.iter().enumerate() {
            data.push(as_complex(e, &format!("{rpath}[{j}]"))?);
        }
    }
    let ncols = ncols.unwrap_or(0);
    if ncols == 0 {
        return Err(field(path, "empty matrices must be written as {rows, cols}"));
    }
    Ok(CMat::from_row_slice(rows.len(), ncols, &data))
}

fn as_matrices(v: &Value, path: &str) -> Result<Vec<CMat>> {
    as_array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, m)| as_matrix(m, &format!("{path}[{i}]")))
        .collect()
}

fn check_format(root: &Value, want: &str) -> Result<()> {
    let fmt = get(root, "", "format")?
        .as_str()
        .ok_or_else(|| field("format", "expected a string"))?;
    if fmt != want {
        return Err(field("format", format!("expected {want:?}, found {fmt:?}")));
    }
    Ok(())
}

fn read_topology(v: &Value, path: &str) -> Result<TopologicalData> {
    let sub = |key: &str| -> Result<(&Value, String)> { Ok((get(v, path, key)?, join(path, key))) };
    let list = |key: &str| -> Result<Vec<(Value, String)>> {
        let (arr, p) = sub(key)?;
        Ok(as_array(arr, &p)?
            .iter()
            .enumerate()
            .map(|(i, x)| (x.clone(), format!("{p}[{i}]")))
            .collect())
    };
    let (n, np) = sub("n")?;
    let (k, kp) = sub("k")?;
    let (ell, ellp) = sub("ell")?;
    let (m0, m0p) = sub("m0")?;
    let t = TopologicalData {
        n: as_usize(n, &np)?,
        k: as_usize(k, &kp)?,
        ell: as_f64(ell, &ellp)?,
        lambda: list("lambda")?.iter().map(|(x, p)| as_f64(x, p)).collect::<Result<_>>()?,
        m: list("m")?.iter().map(|(x, p)| as_i64(x, p)).collect::<Result<_>>()?,
        nd: list("nd")?.iter().map(|(x, p)| as_i64(x, p)).collect::<Result<_>>()?,
        m0: as_i64(m0, &m0p)?,
        z: list("z")?.iter().map(|(x, p)| as_complex(x, p)).collect::<Result<_>>()?,
    };
    t.check_structure()?;
    Ok(t)
}

fn prefix_shape_error(e: Error, prefix: &str) -> Error {
    match e {
        Error::ShapeMismatch {
            field,
            expected,
            found,
        } => Error::ShapeMismatch {
            field: format!("{prefix}.{field}"),
            expected,
            found,
        },
        Error::Field { path, message } => Error::Field {
            path: format!("{prefix}.{path}"),
            message,
        },
        other => other,
    }
}

/// Parses a bow file and checks every matrix shape against the topology.
pub fn parse(bytes: &[u8]) -> Result<BowFile> {
    let root = read_json(bytes)?;
    check_format(&root, BOW_FORMAT)?;
    let topo = read_topology(get(&root, "", "topology")?, "topology")?;
    let dims = compute_dimensions(&topo)?;
    let bow = get(&root, "", "bow")?;
    let mats = |key: &str| as_matrices(get(bow, "bow", key)?, &join("bow", key));
    let datum = BowDatum {
        topo,
        dims,
        beta: mats("beta")?,
        a: mats("A")?,
        alpha: mats("alpha")?,
        gamma: mats("gamma")?,
        beta_chain: mats("beta_chain")?,
        mxi: mats("m_xi")?,
        mpsi: mats("m_psi")?,
    };
    datum.check_shapes().map_err(|e| prefix_shape_error(e, "bow"))?;

    let pairing = match root.get("pairing") {
        None | Some(Value::Null) => None,
        Some(p) => {
            let flavor: Flavor = get(p, "pairing", "flavor")?
                .as_str()
                .ok_or_else(|| field("pairing.flavor", "expected a string"))?
                .parse()?;
            let f = as_array(get(p, "pairing", "f")?, "pairing.f")?
                .iter()
                .enumerate()
                .map(|(i, x)| as_f64(x, &format!("pairing.f[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            let transposed = match p.get("orientation").and_then(Value::as_str) {
                None | Some("standard") => false,
                Some("transposed") => true,
                Some(other) => return Err(field("pairing.orientation", format!("unknown orientation {other:?}"))),
            };
            Some(PairingDatum {
                flavor,
                k: as_matrices(get(p, "pairing", "K")?, "pairing.K")?,
                f,
                transposed,
            })
        }
    };
    let metadata = match root.get("metadata") {
        None | Some(Value::Null) => None,
        Some(m) => Some(Metadata {
            seed: match m.get("seed") {
                None => None,
                Some(s) => Some(
                    s.as_u64()
                        .ok_or_else(|| field("metadata.seed", "expected a nonnegative integer"))?,
                ),
            },
            provenance: match m.get("provenance") {
                None => None,
                Some(s) => Some(
                    s.as_str()
                        .ok_or_else(|| field("metadata.provenance", "expected a string"))?
                        .to_string(),
                ),
            },
        }),
    };
    Ok(BowFile {
        datum,
        pairing,
        metadata,
    })
}

pub fn parse_topology(bytes: &[u8]) -> Result<TopologicalData> {
    let root = read_json(bytes)?;
    check_format(&root, TOPOLOGY_FORMAT)?;
    read_topology(get(&root, "", "topology")?, "topology")
}

/// How the rank changes across a lambda-point.
fn rank_change(before: usize, after: usize) -> &'static str {
    match after.cmp(&before) {
        std::cmp::Ordering::Greater => "increase",
        std::cmp::Ordering::Less => "decrease",
        std::cmp::Ordering::Equal => "continuous",
    }
}

/// The bow complex of a datum laid out on the circle of perimeter `ell`.
///
/// Intervals come in circle order: `[lambda_i, lambda_{i+1}]` with rank
/// `d_i` for `i = 1..n-1`, then `[lambda_n - ell, lambda_1]` subdivided by
/// the p-points, which are placed evenly inside it, with ranks
/// `d_{n,0} = d_n, ..., d_{n,k} = d_0`. The lambda-point `lambda_{i+1}`
/// carries `A_i`, `alpha_i`, `gamma_i`.
pub fn export_bow_complex(b: &BowDatum) -> Result<Node> {
    let rel = crate::bowdata::validate_relations(b, crate::bowdata::DEFAULT_TOL)?;
    if !rel.verdict {
        return Err(Error::Field {
            path: "bow".into(),
            message: format!(
                "datum fails its relations (largest relative residual {:e})",
                rel.max_relative()
            ),
        });
    }
    let t = &b.topo;
    let (n, k) = (b.n(), b.k());
    let lam = &t.lambda;
    let start = lam[n - 1] - t.ell;
    let step = (lam[0] - start) / (k + 1) as f64;
    let p: Vec<f64> = (1..=k).map(|j| start + step * j as f64).collect();

    let interval = |left: (String, f64), right: (String, f64), rank: usize, endo: &CMat| {
        Node::obj([
            ("left", Node::Str(left.0)),
            ("left_position", Node::Float(left.1)),
            ("right", Node::Str(right.0)),
            ("right_position", Node::Float(right.1)),
            ("rank", Node::Int(rank as i64)),
            ("endomorphism", Node::matrix(endo)),
        ])
    };
    let lambda_at = |i: usize| (format!("lambda_{i}"), lam[i - 1]);
    let mut intervals = Vec::new();
    for i in 1..n {
        intervals.push(interval(lambda_at(i), lambda_at(i + 1), b.dims.d[i], &b.beta[i]));
    }
    let mut cuts = vec![(format!("lambda_{n}"), start)];
    cuts.extend(p.iter().enumerate().map(|(j, &x)| (format!("p_{}", j + 1), x)));
    cuts.push(lambda_at(1));
    for j in 0..=k {
        intervals.push(interval(cuts[j].clone(), cuts[j + 1].clone(), b.dims.dn[j], b.beta_n(j)));
    }

    let lambda_points = (0..n)
        .map(|i| {
            let (before, after) = (b.dims.d[i], b.dims.d[i + 1]);
            Node::obj([
                ("name", Node::Str(format!("lambda_{}", i + 1))),
                ("position", Node::Float(lam[i])),
                ("rank_before", Node::Int(before as i64)),
                ("rank_after", Node::Int(after as i64)),
                ("rank_change", Node::Str(rank_change(before, after).into())),
                ("A", Node::matrix(&b.a[i])),
                ("alpha", Node::matrix(&b.alpha[i])),
                ("gamma", Node::matrix(&b.gamma[i])),
            ])
        })
        .collect();
    let p_points = (0..k)
        .map(|j| {
            Node::obj([
                ("name", Node::Str(format!("p_{}", j + 1))),
                ("position", Node::Float(p[j])),
                ("z", Node::complex(t.z[j])),
                ("m_xi", Node::matrix(&b.mxi[j])),
                ("m_psi", Node::matrix(&b.mpsi[j])),
            ])
        })
        .collect();
    Ok(Node::obj([
        ("format", Node::Str(EXPORT_FORMAT.into())),
        ("perimeter", Node::Float(t.ell)),
        ("lambda_ranks", Node::Arr(b.dims.d.iter().map(|&x| Node::Int(x as i64)).collect())),
        ("p_chain_ranks", Node::Arr(b.dims.dn.iter().map(|&x| Node::Int(x as i64)).collect())),
        ("intervals", Node::Arr(intervals)),
        ("lambda_points", Node::Arr(lambda_points)),
        ("p_points", Node::Arr(p_points)),
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{canonical_example, canonical_examples};

    fn file_of(name: &str) -> BowFile {
        let e = canonical_example(name).unwrap();
        BowFile {
            datum: e.datum,
            pairing: e.pairing,
            metadata: Some(Metadata {
                seed: Some(7),
                provenance: Some(format!("canonical:{name}")),
            }),
        }
    }

    #[test]
    fn canonical_examples_round_trip() {
        for e in canonical_examples() {
            let f = file_of(e.name);
            let text = serialize(&f).unwrap();
            let back = parse(text.as_bytes()).unwrap();
            assert_eq!(back, f, "{}", e.name);
            assert_eq!(serialize(&back).unwrap(), text, "{}", e.name);
        }
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        let x = 0.1 + 0.2;
        let text = Node::Float(x).to_canonical().unwrap();
        assert_eq!(text, "3.0000000000000004e-1\n");
        assert_eq!(text.trim().parse::<f64>().unwrap(), x);
        assert!(Node::Float(f64::NAN).to_canonical().is_err());
    }

    #[test]
    fn complex_scalars_are_pairs() {
        let v: Value = serde_json::from_str("[1.0, -2.0]").unwrap();
        assert_eq!(as_complex(&v, "x").unwrap(), c(1.0, -2.0));
        let text = Node::complex(c(1.0, -2.0)).to_canonical().unwrap();
        assert_eq!(text, "[1.0000000000000000e0, -2.0000000000000000e0]\n");
    }

    #[test]
    fn empty_matrices_are_shape_records() {
        let text = Node::matrix(&CMat::zeros(0, 3)).to_canonical().unwrap();
        assert!(text.contains("\"cols\": 3") && text.contains("\"rows\": 0"));
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(as_matrix(&v, "m").unwrap().shape(), (0, 3));
        let bad: Value = serde_json::from_str("{\"rows\": 2, \"cols\": 2}").unwrap();
        assert!(as_matrix(&bad, "m").is_err());
    }

    #[test]
    fn shape_errors_name_the_field() {
        // u2-basic has d = (2, 2, 1), so A[0] must be 2 x 2; make A[1] 2 x 2
        // where 1 x 2 is required.
        let f = file_of("u2-basic");
        let mut v: Value = serde_json::from_str(&serialize(&f).unwrap()).unwrap();
        let row = v["bow"]["A"][1][0].clone();
        v["bow"]["A"][1] = Value::Array(vec![row.clone(), row]);
        let err = parse(serde_json::to_string(&v).unwrap().as_bytes()).unwrap_err();
        match err {
            Error::ShapeMismatch {
                field,
                expected,
                found,
            } => {
                assert_eq!(field, "bow.A[1]");
                assert_eq!((expected, found), ((1, 2), (2, 2)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn first_matrix_shape_error() {
        let f = file_of("u1-charge");
        let mut v: Value = serde_json::from_str(&serialize(&f).unwrap()).unwrap();
        let row = v["bow"]["A"][0][0].clone();
        let wide = Value::Array(vec![row[0].clone(), row[0].clone()]);
        v["bow"]["A"][0] = Value::Array(vec![wide.clone(), wide]);
        let err = parse(serde_json::to_string(&v).unwrap().as_bytes()).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { ref field, .. } if field.ends_with("A[0]")), "{err:?}");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse(b"{\n  \"format\": \"bowforge/1\",\n  oops\n}").unwrap_err();
        match err {
            Error::Syntax { line, column, .. } => assert_eq!((line, column), (3, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_format_tag_is_rejected() {
        let text = serialize(&file_of("u1-charge")).unwrap().replace("bowforge/1", "other/9");
        assert!(matches!(parse(text.as_bytes()), Err(Error::Field { ref path, .. }) if path == "format"));
    }

    #[test]
    fn missing_fields_are_named() {
        let f = file_of("u1-charge");
        let mut v: Value = serde_json::from_str(&serialize(&f).unwrap()).unwrap();
        v["topology"].as_object_mut().unwrap().remove("nd");
        let err = parse(serde_json::to_string(&v).unwrap().as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Field { ref path, .. } if path == "topology.nd"), "{err:?}");
    }

    #[test]
    fn topology_round_trip() {
        let t = canonical_example("u2-basic").unwrap().topo;
        let text = serialize_topology(&t).unwrap();
        let back = parse_topology(text.as_bytes()).unwrap();
        assert_eq!(back, t);
        assert_eq!(serialize_topology(&back).unwrap(), text);
    }

    fn field_of<'a>(n: &'a Node, key: &str) -> &'a Node {
        match n {
            Node::Obj(m) => &m[key],
            _ => panic!("not an object"),
        }
    }

    fn ranks(doc: &Node) -> Vec<i64> {
        match field_of(doc, "intervals") {
            Node::Arr(items) => items
                .iter()
                .map(|it| match field_of(it, "rank") {
                    Node::Int(r) => *r,
                    _ => panic!(),
                })
                .collect(),
            _ => panic!(),
        }
    }

    #[test]
    fn export_single_nut() {
        let b = canonical_example("u1-single-nut").unwrap().datum;
        let doc = export_bow_complex(&b).unwrap();
        assert_eq!(ranks(&doc), [0, 1]);
        let Node::Arr(items) = field_of(&doc, "intervals") else { panic!() };
        assert_eq!(field_of(&items[1], "endomorphism"), &Node::matrix(&b.beta[0]));
        assert_eq!(field_of(&items[1], "right"), &Node::Str("lambda_1".into()));
    }

    #[test]
    fn export_u2_basic() {
        let b = canonical_example("u2-basic").unwrap().datum;
        let doc = export_bow_complex(&b).unwrap();
        assert_eq!(ranks(&doc), [2, 1, 2]);
        assert_eq!(
            field_of(&doc, "lambda_ranks"),
            &Node::Arr(vec![Node::Int(2), Node::Int(2), Node::Int(1)])
        );
        assert_eq!(field_of(&doc, "p_chain_ranks"), &Node::Arr(vec![Node::Int(1), Node::Int(2)]));
        let Node::Arr(points) = field_of(&doc, "lambda_points") else { panic!() };
        assert_eq!(points.len(), 2);
        assert_eq!(field_of(&points[0], "A"), &Node::matrix(&b.a[0]));
        assert_eq!(field_of(&points[1], "rank_change"), &Node::Str("decrease".into()));
        assert!(doc.to_canonical().is_ok());
    }

    #[test]
    fn export_empty_charge() {
        let b = BowDatum::zeros(crate::generator::standard_topology(&[0, 0], &[0], 0)).unwrap();
        let doc = export_bow_complex(&b).unwrap();
        assert!(ranks(&doc).iter().all(|&r| r == 0));
        let text = doc.to_canonical().unwrap();
        assert!(serde_json::from_str::<Value>(&text).is_ok());
    }

    #[test]
    fn export_refuses_broken_data() {
        let mut b = canonical_example("u2-basic").unwrap().datum;
        b.a[0][(0, 0)] += c(1.0, 0.0);
        assert!(export_bow_complex(&b).is_err());
    }
}
