//! Lattices in the quarter plane and the values of `u(t, x)` on them.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::LambdaParam;
use crate::scalar::Scalar;

/// Geometric ratio used by `a:b:geometric` node specs.
pub const DEFAULT_GEOMETRIC_RATIO: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    PoissonExtension,
    DiskExtension,
    Analytic,
    FdSolution,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::PoissonExtension => "poisson_extension",
            Provenance::DiskExtension => "disk_extension",
            Provenance::Analytic => "analytic",
            Provenance::FdSolution => "fd_solution",
        }
    }
}

/// `n` equispaced nodes from `a` to `b` inclusive.
pub fn uniform_nodes<T: Scalar>(a: T, b: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![a];
    }
    let h = (b - a) / T::from_usize_lossy(n - 1);
    (0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                a + h * T::from_usize_lossy(i)
            }
        })
        .collect()
}

/// Nodes `a, a q, a q², …` up to and including `b`, with the last step
/// shortened to land on `b`.
pub fn geometric_nodes<T: Scalar>(a: T, b: T, ratio: T) -> Result<Vec<T>> {
    if !(a > T::zero()) || !(b > a) || !(ratio > T::one()) {
        return Err(LabError::invalid(format!(
            "geometric nodes need 0 < a < b and ratio > 1 (a={a}, b={b}, ratio={ratio})"
        )));
    }
    let n = ((b / a).ln() / ratio.ln()).ceil().to_usize().unwrap_or(0);
    let mut out: Vec<T> = (0..n).map(|k| a * ratio.powi(k as i32)).collect();
    out.retain(|&v| v < b);
    out.push(b);
    Ok(out)
}

/// Node-set description as used on the command line:
/// `a:b:n` (uniform), `a:b:geometric` or `a:b:geometric:ratio`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeSpec {
    Uniform { a: f64, b: f64, n: usize },
    Geometric { a: f64, b: f64, ratio: f64 },
}

impl NodeSpec {
    pub fn nodes(&self) -> Result<Vec<f64>> {
        match *self {
            NodeSpec::Uniform { a, b, n } => {
                if n < 2 || !(b > a) {
                    return Err(LabError::invalid(format!(
                        "uniform nodes need n >= 2 and a < b (got {a}:{b}:{n})"
                    )));
                }
                Ok(uniform_nodes(a, b, n))
            }
            NodeSpec::Geometric { a, b, ratio } => geometric_nodes(a, b, ratio),
        }
    }
}

impl FromStr for NodeSpec {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |p: &str| -> Result<f64> {
            p.parse::<f64>()
                .map_err(|_| LabError::invalid(format!("bad number '{p}' in node spec '{s}'")))
        };
        match parts.as_slice() {
            [a, b, "geometric"] => Ok(NodeSpec::Geometric {
                a: num(a)?,
                b: num(b)?,
                ratio: DEFAULT_GEOMETRIC_RATIO,
            }),
            [a, b, "geometric", r] => Ok(NodeSpec::Geometric {
                a: num(a)?,
                b: num(b)?,
                ratio: num(r)?,
            }),
            [a, b, n] => Ok(NodeSpec::Uniform {
                a: num(a)?,
                b: num(b)?,
                n: n.parse().map_err(|_| {
                    LabError::invalid(format!("bad node count '{n}' in node spec '{s}'"))
                })?,
            }),
            _ => Err(LabError::invalid(format!(
                "node spec '{s}' must be a:b:n, a:b:geometric or a:b:geometric:ratio"
            ))),
        }
    }
}

/// `u(tᵢ, xⱼ)` on a tensor lattice; rows are indexed by `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicGrid<T> {
    pub t_nodes: Vec<T>,
    pub x_nodes: Vec<T>,
    pub values: Array2<T>,
    pub lambda: LambdaParam<T>,
    pub provenance: Provenance,
}

fn check_axis<T: Scalar>(name: &str, nodes: &[T], allow_zero: bool) -> Result<()> {
    if nodes.is_empty() {
        return Err(LabError::invalid(format!("{name} is empty")));
    }
    let first_ok = if allow_zero {
        nodes[0] >= T::zero()
    } else {
        nodes[0] > T::zero()
    };
    if !first_ok || nodes.windows(2).any(|w| !(w[0] < w[1])) || !nodes[nodes.len() - 1].is_finite()
    {
        return Err(LabError::invalid(format!(
            "{name} must be increasing and positive"
        )));
    }
    Ok(())
}

impl<T: Scalar> HarmonicGrid<T> {
    pub fn new(
        t_nodes: Vec<T>,
        x_nodes: Vec<T>,
        values: Array2<T>,
        lambda: LambdaParam<T>,
        provenance: Provenance,
    ) -> Result<Self> {
        check_axis("t_nodes", &t_nodes, false)?;
        check_axis("x_nodes", &x_nodes, true)?;
        if values.dim() != (t_nodes.len(), x_nodes.len()) {
            return Err(LabError::invalid(format!(
                "values have shape {:?}, lattice is {}x{}",
                values.dim(),
                t_nodes.len(),
                x_nodes.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite("harmonic grid values"));
        }
        Ok(Self {
            t_nodes,
            x_nodes,
            values,
            lambda,
            provenance,
        })
    }

    /// Tabulates `u` on the lattice.
    pub fn from_fn<F: Fn(T, T) -> T>(
        t_nodes: Vec<T>,
        x_nodes: Vec<T>,
        lambda: LambdaParam<T>,
        provenance: Provenance,
        u: F,
    ) -> Result<Self> {
        let values = Array2::from_shape_fn((t_nodes.len(), x_nodes.len()), |(i, j)| {
            u(t_nodes[i], x_nodes[j])
        });
        Self::new(t_nodes, x_nodes, values, lambda, provenance)
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `c · u`.
    pub fn scaled(&self, c: T) -> Self {
        let mut out = self.clone();
        out.values.mapv_inplace(|v| v * c);
        out
    }

    /// Index of `v` in `nodes` if it is a node up to a relative `1e-12`.
    pub fn t_index(&self, t: T) -> Option<usize> {
        find_node(&self.t_nodes, t)
    }

    pub fn x_index(&self, x: T) -> Option<usize> {
        find_node(&self.x_nodes, x)
    }

    /// Bilinear interpolation; `None` outside the lattice.
    pub fn interpolate(&self, t: T, x: T) -> Option<T> {
        bilinear(&self.t_nodes, &self.x_nodes, &self.values, t, x)
    }
}

/// Bilinear interpolation of `values` on the tensor lattice.
pub(crate) fn bilinear<T: Scalar>(
    t_nodes: &[T],
    x_nodes: &[T],
    values: &Array2<T>,
    t: T,
    x: T,
) -> Option<T> {
    let (i, s) = bracket(t_nodes, t)?;
    let (j, r) = bracket(x_nodes, x)?;
    let v = values;
    let one = T::one();
    let i1 = (i + 1).min(t_nodes.len() - 1);
    let j1 = (j + 1).min(x_nodes.len() - 1);
    Some(
        (one - s) * ((one - r) * v[[i, j]] + r * v[[i, j1]])
            + s * ((one - r) * v[[i1, j]] + r * v[[i1, j1]]),
    )
}

fn find_node<T: Scalar>(nodes: &[T], v: T) -> Option<usize> {
    let tol = T::lit(1e-12) * v.abs().max(T::one());
    let k = nodes.partition_point(|&n| n < v - tol);
    (k < nodes.len() && (nodes[k] - v).abs() <= tol).then_some(k)
}

fn bracket<T: Scalar>(nodes: &[T], v: T) -> Option<(usize, T)> {
    let n = nodes.len();
    if n == 1 {
        return (v == nodes[0]).then_some((0, T::zero()));
    }
    if v < nodes[0] || v > nodes[n - 1] {
        return None;
    }
    let k = nodes.partition_point(|&s| s <= v).clamp(1, n - 1) - 1;
    Some((k, (v - nodes[k]) / (nodes[k + 1] - nodes[k])))
}

/// Fixed 9-significant-digit rendering used in every CSV.
pub fn csv_float(v: f64) -> String {
    format!("{v:.8e}")
}

impl HarmonicGrid<f64> {
    /// CSV with a header row `t\x,x₀,x₁,…` followed by one row per `t`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t\\x".to_string()];
        header.extend(self.x_nodes.iter().map(|&x| csv_float(x)));
        w.write_record(&header)?;
        for (i, &t) in self.t_nodes.iter().enumerate() {
            let mut row = vec![csv_float(t)];
            row.extend(self.values.row(i).iter().map(|&v| csv_float(v)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV layout of [`write_csv`](Self::write_csv).
    pub fn read_csv<R: Read>(
        input: R,
        lambda: LambdaParam<f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(input);
        let mut rows = r.records();
        let header = rows
            .next()
            .ok_or_else(|| LabError::invalid("empty grid csv"))??;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| LabError::invalid(format!("bad number '{s}'")))
        };
        let x_nodes = header
            .iter()
            .skip(1)
            .map(parse)
            .collect::<Result<Vec<_>>>()?;
        let mut t_nodes = Vec::new();
        let mut flat = Vec::new();
        for rec in rows {
            let rec = rec?;
            if rec.len() != x_nodes.len() + 1 {
                return Err(LabError::invalid("ragged grid csv"));
            }
            t_nodes.push(parse(&rec[0])?);
            for s in rec.iter().skip(1) {
                flat.push(parse(s)?);
            }
        }
        let values = Array2::from_shape_vec((t_nodes.len(), x_nodes.len()), flat)
            .map_err(|e| LabError::invalid(e.to_string()))?;
        Self::new(t_nodes, x_nodes, values, lambda, provenance)
    }

    /// JSON envelope carrying λ and provenance; floats use 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| {
            v.iter()
                .map(|&x| crate::report::json_float(x))
                .collect::<Vec<_>>()
                .join(",")
        };
        let _ = write!(
            s,
            "{{\"lambda\":{},\"provenance\":\"{}\",\"t_nodes\":[{}],\"x_nodes\":[{}],\"values\":[",
            crate::report::json_float(self.lambda.get()),
            self.provenance.as_str(),
            list(&self.t_nodes),
            list(&self.x_nodes)
        );
        for (i, row) in self.values.rows().into_iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "[{}]", list(row.as_slice().unwrap_or(&row.to_vec())));
        }
        s.push_str("]}");
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Envelope {
            lambda: f64,
            provenance: Provenance,
            t_nodes: Vec<f64>,
            x_nodes: Vec<f64>,
            values: Vec<Vec<f64>>,
        }
        let e: Envelope = serde_json::from_str(s)?;
        let flat: Vec<f64> = e.values.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((e.values.len(), e.x_nodes.len()), flat)
            .map_err(|err| LabError::invalid(err.to_string()))?;
        Self::new(
            e.t_nodes,
            e.x_nodes,
            values,
            LambdaParam::new(e.lambda)?,
            e.provenance,
        )
    }
}
