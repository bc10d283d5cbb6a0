use serde::{Deserialize, Serialize};

use super::CallSurface;

/// Default floor on ∂²C/∂x² below which σ is not recovered.
pub const CURVATURE_FLOOR: f64 = 1e-8;

/// Outcome of a Dupire inversion at one grid node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SigmaRecovery {
    Value { sigma: f64, t: f64, x: f64 },
    Undefined { reason: String, t: f64, x: f64 },
}

impl SigmaRecovery {
    pub fn value(&self) -> Option<f64> {
        match self {
            SigmaRecovery::Value { sigma, .. } => Some(*sigma),
            SigmaRecovery::Undefined { .. } => None,
        }
    }
}

/// σ(t,x) with σ² = 2 ∂_tC / ∂_xxC at the grid node nearest (t, x).
///
/// ∂_tC is a central difference in t (backward on the last row) and ∂_xxC
/// the three-point second difference on the row itself.
pub fn dupire_sigma(c: &CallSurface, t: f64, x: f64, floor: f64) -> SigmaRecovery {
    let g = &c.grid;
    let ts = g.t_nodes();
    let xs = g.x_nodes();
    let nearest = |nodes: &[f64], v: f64| {
        (0..nodes.len()).min_by(|&a, &b| (nodes[a] - v).abs().total_cmp(&(nodes[b] - v).abs())).unwrap()
    };
    let (i, j) = (nearest(ts, t), nearest(xs, x));
    let (tn, xn) = (ts[i], xs[j]);
    let undefined = |reason: String| SigmaRecovery::Undefined { reason, t: tn, x: xn };
    if i == 0 || j == 0 || j + 1 >= xs.len() {
        return undefined("not an interior grid node".into());
    }
    let c_t = if i + 1 < ts.len() {
        (g.at(i + 1, j) - g.at(i - 1, j)) / (ts[i + 1] - ts[i - 1])
    } else {
        (g.at(i, j) - g.at(i - 1, j)) / (ts[i] - ts[i - 1])
    };
    let (hm, hp) = (xs[j] - xs[j - 1], xs[j + 1] - xs[j]);
    let c_xx = 2.0 * ((g.at(i, j + 1) - g.at(i, j)) / hp - (g.at(i, j) - g.at(i, j - 1)) / hm) / (hm + hp);
    if !(c_xx > floor) {
        return undefined(format!("curvature {c_xx:e} at or below floor {floor:e}"));
    }
    if c_t < 0.0 {
        return undefined(format!("negative time derivative {c_t:e}"));
    }
    SigmaRecovery::Value { sigma: (2.0 * c_t / c_xx).sqrt(), t: tn, x: xn }
}

/// p_t(x_j) = ∂_xxC at one t-node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySlice {
    pub t: f64,
    pub x_nodes: Vec<f64>,
    /// Nonnegative; zero at the two end nodes.
    pub values: Vec<f64>,
    /// Σ p_j·w_j over interior nodes, w_j the half-cell widths.
    pub mass: f64,
    /// Mass removed by clipping negative second differences.
    pub clipped_mass: f64,
}

impl DensitySlice {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> crate::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "density"])?;
        for (x, p) in self.x_nodes.iter().zip(&self.values) {
            out.write_record(&[x.to_string(), p.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Second divided differences of C(t,·) at the row holding t, clipped at 0.
pub fn density(c: &CallSurface, t: f64) -> DensitySlice {
    let g = &c.grid;
    let i = g.row_index(t);
    let xs = g.x_nodes();
    let m = xs.len();
    let mut values = vec![0.0; m];
    let (mut mass, mut clipped) = (0.0, 0.0);
    for j in 1..m.saturating_sub(1) {
        let w = 0.5 * (xs[j + 1] - xs[j - 1]);
        let jump = g.segment_slope(i, j) - g.segment_slope(i, j - 1);
        let p = jump / w;
        if p < 0.0 {
            clipped -= jump;
        } else {
            values[j] = p;
            mass += jump;
        }
    }
    DensitySlice { t: g.t_nodes()[i], x_nodes: xs.to_vec(), values, mass, clipped_mass: clipped }
}
